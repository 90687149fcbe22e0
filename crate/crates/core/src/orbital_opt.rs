//! Orbital-optimized pCCD: minimize the projected pCCD energy over orbital
//! rotations `C = exp(kappa)`.
//!
//! The gradient is taken by central differences on the independent entries
//! of `kappa`. Steps come from Adam moment estimates, clipped to a trust
//! radius that shrinks when a step raises the energy (the step is then
//! rejected and the moments are reset) and grows after each accepted step.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrals::{rotate_orbitals, IntegralSet, OrbitalRotation};
use crate::linalg::{ground_state, EigenConfig};
use crate::pairspace::{doci_matrix_capped, solve_pccd_with, AmplitudeMatrix, PccdConfig, PccdSolution};
use crate::report::field;

#[derive(Debug, Clone)]
pub struct OoConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub trust_radius: f64,
    pub max_trust_radius: f64,
    pub trust_grow: f64,
    pub trust_shrink: f64,
    /// Stop once the largest gradient component is below this.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
    /// Orbitals allowed to rotate among themselves; `None` rotates all.
    pub active: Option<Vec<usize>>,
    pub pccd: PccdConfig,
    /// Extra descents from random rotations, for landscapes with several minima.
    pub restarts: usize,
    pub restart_seed: u64,
    /// Restart parameters are drawn uniformly from `[-scale, scale]`.
    pub restart_scale: f64,
    /// Relative amount by which a final pCCD energy may undercut DOCI.
    pub collapse_tolerance: f64,
}

impl Default for OoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            trust_radius: 0.2,
            max_trust_radius: 0.5,
            trust_grow: 1.2,
            trust_shrink: 0.5,
            gradient_tolerance: 1e-5,
            max_iterations: 500,
            fd_step: 1e-4,
            active: None,
            pccd: PccdConfig::default(),
            restarts: 0,
            restart_seed: 0,
            restart_scale: 0.5,
            collapse_tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub trust_radius: f64,
}

#[derive(Debug, Clone)]
pub struct OoPccdResult {
    pub rotation: OrbitalRotation,
    pub integrals: IntegralSet,
    pub solution: PccdSolution,
    /// Energy at the current point after each iteration, starting with the
    /// unrotated energy.
    pub energy_trace: Vec<f64>,
    pub trace: Vec<TraceRow>,
    /// Largest gradient component at the returned point.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// pCCD energy in the orbitals `exp(kappa)`.
pub fn pccd_energy_at(rot: &OrbitalRotation, ints: &IntegralSet) -> Result<f64> {
    Ok(solve_at(rot, ints, &PccdConfig::default(), None)?.energy)
}

fn solve_at(
    rot: &OrbitalRotation,
    ints: &IntegralSet,
    cfg: &PccdConfig,
    warm: Option<&AmplitudeMatrix>,
) -> Result<PccdSolution> {
    let rotated = rotate_orbitals(ints, rot)?;
    match solve_pccd_with(&rotated, cfg, warm) {
        Ok(sol) => Ok(sol),
        Err(e) if warm.is_some() => solve_pccd_with(&rotated, cfg, None).map_err(|_| e),
        Err(e) => Err(e),
    }
}

struct Evaluator<'a> {
    ints: &'a IntegralSet,
    template: OrbitalRotation,
    cfg: &'a OoConfig,
}

impl Evaluator<'_> {
    fn rotation(&self, x: &[f64]) -> OrbitalRotation {
        let mut rot = self.template.clone();
        rot.set_params(x);
        rot
    }

    fn solve(&self, x: &[f64], warm: Option<&AmplitudeMatrix>) -> Result<PccdSolution> {
        solve_at(&self.rotation(x), self.ints, &self.cfg.pccd, warm)
    }

    fn gradient(&self, x: &[f64], warm: &AmplitudeMatrix) -> Result<Vec<f64>> {
        let h = self.cfg.fd_step;
        (0..x.len())
            .into_par_iter()
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                let ep = self.solve(&xp, Some(warm))?.energy;
                let em = self.solve(&xm, Some(warm))?.energy;
                Ok((ep - em) / (2.0 * h))
            })
            .collect()
    }
}

/// One descent from `x0`.
struct Run {
    x: Vec<f64>,
    sol: PccdSolution,
    energy_trace: Vec<f64>,
    trace: Vec<TraceRow>,
    gnorm: f64,
    converged: bool,
    iterations: usize,
}

fn descend(eval: &Evaluator, x0: Vec<f64>) -> Result<Run> {
    let cfg = eval.cfg;
    let n = x0.len();
    let mut x = x0;
    let mut sol = eval.solve(&x, None)?;
    let mut energy_trace = vec![sol.energy];
    let mut trace = Vec::new();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut trust = cfg.trust_radius;
    let mut adam_t = 0;
    let mut gradient: Option<Vec<f64>> = None;
    let mut gnorm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let g = match gradient.take() {
            Some(g) => g,
            None => eval.gradient(&x, &sol.amplitudes)?,
        };
        gnorm = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if gnorm < cfg.gradient_tolerance {
            converged = true;
            trace.push(TraceRow {
                iteration: iterations,
                energy: sol.energy,
                gradient_norm: gnorm,
                trust_radius: trust,
            });
            break;
        }

        let t = (adam_t + 1) as f64;
        let mut m_new = m.clone();
        let mut v_new = v.clone();
        let mut step = vec![0.0; n];
        for k in 0..n {
            m_new[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v_new[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let mh = m_new[k] / (1.0 - cfg.beta1.powf(t));
            let vh = v_new[k] / (1.0 - cfg.beta2.powf(t));
            step[k] = -cfg.learning_rate * mh / (vh.sqrt() + cfg.epsilon);
        }
        let len = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        if len > trust {
            step.iter_mut().for_each(|s| *s *= trust / len);
        }
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let accepted = match eval.solve(&trial, Some(&sol.amplitudes)) {
            Ok(s) if s.energy < sol.energy => Some(s),
            _ => None,
        };
        match accepted {
            Some(s) => {
                x = trial;
                sol = s;
                m = m_new;
                v = v_new;
                adam_t += 1;
                trust = (trust * cfg.trust_grow).min(cfg.max_trust_radius);
            }
            None => {
                // stale momentum can point uphill; restart Adam from the current gradient
                trust *= cfg.trust_shrink;
                m.fill(0.0);
                v.fill(0.0);
                adam_t = 0;
                gradient = Some(g);
            }
        }
        energy_trace.push(sol.energy);
        trace.push(TraceRow { iteration: iterations, energy: sol.energy, gradient_norm: gnorm, trust_radius: trust });
        if trust < 1e-12 {
            // no downhill step at any radius: the gradient is noise-limited
            break;
        }
    }
    Ok(Run { x, sol, energy_trace, trace, gnorm, converged, iterations })
}

/// pCCD is not variational, and some rotations send its energy far below the
/// DOCI energy in the same orbitals. Such points are rejected.
fn reject_collapse(eval: &Evaluator, run: Run) -> Result<Run> {
    let rotated = rotate_orbitals(eval.ints, &eval.rotation(&run.x))?;
    let doci = match doci_matrix_capped(&rotated, eval.cfg.pccd.cap) {
        Ok(m) => ground_state(&m, &EigenConfig::default())?.energy,
        Err(Error::SizeCap { .. }) => return Ok(run),
        Err(e) => return Err(e),
    };
    let margin = eval.cfg.collapse_tolerance * doci.abs().max(1.0);
    if run.sol.energy < doci - margin {
        return Err(Error::Contract(format!(
            "pCCD energy {} is below the DOCI energy {} in the same orbitals",
            field(run.sol.energy),
            field(doci)
        )));
    }
    Ok(run)
}

/// Minimizes the pCCD energy over orbital rotations. The first descent starts
/// from the given orbitals; `cfg.restarts` further descents start from seeded
/// random rotations and the lowest final energy wins (ties keep the earlier
/// start). Descents whose pCCD solve fails or collapses below DOCI are skipped.
pub fn optimize_orbitals(ints: &IntegralSet, cfg: &OoConfig) -> Result<OoPccdResult> {
    let template = OrbitalRotation::with_active(ints.norb, cfg.active.clone());
    let eval = Evaluator { ints, template, cfg };
    let n = eval.template.parameter_pairs().len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.restart_seed);
    let mut starts = vec![vec![0.0; n]];
    for _ in 0..cfg.restarts {
        starts.push((0..n).map(|_| rng.gen_range(-cfg.restart_scale..=cfg.restart_scale)).collect());
    }
    let runs: Vec<Result<Run>> = starts.into_par_iter().map(|x0| descend(&eval, x0)).collect();
    let mut first_err = None;
    let mut best: Option<Run> = None;
    for r in runs {
        let r = r.and_then(|run| reject_collapse(&eval, run));
        match r {
            Ok(run) if best.as_ref().is_none_or(|b| run.sol.energy < b.sol.energy - 1e-10) => best = Some(run),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(run) = best else { return Err(first_err.expect("at least one start")) };

    let rotation = eval.rotation(&run.x);
    let integrals = rotate_orbitals(ints, &rotation)?;
    Ok(OoPccdResult {
        rotation,
        integrals,
        solution: run.sol,
        energy_trace: run.energy_trace,
        trace: run.trace,
        gradient_norm: run.gnorm,
        converged: run.converged,
        iterations: run.iterations,
    })
}

/// CSV with header `iteration,energy,gradient_norm,trust_radius`.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iteration,energy,gradient_norm,trust_radius\n");
    for r in rows {
        let _ =
            writeln!(out, "{},{},{},{}", r.iteration, field(r.energy), field(r.gradient_norm), field(r.trust_radius));
    }
    out
}
