//! Seniority-zero machinery: pair determinants, the DOCI Hamiltonian, the
//! pCCD wave function `exp(T)|ref>` and its projected amplitude equations.
//!
//! A pair determinant is a bitmask over spatial orbitals; bit `p` set means
//! orbital `p` is doubly occupied. Pair excitations are hard-core bosons, so
//! all pCCD quantities are evaluated directly in this space.

use std::borrow::Cow;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bits::{binomial, combinations, ones, rank};
use crate::error::{Error, Result};
use crate::exactref::{CiVector, QubitState, SlaterDeterminant, ToQubitState};
use crate::integrals::IntegralSet;
use crate::linalg::SparseMatrix;

pub const DEFAULT_PAIR_CAP: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairDeterminant(pub u64);

impl PairDeterminant {
    pub fn reference(npairs: usize) -> Self {
        Self((1u64 << npairs) - 1)
    }

    pub fn npairs(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn slater(&self) -> SlaterDeterminant {
        SlaterDeterminant::new(self.0, self.0)
    }

    pub fn ket(&self, norb: usize) -> String {
        self.slater().ket(norb)
    }
}

/// All `C(norb, npairs)` pair determinants, ascending; the reference comes first.
pub fn enumerate_pair_basis(norb: usize, npairs: usize) -> Vec<PairDeterminant> {
    combinations(norb, npairs).into_iter().map(PairDeterminant).collect()
}

/// Position of a pair determinant in [`enumerate_pair_basis`].
pub fn pair_index(det: PairDeterminant) -> usize {
    rank(det.0)
}

/// Coefficients over the full pair basis of `norb` orbitals and `npairs` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStateVector {
    pub norb: usize,
    pub npairs: usize,
    pub coefficients: Vec<f64>,
}

impl PairStateVector {
    pub fn zeros(norb: usize, npairs: usize) -> Self {
        Self { norb, npairs, coefficients: vec![0.0; binomial(norb, npairs)] }
    }

    pub fn reference(norb: usize, npairs: usize) -> Self {
        let mut v = Self::zeros(norb, npairs);
        v.coefficients[0] = 1.0;
        v
    }

    pub fn get(&self, det: PairDeterminant) -> f64 {
        self.coefficients[pair_index(det)]
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::dot(&self.coefficients, &self.coefficients).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        crate::linalg::normalize(&mut out.coefficients);
        out
    }

    pub fn dot(&self, other: &Self) -> f64 {
        crate::linalg::dot(&self.coefficients, &other.coefficients)
    }

    /// `|<a|b>|` of the normalized vectors.
    pub fn overlap(&self, other: &Self) -> f64 {
        (self.dot(other) / (self.norm() * other.norm())).abs()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairDeterminant, f64)> + '_ {
        enumerate_pair_basis(self.norb, self.npairs).into_iter().zip(self.coefficients.iter().copied())
    }
}

impl ToQubitState for PairStateVector {
    fn to_qubit_state(&self) -> Result<Cow<'_, QubitState>> {
        let n_qubits = 2 * self.norb;
        if n_qubits > 30 {
            return Err(Error::SizeCap { dim: n_qubits, cap: 30 });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        for (det, c) in self.iter() {
            amplitudes[det.slater().qubit_index()] = Complex64::new(c, 0.0);
        }
        Ok(Cow::Owned(QubitState { n_qubits, amplitudes }))
    }
}

/// `|<pair|ci>|` of the normalized states, without building the full register.
pub fn overlap_with_ci(pair: &PairStateVector, ci: &CiVector) -> f64 {
    let dot: f64 = pair.iter().map(|(det, c)| c * ci.coefficient(&det.slater())).sum();
    (dot / (pair.norm() * ci.norm())).abs().min(1.0)
}

/// pCCD amplitudes `t[i][a]`; rows are the occupied orbitals `0..npairs`,
/// columns the virtual orbitals `npairs..norb`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMatrix {
    pub norb: usize,
    pub npairs: usize,
    pub values: DMatrix<f64>,
}

impl AmplitudeMatrix {
    pub fn zeros(norb: usize, npairs: usize) -> Self {
        Self { norb, npairs, values: DMatrix::zeros(npairs, norb - npairs) }
    }

    /// Builds from `(i, a, t)` triples with global orbital indices.
    pub fn from_entries(norb: usize, npairs: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if npairs > norb {
            return Err(Error::InvalidInput(format!("{npairs} pairs do not fit in {norb} orbitals")));
        }
        let mut t = Self::zeros(norb, npairs);
        for &(i, a, v) in entries {
            t.set(i, a, v)?;
        }
        Ok(t)
    }

    pub fn occupied(&self) -> std::ops::Range<usize> {
        0..self.npairs
    }

    pub fn virtuals(&self) -> std::ops::Range<usize> {
        self.npairs..self.norb
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.values[(i, a - self.npairs)]
    }

    pub fn set(&mut self, i: usize, a: usize, v: f64) -> Result<()> {
        if i >= self.npairs || a < self.npairs || a >= self.norb {
            return Err(Error::InvalidInput(format!(
                "amplitude ({i}, {a}) is not an occupied->virtual pair for {} pairs in {} orbitals",
                self.npairs, self.norb
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("amplitude ({i}, {a}) is not finite")));
        }
        self.values[(i, a - self.npairs)] = v;
        Ok(())
    }

    /// Nonzero `(i, a, t)` entries, ordered by `(i, a)`.
    pub fn nonzero(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in self.occupied() {
            for a in self.virtuals() {
                let v = self.get(i, a);
                if v != 0.0 {
                    out.push((i, a, v));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn as_params(&self) -> Vec<f64> {
        // row-major over (i, a)
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.values.nrows() {
            for j in 0..self.values.ncols() {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    fn from_params(norb: usize, npairs: usize, p: &[f64]) -> Self {
        let nv = norb - npairs;
        Self { norb, npairs, values: DMatrix::from_fn(npairs, nv, |i, j| p[i * nv + j]) }
    }
}

/// Amplitude file: `# norb=N npairs=P` then one `i a value` line per nonzero entry.
pub fn write_amplitudes(t: &AmplitudeMatrix) -> String {
    let mut out = format!("# norb={} npairs={}\n", t.norb, t.npairs);
    for (i, a, v) in t.nonzero() {
        let _ = writeln!(out, "{i} {a} {v:.16e}");
    }
    out
}

/// Parsed amplitude file: optional dimensions from the comment header plus entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeFile {
    pub norb: Option<usize>,
    pub npairs: Option<usize>,
    pub entries: Vec<(usize, usize, f64)>,
}

pub fn parse_amplitudes(text: &str) -> Result<AmplitudeFile> {
    let mut file = AmplitudeFile { norb: None, npairs: None, entries: Vec::new() };
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            for tok in comment.split_whitespace() {
                match tok.split_once('=') {
                    Some(("norb", v)) => file.norb = v.parse().ok(),
                    Some(("npairs", v)) => file.npairs = v.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse { line: n + 1, msg: msg.to_string() };
        if f.len() != 3 {
            return Err(bad("expected 'i a value'"));
        }
        let i = f[0].parse().map_err(|_| bad("bad occupied index"))?;
        let a = f[1].parse().map_err(|_| bad("bad virtual index"))?;
        let v: f64 = f[2].parse().map_err(|_| bad("bad amplitude"))?;
        file.entries.push((i, a, v));
    }
    Ok(file)
}

/// DOCI Hamiltonian over the pair basis. Diagonal
/// `E_core + 2 sum_p h_pp + sum_pq (2 J_pq - K_pq)` over occupied `p, q`;
/// `K_pq` couples determinants that differ by moving one pair.
pub fn doci_matrix(ints: &IntegralSet) -> Result<SparseMatrix> {
    doci_matrix_capped(ints, DEFAULT_PAIR_CAP)
}

pub fn doci_matrix_capped(ints: &IntegralSet, cap: usize) -> Result<SparseMatrix> {
    let norb = ints.norb;
    let npairs = ints.npairs();
    let dim = binomial(norb, npairs);
    if dim > cap {
        return Err(Error::SizeCap { dim, cap });
    }
    let basis = enumerate_pair_basis(norb, npairs);
    let rows = basis
        .par_iter()
        .map(|det| {
            let s = det.0;
            let mut row = Vec::with_capacity(1 + npairs * (norb - npairs));
            let mut diag = ints.e_core;
            for p in ones(s) {
                diag += 2.0 * ints.h[(p, p)];
                for q in ones(s) {
                    diag += 2.0 * ints.coulomb(p, q) - ints.exchange(p, q);
                }
            }
            row.push((pair_index(*det), diag));
            for p in ones(s) {
                for q in ones(!s & ((1u64 << norb) - 1)) {
                    let k = ints.exchange(p, q);
                    if k != 0.0 {
                        row.push((rank(s ^ (1 << p) ^ (1 << q)), k));
                    }
                }
            }
            row
        })
        .collect();
    Ok(SparseMatrix::from_rows(rows))
}

/// `exp(T)|ref>` in the pair basis, summing `T^k/k!` for `k <= npairs`.
/// The coefficient of the determinant exciting occupied set `I` into virtual
/// set `A` is the permanent of `t[I, A]`.
pub fn pccd_expand(t: &AmplitudeMatrix) -> PairStateVector {
    let entries = t.nonzero();
    let mut total = PairStateVector::reference(t.norb, t.npairs);
    let mut term = total.clone();
    for k in 1..=t.npairs {
        let mut next = PairStateVector::zeros(t.norb, t.npairs);
        for (idx, det) in enumerate_pair_basis(t.norb, t.npairs).into_iter().enumerate() {
            let c = term.coefficients[idx];
            if c == 0.0 {
                continue;
            }
            for &(i, a, v) in &entries {
                if det.0 >> i & 1 == 1 && det.0 >> a & 1 == 0 {
                    next.coefficients[rank(det.0 ^ (1 << i) ^ (1 << a))] += v * c / k as f64;
                }
            }
        }
        if next.coefficients.iter().all(|&x| x == 0.0) {
            break;
        }
        for (acc, x) in total.coefficients.iter_mut().zip(&next.coefficients) {
            *acc += x;
        }
        term = next;
    }
    total
}

/// Residuals `r[i][a] = <ref_i^a|(H - E)|psi>` and projected energy
/// `E = <ref|H|psi>` for `psi = exp(T)|ref>`, with `H` the DOCI matrix.
pub fn pccd_residuals(t: &AmplitudeMatrix, ints: &IntegralSet) -> Result<(DMatrix<f64>, f64)> {
    let h = doci_matrix(ints)?;
    Ok(residuals_with(&h, t))
}

fn residuals_with(h: &SparseMatrix, t: &AmplitudeMatrix) -> (DMatrix<f64>, f64) {
    let psi = pccd_expand(t);
    let row_dot = |idx: usize| h.row(idx).map(|(j, v)| v * psi.coefficients[j]).sum::<f64>();
    let energy = row_dot(0);
    let reference = PairDeterminant::reference(t.npairs).0;
    let r = DMatrix::from_fn(t.npairs, t.norb - t.npairs, |i, j| {
        let a = t.npairs + j;
        let idx = rank(reference ^ (1 << i) ^ (1 << a));
        row_dot(idx) - energy * psi.coefficients[idx]
    });
    (r, energy)
}

#[derive(Debug, Clone, Copy)]
pub struct PccdConfig {
    /// Converged when the largest residual magnitude drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central-difference step for the Jacobian.
    pub fd_step: f64,
    /// Denominator guard in the initial guess.
    pub guard: f64,
    pub cap: usize,
}

impl Default for PccdConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 100, fd_step: 1e-6, guard: 1e-8, cap: DEFAULT_PAIR_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PccdSolution {
    pub amplitudes: AmplitudeMatrix,
    pub energy: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Perturbative start `t_ia = -K_ia / (2 (F_aa - F_ii))` with the diagonal
/// Fock-like `F_pp = h_pp + sum_{q occ} (2 J_pq - K_pq)`. Denominators below
/// the guard give a zero start for that amplitude.
pub fn initial_guess(ints: &IntegralSet, guard: f64) -> AmplitudeMatrix {
    let npairs = ints.npairs();
    let fock: Vec<f64> = (0..ints.norb)
        .map(|p| ints.h[(p, p)] + (0..npairs).map(|q| 2.0 * ints.coulomb(p, q) - ints.exchange(p, q)).sum::<f64>())
        .collect();
    let mut t = AmplitudeMatrix::zeros(ints.norb, npairs);
    for i in t.occupied() {
        for a in t.virtuals() {
            let denom = 2.0 * (fock[a] - fock[i]);
            let v = if denom.abs() < guard { 0.0 } else { -ints.exchange(i, a) / denom };
            t.values[(i, a - npairs)] = v;
        }
    }
    t
}

pub fn solve_pccd(ints: &IntegralSet) -> Result<PccdSolution> {
    solve_pccd_with(ints, &PccdConfig::default(), None)
}

/// Newton iteration on `r(t) = 0` with a central-difference Jacobian and
/// step halving until the residual norm decreases.
pub fn solve_pccd_with(ints: &IntegralSet, cfg: &PccdConfig, guess: Option<&AmplitudeMatrix>) -> Result<PccdSolution> {
    let h = doci_matrix_capped(ints, cfg.cap)?;
    let (norb, npairs) = (ints.norb, ints.npairs());
    let mut t = match guess {
        Some(g) if g.norb == norb && g.npairs == npairs => g.clone(),
        _ => initial_guess(ints, cfg.guard),
    };
    let eval = |p: &[f64]| {
        let (r, e) = residuals_with(&h, &AmplitudeMatrix::from_params(norb, npairs, p));
        (r.transpose().as_slice().to_vec(), e)
    };
    let inf_norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let two_norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut params = t.as_params();
    let (mut r, mut energy) = eval(&params);
    let mut iterations = 0;
    let n = params.len();
    while inf_norm(&r) >= cfg.tolerance {
        if iterations == cfg.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: inf_norm(&r) });
        }
        iterations += 1;
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus[k] += cfg.fd_step;
                minus[k] -= cfg.fd_step;
                let (rp, _) = eval(&plus);
                let (rm, _) = eval(&minus);
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * cfg.fd_step)).collect()
            })
            .collect();
        let jac = DMatrix::from_fn(n, n, |i, k| columns[k][i]);
        let rhs = -DVector::from_column_slice(&r);
        let step = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian(iterations))?;
        if step.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularJacobian(iterations));
        }

        let base = two_norm(&r);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + scale * d).collect();
            let (rt, et) = eval(&trial);
            let better = two_norm(&rt) < base;
            accepted = Some((trial, rt, et));
            if better {
                break;
            }
            scale *= 0.5;
        }
        let (p, rt, et) = accepted.expect("at least one trial step");
        params = p;
        r = rt;
        energy = et;
    }
    t = AmplitudeMatrix::from_params(norb, npairs, &params);
    Ok(PccdSolution { amplitudes: t, energy, residual_norm: inf_norm(&r), iterations })
}

/// Zeroes amplitudes with `|t| < cutoff`; entries equal to the cutoff survive.
/// Returns the thresholded matrix and the survivor count.
pub fn threshold_amplitudes(t: &AmplitudeMatrix, cutoff: f64) -> Result<(AmplitudeMatrix, usize)> {
    if !(cutoff >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be non-negative, got {cutoff}")));
    }
    let mut out = t.clone();
    let mut survivors = 0;
    for v in out.values.iter_mut() {
        if v.abs() < cutoff {
            *v = 0.0;
        } else if *v != 0.0 {
            survivors += 1;
        }
    }
    Ok((out, survivors))
}
