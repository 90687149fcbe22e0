//! Quantum phase estimation on a prepared state, simulated in the basis of
//! the working Hamiltonian (pair space, a fixed-spin sector, or an explicit
//! matrix).
//!
//! The phase register reads `V = exp(+i (H - E_lo) tau)`, so a measured
//! phase `phi` maps to the energy `E = E_lo + 2 pi phi / tau`. With
//! `tau (E_hi - E_lo) < 2 pi` the whole window maps onto distinct phases.
//! Time evolution is either a first-order product formula over the matrix
//! terms (diagonal first, then each off-diagonal pair `(i, j)`, `i < j`, in
//! index order) or exact via the eigendecomposition.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactref::{
    build_sector_hamiltonian, CiVector, QubitState, SectorHamiltonian, SlaterDeterminant, DEFAULT_SECTOR_CAP,
};
use crate::integrals::IntegralSet;
use crate::linalg::{sorted_eigen, SparseMatrix};
use crate::pairspace::{doci_matrix, enumerate_pair_basis, pair_index, PairDeterminant, PairStateVector};
use crate::report::{field, round10};

pub const DEFAULT_SEED: u64 = 20240531;
pub const MAX_ANCILLAS: usize = 14;
pub const MAX_IQPE_BITS: usize = 16;
/// Largest matrix diagonalized for exact evolution and the spectral sampler.
pub const MAX_EIGEN_DIM: usize = 6000;
/// Cap on `2^ancillas * dim` amplitudes held by canonical QPE.
pub const MAX_QPE_AMPLITUDES: usize = 1 << 25;
/// `tau = TAU_FILL * 2 pi / (E_hi - E_lo)`.
pub const TAU_FILL: f64 = 0.99;
/// Relative padding of the Gershgorin window.
pub const WINDOW_PAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evolution {
    Trotter,
    Exact,
}

/// Basis the working Hamiltonian is written in.
#[derive(Debug, Clone)]
pub enum Representation {
    Pair { norb: usize, npairs: usize },
    Sector(Box<SectorHamiltonian>),
    Explicit,
}

/// Position of a determinant in the working basis, if it belongs to it.
type DetIndex<'a> = dyn Fn(&SlaterDeterminant) -> Option<usize> + 'a;

#[derive(Debug)]
pub struct EvolutionSpec {
    pub matrix: SparseMatrix,
    pub representation: Representation,
    pub tau: f64,
    pub trotter_steps: usize,
    pub window: (f64, f64),
    pub evolution: Evolution,
    off_diagonal: Vec<(usize, usize, f64)>,
    eigen: OnceLock<(Vec<f64>, DMatrix<f64>)>,
}

impl EvolutionSpec {
    /// Automatic window (padded Gershgorin bounds) and `tau`.
    pub fn from_matrix(matrix: SparseMatrix, trotter_steps: usize) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::InvalidInput("empty Hamiltonian".into()));
        }
        if matrix.asymmetry() > 1e-10 {
            return Err(Error::InvalidInput("Hamiltonian matrix is not symmetric".into()));
        }
        if trotter_steps == 0 {
            return Err(Error::InvalidInput("trotter_steps must be at least 1".into()));
        }
        let (lo, hi) = matrix.gershgorin();
        let pad = WINDOW_PAD * (hi - lo).max(1e-3);
        let window = (lo - pad, hi + pad);
        let tau = TAU_FILL * 2.0 * PI / (window.1 - window.0);
        let mut off_diagonal = Vec::new();
        for i in 0..matrix.dim() {
            for (j, v) in matrix.row(i) {
                if j > i && v != 0.0 {
                    off_diagonal.push((i, j, v));
                }
            }
        }
        Ok(Self {
            matrix,
            representation: Representation::Explicit,
            tau,
            trotter_steps,
            window,
            evolution: Evolution::Trotter,
            off_diagonal,
            eigen: OnceLock::new(),
        })
    }

    /// DOCI Hamiltonian on the pair basis.
    pub fn pair_space(ints: &IntegralSet, trotter_steps: usize) -> Result<Self> {
        let mut spec = Self::from_matrix(doci_matrix(ints)?, trotter_steps)?;
        spec.representation = Representation::Pair { norb: ints.norb, npairs: ints.npairs() };
        Ok(spec)
    }

    /// Configuration interaction Hamiltonian on the `n_alpha = n_beta` sector.
    pub fn sector(ints: &IntegralSet, trotter_steps: usize) -> Result<Self> {
        let n = ints.npairs();
        let sector = build_sector_hamiltonian(ints, n, n, DEFAULT_SECTOR_CAP)?;
        let mut spec = Self::from_matrix(sector.matrix.clone(), trotter_steps)?;
        spec.representation = Representation::Sector(Box::new(sector));
        Ok(spec)
    }

    pub fn exact(mut self) -> Self {
        self.evolution = Evolution::Exact;
        self
    }

    /// Replaces the window and the matching `tau`; the window must enclose
    /// the Gershgorin bounds of the spectrum.
    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        let (glo, ghi) = self.matrix.gershgorin();
        if !(lo < hi) || lo > glo || hi < ghi {
            return Err(Error::InvalidInput(format!(
                "window [{lo}, {hi}] does not enclose the spectrum bounds [{glo}, {ghi}]"
            )));
        }
        self.window = (lo, hi);
        self.tau = TAU_FILL * 2.0 * PI / (hi - lo);
        Ok(self)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || tau * (self.window.1 - self.window.0) >= 2.0 * PI {
            return Err(Error::InvalidInput(format!(
                "tau {tau} aliases the window [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn check(&self) -> Result<()> {
        if self.trotter_steps == 0 {
            return Err(Error::InvalidInput("trotter_steps must be at least 1".into()));
        }
        if !(self.tau > 0.0) || self.tau * (self.window.1 - self.window.0) >= 2.0 * PI {
            return Err(Error::InvalidInput("tau aliases the energy window".into()));
        }
        Ok(())
    }

    fn eigen(&self) -> Result<&(Vec<f64>, DMatrix<f64>)> {
        if self.dim() > MAX_EIGEN_DIM {
            return Err(Error::SizeCap { dim: self.dim(), cap: MAX_EIGEN_DIM });
        }
        Ok(self.eigen.get_or_init(|| sorted_eigen(&self.matrix.to_dense())))
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> Result<&[f64]> {
        Ok(&self.eigen()?.0)
    }

    /// Maps a pair-basis state into the working basis.
    pub fn prepare_pair(&self, state: &PairStateVector) -> Result<Vec<Complex64>> {
        let mut v = match &self.representation {
            Representation::Pair { norb, npairs } => {
                if (state.norb, state.npairs) != (*norb, *npairs) {
                    return Err(Error::InvalidInput("pair state does not match the Hamiltonian".into()));
                }
                state.coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect()
            }
            Representation::Sector(sector) => {
                let mut v = vec![Complex64::new(0.0, 0.0); sector.dim()];
                for (det, c) in state.iter() {
                    let idx = sector
                        .index_of(&det.slater())
                        .ok_or_else(|| Error::InvalidInput("pair state does not fit the sector".into()))?;
                    v[idx] = Complex64::new(c, 0.0);
                }
                v
            }
            Representation::Explicit => {
                if state.coefficients.len() != self.dim() {
                    return Err(Error::InvalidInput("state dimension does not match the matrix".into()));
                }
                state.coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect()
            }
        };
        normalize(&mut v)?;
        Ok(v)
    }

    /// Maps a CI expansion into the working basis; weight outside the basis
    /// is an error.
    pub fn prepare_ci(&self, state: &CiVector) -> Result<Vec<Complex64>> {
        let (dim, index): (usize, Box<DetIndex<'_>>) = match &self.representation {
            Representation::Pair { norb, npairs } => {
                if state.norb != *norb {
                    return Err(Error::InvalidInput("CI vector does not match the Hamiltonian".into()));
                }
                let np = *npairs;
                let index = move |d: &SlaterDeterminant| {
                    (d.alpha == d.beta && d.alpha.count_ones() as usize == np)
                        .then(|| pair_index(PairDeterminant(d.alpha)))
                };
                (self.dim(), Box::new(index))
            }
            Representation::Sector(sector) => {
                if state.norb != sector.norb {
                    return Err(Error::InvalidInput("CI vector does not match the Hamiltonian".into()));
                }
                (sector.dim(), Box::new(|d: &SlaterDeterminant| sector.index_of(d)))
            }
            Representation::Explicit => {
                return Err(Error::InvalidInput("an explicit matrix has no determinant basis".into()));
            }
        };
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        let (mut total, mut captured) = (0.0, 0.0);
        for (det, &c) in state.basis.iter().zip(&state.coefficients) {
            total += c * c;
            if let Some(k) = index(det) {
                v[k] = Complex64::new(c, 0.0);
                captured += c * c;
            }
        }
        if (total - captured).abs() > 1e-10 * total.max(1.0) {
            return Err(Error::InvalidInput("state has weight outside the working basis".into()));
        }
        normalize(&mut v)?;
        Ok(v)
    }

    /// Maps a full-register state into the working basis; weight outside the
    /// basis is an error.
    pub fn prepare_qubit(&self, state: &QubitState) -> Result<Vec<Complex64>> {
        let mut v = match &self.representation {
            Representation::Pair { norb, npairs } => {
                if state.n_qubits != 2 * norb {
                    return Err(Error::InvalidInput("register size does not match the Hamiltonian".into()));
                }
                let total: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
                let v: Vec<Complex64> = enumerate_pair_basis(*norb, *npairs)
                    .into_iter()
                    .map(|det| state.amplitudes[det.slater().qubit_index()])
                    .collect();
                let captured: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                if (total - captured).abs() > 1e-10 * total.max(1.0) {
                    return Err(Error::InvalidInput("state has weight outside the seniority-zero space".into()));
                }
                v
            }
            Representation::Sector(sector) => {
                let total: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
                let v: Vec<Complex64> = sector.basis.iter().map(|d| state.amplitudes[d.qubit_index()]).collect();
                let captured: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                if (total - captured).abs() > 1e-10 * total.max(1.0) {
                    return Err(Error::InvalidInput("state has weight outside the sector".into()));
                }
                v
            }
            Representation::Explicit => {
                if state.amplitudes.len() != self.dim() {
                    return Err(Error::InvalidInput("state dimension does not match the matrix".into()));
                }
                state.amplitudes.clone()
            }
        };
        normalize(&mut v)?;
        Ok(v)
    }

    fn trotter_step(&self, v: &mut [Complex64], dt: f64) {
        for (i, x) in v.iter_mut().enumerate() {
            *x *= Complex64::from_polar(1.0, -self.matrix.get(i, i) * dt);
        }
        for &(i, j, h) in &self.off_diagonal {
            let (c, s) = ((h * dt).cos(), (h * dt).sin());
            let (x, y) = (v[i], v[j]);
            let is = Complex64::new(0.0, s);
            v[i] = x * c - is * y;
            v[j] = y * c - is * x;
        }
    }

    /// `exp(-i H t)` applied to `v` under the configured evolution mode; in
    /// Trotter mode `t` is split into `steps` equal slices.
    fn evolve(&self, v: &mut [Complex64], t: f64, steps: usize) -> Result<()> {
        match self.evolution {
            Evolution::Trotter => {
                let dt = t / steps as f64;
                for _ in 0..steps {
                    self.trotter_step(v, dt);
                }
            }
            Evolution::Exact => {
                let (values, vectors) = self.eigen()?;
                let n = v.len();
                let coeffs: Vec<Complex64> = (0..n)
                    .map(|k| {
                        let c: Complex64 = (0..n).map(|r| v[r] * vectors[(r, k)]).sum();
                        c * Complex64::from_polar(1.0, -values[k] * t)
                    })
                    .collect();
                for (r, x) in v.iter_mut().enumerate() {
                    *x = (0..n).map(|k| coeffs[k] * vectors[(r, k)]).sum();
                }
            }
        }
        Ok(())
    }

    /// `(prod_j exp(-i H_j tau / n))^(n power)` with `n = trotter_steps`, or
    /// `exp(-i H tau power)` in exact mode.
    pub fn trotter_evolution(&self, state: &[Complex64], power: usize) -> Result<Vec<Complex64>> {
        self.check()?;
        self.check_dim(state)?;
        let mut v = state.to_vec();
        if power > 0 {
            self.evolve(&mut v, self.tau * power as f64, self.trotter_steps * power)?;
        }
        Ok(v)
    }

    /// One application of the phase-register unitary `V`.
    fn phase_unitary(&self, v: &mut [Complex64]) -> Result<()> {
        self.evolve(v, -self.tau, self.trotter_steps)?;
        let phase = Complex64::from_polar(1.0, -self.window.0 * self.tau);
        v.iter_mut().for_each(|x| *x *= phase);
        Ok(())
    }

    fn check_dim(&self, state: &[Complex64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "state has {} components, Hamiltonian dimension is {}",
                state.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn phase_to_energy(&self, phase: f64) -> f64 {
        self.window.0 + 2.0 * PI * phase / self.tau
    }

    pub fn energy_to_phase(&self, energy: f64) -> f64 {
        ((energy - self.window.0) * self.tau / (2.0 * PI)).rem_euclid(1.0)
    }

    /// Bin nearest to the phase of `energy` on a `2^n_bits` grid.
    pub fn energy_bin(&self, energy: f64, n_bits: usize) -> usize {
        let n = 1usize << n_bits;
        ((self.energy_to_phase(energy) * n as f64).round() as usize) % n
    }
}

fn normalize(v: &mut [Complex64]) -> Result<()> {
    let n: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(Error::InvalidInput("initial state has zero norm in the working basis".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct QpeResult {
    /// Counts per phase bin; bin `m` is the phase `m / 2^n_bits`.
    pub histogram: Vec<u64>,
    pub n_bits: usize,
    pub shots: u64,
    pub modal_bin: usize,
    pub modal_phase: f64,
    pub energy_estimate: f64,
    /// Exact outcome distribution the shots were drawn from, when available.
    pub probabilities: Option<Vec<f64>>,
    /// Per-bit `(zeros, ones)` votes of iterative estimation, least significant first.
    pub bit_votes: Option<Vec<(u64, u64)>>,
}

impl QpeResult {
    fn from_histogram(
        spec: &EvolutionSpec,
        histogram: Vec<u64>,
        n_bits: usize,
        probabilities: Option<Vec<f64>>,
    ) -> Self {
        let shots = histogram.iter().sum();
        let modal_bin = modal(&histogram);
        let modal_phase = modal_bin as f64 / (1u64 << n_bits) as f64;
        Self {
            histogram,
            n_bits,
            shots,
            modal_bin,
            modal_phase,
            energy_estimate: spec.phase_to_energy(modal_phase),
            probabilities,
            bit_votes: None,
        }
    }

    /// Fraction of shots in `bin`.
    pub fn mass(&self, bin: usize) -> f64 {
        self.histogram[bin] as f64 / self.shots as f64
    }
}

/// First index of the maximum.
fn modal(h: &[u64]) -> usize {
    let mut best = 0;
    for (k, &c) in h.iter().enumerate() {
        if c > h[best] {
            best = k;
        }
    }
    best
}

fn sample(probabilities: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probabilities.iter().map(|p| p.max(0.0)))
        .map_err(|e| Error::Contract(format!("outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = vec![0u64; probabilities.len()];
    for _ in 0..shots {
        h[dist.sample(&mut rng)] += 1;
    }
    Ok(h)
}

fn check_run(n_bits: usize, cap: usize, shots: u64) -> Result<()> {
    if n_bits == 0 || n_bits > cap {
        return Err(Error::InvalidInput(format!("phase register must have 1..={cap} bits, got {n_bits}")));
    }
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be positive".into()));
    }
    Ok(())
}

/// Textbook QPE: ancillas in uniform superposition, controlled `V^x`, inverse
/// Fourier transform, then `shots` samples of the ancilla register.
pub fn canonical_qpe(
    initial: &[Complex64],
    spec: &EvolutionSpec,
    n_ancilla: usize,
    shots: u64,
    seed: u64,
) -> Result<QpeResult> {
    check_run(n_ancilla, MAX_ANCILLAS, shots)?;
    spec.check()?;
    spec.check_dim(initial)?;
    let n = 1usize << n_ancilla;
    let dim = spec.dim();
    if n * dim > MAX_QPE_AMPLITUDES {
        return Err(Error::SizeCap { dim: n * dim, cap: MAX_QPE_AMPLITUDES });
    }
    let mut psi = initial.to_vec();
    normalize(&mut psi)?;
    // columns[c][x] = component c of V^x psi
    let mut columns = vec![vec![Complex64::new(0.0, 0.0); n]; dim];
    for x in 0..n {
        for (c, col) in columns.iter_mut().enumerate() {
            col[x] = psi[c];
        }
        if x + 1 < n {
            spec.phase_unitary(&mut psi)?;
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut probabilities = vec![0.0; n];
    for col in columns.iter_mut() {
        fft.process(col);
        for (m, a) in col.iter().enumerate() {
            probabilities[m] += a.norm_sqr();
        }
    }
    let scale = (n * n) as f64;
    probabilities.iter_mut().for_each(|p| *p /= scale);
    let histogram = sample(&probabilities, shots, seed)?;
    Ok(QpeResult::from_histogram(spec, histogram, n_ancilla, Some(probabilities)))
}

/// `sin^2(pi N d) / (N^2 sin^2(pi d))`, the probability of reading a bin at
/// phase offset `d` on an `N`-bin register.
pub fn fejer(n: usize, delta: f64) -> f64 {
    let s = (PI * delta).sin();
    if s.abs() < 1e-12 {
        return 1.0;
    }
    let num = (PI * n as f64 * delta).sin();
    num * num / ((n * n) as f64 * s * s)
}

/// Outcome distribution of ideal QPE from the eigendecomposition:
/// bin weight `sum_k |<E_k|psi>|^2 F(phi_k - m/N)`.
pub fn qpe_distribution(initial: &[Complex64], spec: &EvolutionSpec, n_ancilla: usize) -> Result<Vec<f64>> {
    spec.check_dim(initial)?;
    let (values, vectors) = spec.eigen()?;
    let mut psi = initial.to_vec();
    normalize(&mut psi)?;
    let n = 1usize << n_ancilla;
    let mut p = vec![0.0; n];
    for (k, &e) in values.iter().enumerate() {
        let c: Complex64 = psi.iter().enumerate().map(|(r, x)| x * vectors[(r, k)]).sum();
        let w = c.norm_sqr();
        if w < 1e-300 {
            continue;
        }
        let phi = spec.energy_to_phase(e);
        for (m, pm) in p.iter_mut().enumerate() {
            *pm += w * fejer(n, phi - m as f64 / n as f64);
        }
    }
    Ok(p)
}

pub fn spectral_sampler(
    initial: &[Complex64],
    spec: &EvolutionSpec,
    n_ancilla: usize,
    shots: u64,
    seed: u64,
) -> Result<QpeResult> {
    check_run(n_ancilla, MAX_ANCILLAS, shots)?;
    spec.check()?;
    let p = qpe_distribution(initial, spec, n_ancilla)?;
    let histogram = sample(&p, shots, seed)?;
    Ok(QpeResult::from_histogram(spec, histogram, n_ancilla, Some(p)))
}

/// Kitaev-style iterative estimation, least significant bit first. Bit `k`
/// uses `V^(2^(k-1))` and a feedback rotation from the bits already read;
/// each shot re-prepares `initial` and the bit is decided by majority (ties
/// read 0).
pub fn iterative_qpe(
    initial: &[Complex64],
    spec: &EvolutionSpec,
    k_bits: usize,
    shots_per_bit: u64,
    seed: u64,
) -> Result<QpeResult> {
    check_run(k_bits, MAX_IQPE_BITS, shots_per_bit)?;
    spec.check()?;
    spec.check_dim(initial)?;
    let mut psi = initial.to_vec();
    normalize(&mut psi)?;

    // overlaps[j] = <psi| V^(2^j) |psi>
    let mut overlaps = Vec::with_capacity(k_bits);
    let mut v = psi.clone();
    let mut power = 0usize;
    for j in 0..k_bits {
        while power < 1 << j {
            spec.phase_unitary(&mut v)?;
            power += 1;
        }
        overlaps.push(psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![0u8; k_bits + 1]; // bits[k], k = 1..=k_bits; phase = sum bits[k] 2^-k
    let mut votes = Vec::with_capacity(k_bits);
    for k in (1..=k_bits).rev() {
        // feedback removes the already-known lower bits: omega = -2 pi * 0.0 b_{k+1} ... b_K
        let tail: f64 = (k + 1..=k_bits).map(|j| bits[j] as f64 * 0.5f64.powi((j - k + 1) as i32)).sum();
        let omega = -2.0 * PI * tail;
        let p0 = ((1.0 + (Complex64::from_polar(1.0, omega) * overlaps[k - 1]).re) / 2.0).clamp(0.0, 1.0);
        let zeros = (0..shots_per_bit).filter(|_| rng.gen::<f64>() < p0).count() as u64;
        let ones = shots_per_bit - zeros;
        bits[k] = u8::from(ones > zeros);
        votes.push((zeros, ones));
    }
    let bin: usize = (1..=k_bits).map(|k| (bits[k] as usize) << (k_bits - k)).sum();
    let mut histogram = vec![0u64; 1 << k_bits];
    histogram[bin] = shots_per_bit * k_bits as u64;
    let mut res = QpeResult::from_histogram(spec, histogram, k_bits, None);
    res.bit_votes = Some(votes);
    Ok(res)
}

/// CSV with header `bin_index,phase,energy,count`; rows for nonzero bins only.
pub fn histogram_csv(res: &QpeResult, spec: &EvolutionSpec) -> String {
    let mut out = String::from("bin_index,phase,energy,count\n");
    let n = (1u64 << res.n_bits) as f64;
    for (m, &c) in res.histogram.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let phase = m as f64 / n;
        let _ = writeln!(out, "{m},{},{},{c}", field(phase), field(spec.phase_to_energy(phase)));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub method: &'static str,
    pub seed: u64,
    pub tau: f64,
    pub window: [f64; 2],
    pub trotter_steps: usize,
    pub evolution: Evolution,
    pub bits: usize,
    pub shots: u64,
    pub modal_bin: usize,
    pub energy_estimate: f64,
}

impl RunMetadata {
    pub fn new(method: &'static str, seed: u64, spec: &EvolutionSpec, res: &QpeResult) -> Self {
        Self {
            method,
            seed,
            tau: round10(spec.tau),
            window: [round10(spec.window.0), round10(spec.window.1)],
            trotter_steps: spec.trotter_steps,
            evolution: spec.evolution,
            bits: res.n_bits,
            shots: res.shots,
            modal_bin: res.modal_bin,
            energy_estimate: round10(res.energy_estimate),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{core_hamiltonian_basis, hubbard_integrals, HubbardSpec};
    use crate::linalg::dense_ground_state;

    const TWO_SITE: f64 = -0.8284271247461903;

    fn two_site() -> IntegralSet {
        core_hamiltonian_basis(&hubbard_integrals(&HubbardSpec::half_filled(2, 1.0, 4.0)).unwrap())
    }

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_hamiltonian_trotterizes_exactly() {
        let m = SparseMatrix::from_dense(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, -1.2, 2.0])));
        let spec = EvolutionSpec::from_matrix(m, 1).unwrap();
        let psi = real(&[0.6, 0.0, 0.8]);
        let out = spec.trotter_evolution(&psi, 3).unwrap();
        let expect = [
            psi[0] * Complex64::from_polar(1.0, -0.3 * spec.tau * 3.0),
            psi[1],
            psi[2] * Complex64::from_polar(1.0, -2.0 * spec.tau * 3.0),
        ];
        assert!(dist(&out, &expect) < 1e-14);
        assert_eq!(spec.trotter_evolution(&psi, 0).unwrap(), psi);
    }

    #[test]
    fn trotter_error_decays_first_order() {
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap();
        let gs = dense_ground_state(&spec.matrix.to_dense());
        let psi = real(&gs.vector);
        let exact: Vec<Complex64> =
            psi.iter().map(|x| x * Complex64::from_polar(1.0, -gs.energy * spec.tau * 2.0)).collect();
        let mut errors = Vec::new();
        for steps in [4, 8, 16, 32] {
            let s = EvolutionSpec::pair_space(&two_site(), steps).unwrap();
            errors.push(dist(&s.trotter_evolution(&psi, 2).unwrap(), &exact));
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.7..2.3).contains(&ratio), "{errors:?}");
        }
        let ex = EvolutionSpec::pair_space(&two_site(), 1).unwrap().exact();
        assert!(dist(&ex.trotter_evolution(&psi, 2).unwrap(), &exact) < 1e-12);
    }

    #[test]
    fn window_checks() {
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap();
        assert!(spec.tau * (spec.window.1 - spec.window.0) < 2.0 * PI);
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap();
        assert!(spec.with_tau(10.0).is_err());
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap();
        assert!(spec.with_window(0.0, 1.0).is_err());
    }

    #[test]
    fn eigenstate_on_a_bin_is_a_point_mass() {
        let m = SparseMatrix::from_dense(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0])));
        let spec = EvolutionSpec::from_matrix(m, 1).unwrap().with_window(0.0, 1.0).unwrap().exact();
        let spec = EvolutionSpec { tau: 2.0 * PI * 0.75, ..spec };
        let p = qpe_distribution(&real(&[0.0, 1.0]), &spec, 3).unwrap();
        assert!((p[6] - 1.0).abs() < 1e-12, "{p:?}");
        let res = canonical_qpe(&real(&[0.0, 1.0]), &spec, 3, 100, 1).unwrap();
        assert_eq!(res.histogram[6], 100);
        let it = iterative_qpe(&real(&[0.0, 1.0]), &spec, 3, 5, 1).unwrap();
        assert_eq!(it.modal_bin, 6);
    }

    #[test]
    fn two_site_qpe_finds_ground_state() {
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap().exact();
        let gs = dense_ground_state(&spec.matrix.to_dense());
        let psi = real(&gs.vector);
        let width = spec.window.1 - spec.window.0;
        let res = canonical_qpe(&psi, &spec, 10, 1000, DEFAULT_SEED).unwrap();
        assert!((res.energy_estimate - TWO_SITE).abs() <= width / 1024.0);
        assert_eq!(res.histogram.iter().sum::<u64>(), 1000);
        assert_eq!(res.modal_bin, spec.energy_bin(TWO_SITE, 10));

        // the product formula converges to the same bin as the step count grows
        let mut errors = Vec::new();
        for steps in [4, 16, 64] {
            let trotter = EvolutionSpec::pair_space(&two_site(), steps).unwrap();
            let r = canonical_qpe(&psi, &trotter, 10, 1000, DEFAULT_SEED).unwrap();
            errors.push((r.energy_estimate - res.energy_estimate).abs());
        }
        assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
        assert!(errors[2] < 5e-3, "{errors:?}");
    }

    #[test]
    fn orthogonal_input_misses_ground_bin() {
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap().exact();
        let (values, vectors) = sorted_eigen(&spec.matrix.to_dense());
        let excited = real(&vectors.column(1).iter().copied().collect::<Vec<_>>());
        let p = qpe_distribution(&excited, &spec, 8).unwrap();
        let ground = spec.energy_bin(values[0], 8);
        assert!(p[ground] < 1e-3, "{}", p[ground]);
    }

    #[test]
    fn canonical_exact_matches_spectral_distribution() {
        let ints = core_hamiltonian_basis(&hubbard_integrals(&HubbardSpec::half_filled(4, 1.0, 4.0)).unwrap());
        let spec = EvolutionSpec::pair_space(&ints, 1).unwrap().exact();
        let psi = real(&crate::pairspace::PairStateVector::reference(4, 2).coefficients);
        let a = canonical_qpe(&psi, &spec, 6, 10, 3).unwrap().probabilities.unwrap();
        let b = qpe_distribution(&psi, &spec, 6).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn iterative_agrees_with_canonical() {
        let spec = EvolutionSpec::pair_space(&two_site(), 1).unwrap().exact();
        let gs = dense_ground_state(&spec.matrix.to_dense());
        let psi = real(&gs.vector);
        let c = canonical_qpe(&psi, &spec, 8, 500, 5).unwrap();
        let i = iterative_qpe(&psi, &spec, 8, 15, 5).unwrap();
        let d = (c.modal_bin as i64 - i.modal_bin as i64).rem_euclid(256);
        assert!(d <= 1 || d == 255, "{} vs {}", c.modal_bin, i.modal_bin);
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = EvolutionSpec::pair_space(&two_site(), 2).unwrap();
        let psi = real(&[0.8, 0.6]);
        let a = canonical_qpe(&psi, &spec, 5, 300, 9).unwrap();
        let b = canonical_qpe(&psi, &spec, 5, 300, 9).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(histogram_csv(&a, &spec), histogram_csv(&b, &spec));
        assert!(histogram_csv(&a, &spec).starts_with("bin_index,phase,energy,count\n"));
    }

    #[test]
    fn fejer_kernel() {
        assert_eq!(fejer(8, 0.0), 1.0);
        assert!(fejer(8, 1.0 / 8.0) < 1e-20);
        let total: f64 = (0..16).map(|m| fejer(16, 0.3 - m as f64 / 16.0)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
