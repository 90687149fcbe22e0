//! Exact references: fixed-(N_alpha, N_beta) configuration interaction by
//! Slater-Condon rules, a brute-force Jordan-Wigner Hamiltonian for small
//! registers, and state overlaps.
//!
//! Qubit convention: spatial orbital `p` owns qubits `2p` (spin up) and
//! `2p+1` (spin down). Qubit `k` is bit `k` of a statevector index, and ket
//! strings are printed with qubit 0 leftmost, so the two-pair reference over
//! four orbitals reads `|11110000>`. Determinants are ordered products of
//! creation operators in ascending qubit order, which fixes all fermionic
//! phases.

use std::borrow::Cow;
use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bits::{combinations, rank};
use crate::error::{Error, Result};
use crate::integrals::IntegralSet;
use crate::linalg::{self, EigenConfig, SparseMatrix};

/// Default refusal threshold for sector basis sizes.
pub const DEFAULT_SECTOR_CAP: usize = 1_000_000;
/// Largest register the Jordan-Wigner oracle will build.
pub const JW_ORACLE_MAX_QUBITS: usize = 14;

/// Alpha and beta occupation bitmasks over spatial orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlaterDeterminant {
    pub alpha: u64,
    pub beta: u64,
}

impl SlaterDeterminant {
    pub fn new(alpha: u64, beta: u64) -> Self {
        Self { alpha, beta }
    }

    /// Closed-shell determinant with the lowest `npairs` orbitals doubly occupied.
    pub fn reference(npairs: usize) -> Self {
        let m = (1u64 << npairs) - 1;
        Self { alpha: m, beta: m }
    }

    /// Statevector index under the interleaved qubit ordering.
    pub fn qubit_index(&self) -> usize {
        interleave(self.alpha, self.beta) as usize
    }

    pub fn from_qubit_index(index: usize) -> Self {
        let (alpha, beta) = deinterleave(index as u128);
        Self { alpha, beta }
    }

    pub fn seniority(&self) -> u32 {
        (self.alpha ^ self.beta).count_ones()
    }

    pub fn ket(&self, norb: usize) -> String {
        ket_string(self.qubit_index(), 2 * norb)
    }
}

/// `|q0 q1 ... q_{n-1}>` occupation string of a statevector index.
pub fn ket_string(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|q| if index >> q & 1 == 1 { '1' } else { '0' }).collect()
}

fn interleave(alpha: u64, beta: u64) -> u128 {
    let mut out = 0u128;
    for p in 0..64 {
        if alpha >> p & 1 == 1 {
            out |= 1 << (2 * p);
        }
        if beta >> p & 1 == 1 {
            out |= 1 << (2 * p + 1);
        }
    }
    out
}

fn deinterleave(x: u128) -> (u64, u64) {
    let mut alpha = 0u64;
    let mut beta = 0u64;
    for p in 0..64 {
        if x >> (2 * p) & 1 == 1 {
            alpha |= 1 << p;
        }
        if x >> (2 * p + 1) & 1 == 1 {
            beta |= 1 << p;
        }
    }
    (alpha, beta)
}

/// Sign of moving a ladder operator on mode `k` past the occupied modes below it.
#[inline]
fn parity_below(x: u128, k: usize) -> f64 {
    if (x & ((1u128 << k) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn annihilate(x: u128, k: usize) -> Option<(f64, u128)> {
    (x >> k & 1 == 1).then(|| (parity_below(x, k), x ^ (1 << k)))
}

#[inline]
fn create(x: u128, k: usize) -> Option<(f64, u128)> {
    (x >> k & 1 == 0).then(|| (parity_below(x, k), x | (1 << k)))
}

/// Real CI expansion over an ordered determinant basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CiVector {
    pub norb: usize,
    pub basis: Vec<SlaterDeterminant>,
    pub coefficients: Vec<f64>,
}

impl CiVector {
    pub fn normalize(&mut self) {
        linalg::normalize(&mut self.coefficients);
    }

    pub fn norm(&self) -> f64 {
        linalg::dot(&self.coefficients, &self.coefficients).sqrt()
    }

    pub fn coefficient(&self, det: &SlaterDeterminant) -> f64 {
        self.basis.binary_search(det).map_or(0.0, |i| self.coefficients[i])
    }

    /// Squared weight on seniority-zero determinants.
    pub fn seniority_zero_weight(&self) -> f64 {
        self.basis.iter().zip(&self.coefficients).filter(|(d, _)| d.seniority() == 0).map(|(_, c)| c * c).sum()
    }
}

/// Dense statevector over `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl QubitState {
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub fn from_real(n_qubits: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), 1 << n_qubits);
        Self { n_qubits, amplitudes: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Nonzero amplitudes as `(ket, amplitude)` in index order.
    pub fn support(&self, tol: f64) -> Vec<(String, Complex64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > tol)
            .map(|(i, a)| (ket_string(i, self.n_qubits), *a))
            .collect()
    }
}

/// Anything that can be laid out on the interleaved qubit register.
pub trait ToQubitState {
    fn to_qubit_state(&self) -> Result<Cow<'_, QubitState>>;
}

impl ToQubitState for QubitState {
    fn to_qubit_state(&self) -> Result<Cow<'_, QubitState>> {
        Ok(Cow::Borrowed(self))
    }
}

impl ToQubitState for CiVector {
    fn to_qubit_state(&self) -> Result<Cow<'_, QubitState>> {
        embed_ci(self).map(Cow::Owned)
    }
}

/// Places each determinant at its Jordan-Wigner bitstring index.
pub fn embed_ci(ci: &CiVector) -> Result<QubitState> {
    let n_qubits = 2 * ci.norb;
    if n_qubits > 30 {
        return Err(Error::SizeCap { dim: n_qubits, cap: 30 });
    }
    if ci.basis.len() != ci.coefficients.len() {
        return Err(Error::InvalidInput("CI basis and coefficient lengths differ".into()));
    }
    let mut state = QubitState { n_qubits, amplitudes: vec![Complex64::new(0.0, 0.0); 1 << n_qubits] };
    for (det, &c) in ci.basis.iter().zip(&ci.coefficients) {
        let idx = det.qubit_index();
        if idx >= state.dim() {
            return Err(Error::InvalidInput(format!("determinant {det:?} exceeds {} orbitals", ci.norb)));
        }
        state.amplitudes[idx] = Complex64::new(c, 0.0);
    }
    Ok(state)
}

/// `|<a|b>|` of the normalized states.
pub fn fidelity<A: ToQubitState + ?Sized, B: ToQubitState + ?Sized>(a: &A, b: &B) -> Result<f64> {
    let a = a.to_qubit_state()?;
    let b = b.to_qubit_state()?;
    if a.n_qubits != b.n_qubits {
        return Err(Error::InvalidInput(format!("qubit counts differ: {} vs {}", a.n_qubits, b.n_qubits)));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("zero state".into()));
    }
    Ok((a.inner(&b).norm() / (na * nb)).min(1.0))
}

/// Hamiltonian restricted to a fixed `(N_alpha, N_beta)` determinant space.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    /// Ordered by `(alpha, beta)` masks, ascending.
    pub basis: Vec<SlaterDeterminant>,
    pub matrix: SparseMatrix,
}

/// Lowest state of a sector Hamiltonian.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: CiVector,
    /// Gap below 1e-8 to the next Ritz value.
    pub degenerate: bool,
    pub gap: Option<f64>,
}

impl SectorHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, det: &SlaterDeterminant) -> Option<usize> {
        if det.alpha.count_ones() as usize != self.n_alpha || det.beta.count_ones() as usize != self.n_beta {
            return None;
        }
        let nb = crate::bits::binomial(self.norb, self.n_beta);
        Some(rank(det.alpha) * nb + rank(det.beta))
    }

    pub fn ground_state(&self, cfg: &EigenConfig) -> Result<GroundState> {
        let pair = linalg::ground_state(&self.matrix, cfg)?;
        Ok(GroundState {
            energy: pair.energy,
            degenerate: pair.degenerate(),
            gap: pair.gap,
            state: CiVector { norb: self.norb, basis: self.basis.clone(), coefficients: pair.vector },
        })
    }

    /// Coefficients of a register state on this sector's basis (real parts).
    /// Fails if the state has weight outside the sector.
    pub fn project(&self, state: &QubitState) -> Result<Vec<f64>> {
        if state.n_qubits != 2 * self.norb {
            return Err(Error::InvalidInput("register size does not match sector".into()));
        }
        let v: Vec<f64> = self.basis.iter().map(|d| state.amplitudes[d.qubit_index()].re).collect();
        let inside: f64 = v.iter().map(|x| x * x).sum();
        let total = state.norm().powi(2);
        if (total - inside).abs() > 1e-10 * total.max(1.0) {
            return Err(Error::InvalidInput("state has weight outside the particle-number sector".into()));
        }
        Ok(v)
    }
}

// spin-orbital chemist integral (kl|mn) with spin deltas
#[inline]
fn so_eri(ints: &IntegralSet, k: usize, l: usize, m: usize, n: usize) -> f64 {
    if (k ^ l) & 1 != 0 || (m ^ n) & 1 != 0 {
        return 0.0;
    }
    ints.eri(k >> 1, l >> 1, m >> 1, n >> 1)
}

#[inline]
fn so_h(ints: &IntegralSet, k: usize, l: usize) -> f64 {
    if (k ^ l) & 1 != 0 {
        0.0
    } else {
        ints.h[(k >> 1, l >> 1)]
    }
}

/// Antisymmetrized `<ab||kl>` over spin orbitals.
#[inline]
fn antisym(ints: &IntegralSet, a: usize, b: usize, k: usize, l: usize) -> f64 {
    so_eri(ints, a, k, b, l) - so_eri(ints, a, l, b, k)
}

/// Slater-Condon matrix of the `(n_alpha, n_beta)` sector, core energy on the
/// diagonal. Refuses sectors larger than `cap`.
pub fn build_sector_hamiltonian(
    ints: &IntegralSet,
    n_alpha: usize,
    n_beta: usize,
    cap: usize,
) -> Result<SectorHamiltonian> {
    let norb = ints.norb;
    if n_alpha + n_beta != ints.nelec {
        return Err(Error::InvalidInput(format!("n_alpha + n_beta = {} but nelec = {}", n_alpha + n_beta, ints.nelec)));
    }
    if n_alpha > norb || n_beta > norb {
        return Err(Error::InvalidInput("more electrons of one spin than orbitals".into()));
    }
    let dim = crate::bits::binomial(norb, n_alpha) * crate::bits::binomial(norb, n_beta);
    if dim > cap {
        return Err(Error::SizeCap { dim, cap });
    }
    let alphas = combinations(norb, n_alpha);
    let betas = combinations(norb, n_beta);
    let basis: Vec<SlaterDeterminant> =
        alphas.iter().flat_map(|&a| betas.iter().map(move |&b| SlaterDeterminant::new(a, b))).collect();
    let nb = betas.len();
    let col = |x: u128| {
        let (a, b) = deinterleave(x);
        rank(a) * nb + rank(b)
    };
    let n_so = 2 * norb;

    let rows: Vec<Vec<(usize, f64)>> = basis
        .par_iter()
        .map(|det| {
            let x = interleave(det.alpha, det.beta);
            let occ: Vec<usize> = (0..n_so).filter(|&k| x >> k & 1 == 1).collect();
            let vir: Vec<usize> = (0..n_so).filter(|&k| x >> k & 1 == 0).collect();
            let mut row = Vec::new();

            let mut diag = ints.e_core;
            for &k in &occ {
                diag += so_h(ints, k, k);
                for &l in &occ {
                    diag += 0.5 * (so_eri(ints, k, k, l, l) - so_eri(ints, k, l, l, k));
                }
            }
            row.push((col(x), diag));

            for &k in &occ {
                for &a in &vir {
                    if (k ^ a) & 1 != 0 {
                        continue;
                    }
                    let mut val = so_h(ints, a, k);
                    for &l in &occ {
                        val += antisym(ints, a, l, k, l);
                    }
                    if val == 0.0 {
                        continue;
                    }
                    let (s1, y) = annihilate(x, k).unwrap();
                    let (s2, y) = create(y, a).unwrap();
                    row.push((col(y), s1 * s2 * val));
                }
            }

            for (i, &k) in occ.iter().enumerate() {
                for &l in &occ[i + 1..] {
                    for (j, &a) in vir.iter().enumerate() {
                        for &b in &vir[j + 1..] {
                            if (k & 1) + (l & 1) != (a & 1) + (b & 1) {
                                continue;
                            }
                            let val = antisym(ints, a, b, k, l);
                            if val == 0.0 {
                                continue;
                            }
                            // |D'> = a+_a a+_b a_l a_k |D>
                            let (s1, y) = annihilate(x, k).unwrap();
                            let (s2, y) = annihilate(y, l).unwrap();
                            let (s3, y) = create(y, b).unwrap();
                            let (s4, y) = create(y, a).unwrap();
                            row.push((col(y), s1 * s2 * s3 * s4 * val));
                        }
                    }
                }
            }
            row
        })
        .collect();

    Ok(SectorHamiltonian { norb, n_alpha, n_beta, basis, matrix: SparseMatrix::from_rows(rows) })
}

/// Ground state of the `(nelec/2, nelec/2)` sector.
pub fn singlet_sector_ground_state(ints: &IntegralSet) -> Result<(SectorHamiltonian, GroundState)> {
    let half = ints.nelec / 2;
    let ham = build_sector_hamiltonian(ints, half, half, DEFAULT_SECTOR_CAP)?;
    let gs = ham.ground_state(&EigenConfig::default())?;
    Ok((ham, gs))
}

/// Sign taking the ascending-qubit creator product to the order
/// (all spin-up creators)(all spin-down creators).
fn spin_block_sign(det: &SlaterDeterminant) -> f64 {
    // every down creator on orbital p moves past the up creators on q > p
    let mut swaps = 0u32;
    let mut beta = det.beta;
    while beta != 0 {
        let p = beta.trailing_zeros();
        swaps += (det.alpha >> (p + 1)).count_ones();
        beta &= beta - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn occupied(mask: u64) -> Vec<usize> {
    (0..64).filter(|&p| mask >> p & 1 == 1).collect()
}

/// Expansion of `det` (in the original orbitals) over `basis` (in the
/// orbitals `phi'_q = sum_p phi_p C_pq` of an orthogonal `C`). Each
/// coefficient is the product of the spin-up and spin-down minors of `C`.
pub fn rotate_determinant(
    det: &SlaterDeterminant,
    c: &nalgebra::DMatrix<f64>,
    basis: &[SlaterDeterminant],
) -> CiVector {
    let minor = |rows: &[usize], cols: &[usize]| -> f64 {
        if rows.len() != cols.len() {
            return 0.0;
        }
        nalgebra::DMatrix::from_fn(rows.len(), cols.len(), |i, j| c[(rows[i], cols[j])]).determinant()
    };
    let (oa, ob) = (occupied(det.alpha), occupied(det.beta));
    let s0 = spin_block_sign(det);
    let coefficients = basis
        .par_iter()
        .map(|d| s0 * spin_block_sign(d) * minor(&oa, &occupied(d.alpha)) * minor(&ob, &occupied(d.beta)))
        .collect();
    CiVector { norb: c.nrows(), basis: basis.to_vec(), coefficients }
}

/// Full second-quantized Hamiltonian on `2*norb` qubits, assembled term by
/// term from Jordan-Wigner ladder operators
/// `a_k = Z_0 ... Z_{k-1} |0><1|_k`:
/// `H = E_core + sum h_pq a+_ps a_qs + 1/2 sum (pq|rs) a+_ps a+_rt a_st a_qs`.
pub fn jw_oracle(ints: &IntegralSet) -> Result<SparseMatrix> {
    let n_so = 2 * ints.norb;
    if n_so > JW_ORACLE_MAX_QUBITS {
        return Err(Error::SizeCap { dim: n_so, cap: JW_ORACLE_MAX_QUBITS });
    }
    let dim = 1usize << n_so;
    let n = ints.norb;
    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .into_par_iter()
        .map(|col| {
            // column `col` of H: H|col> = sum_row H[row, col] |row>
            let x = col as u128;
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            *acc.entry(col).or_default() += ints.e_core;
            for sigma in 0..2 {
                for q in 0..n {
                    let Some((s1, y)) = annihilate(x, 2 * q + sigma) else { continue };
                    for p in 0..n {
                        let h = ints.h[(p, q)];
                        if h == 0.0 {
                            continue;
                        }
                        if let Some((s2, z)) = create(y, 2 * p + sigma) {
                            *acc.entry(z as usize).or_default() += h * s1 * s2;
                        }
                    }
                }
            }
            for sigma in 0..2 {
                for tau in 0..2 {
                    for q in 0..n {
                        let Some((s1, y1)) = annihilate(x, 2 * q + sigma) else { continue };
                        for s in 0..n {
                            let Some((s2, y2)) = annihilate(y1, 2 * s + tau) else { continue };
                            for r in 0..n {
                                let Some((s3, y3)) = create(y2, 2 * r + tau) else { continue };
                                for p in 0..n {
                                    let g = ints.eri(p, q, r, s);
                                    if g == 0.0 {
                                        continue;
                                    }
                                    if let Some((s4, y4)) = create(y3, 2 * p + sigma) {
                                        *acc.entry(y4 as usize).or_default() += 0.5 * g * s1 * s2 * s3 * s4;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            acc.into_iter().filter(|(_, v)| *v != 0.0).collect()
        })
        .collect();
    // rows were built as columns; H is symmetric for real orbitals, transpose anyway
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (c, entries) in rows.into_iter().enumerate() {
        for (r, v) in entries {
            by_row[r].push((c, v));
        }
    }
    Ok(SparseMatrix::from_rows(by_row))
}

/// Dense Jordan-Wigner matrix of the paired generator
/// `P+_a P_i - P+_i P_a` with `P+_p = a+_{p up} a+_{p down}`, on `2 norb` qubits.
pub fn jw_pair_generator(norb: usize, i: usize, a: usize) -> Result<nalgebra::DMatrix<f64>> {
    const MAX_QUBITS: usize = 10;
    let n_qubits = 2 * norb;
    if n_qubits > MAX_QUBITS {
        return Err(Error::SizeCap { dim: n_qubits, cap: MAX_QUBITS });
    }
    if i >= norb || a >= norb || i == a {
        return Err(Error::InvalidInput(format!(
            "pair generator needs distinct orbitals below {norb}, got {i} and {a}"
        )));
    }
    let dim = 1usize << n_qubits;
    let mut g = nalgebra::DMatrix::zeros(dim, dim);
    // move the pair on `from` to `to`: a+_{to up} a+_{to down} a_{from down} a_{from up}
    let hop = |x: u128, from: usize, to: usize| -> Option<(f64, u128)> {
        let (s1, y) = annihilate(x, 2 * from)?;
        let (s2, y) = annihilate(y, 2 * from + 1)?;
        let (s3, y) = create(y, 2 * to + 1)?;
        let (s4, y) = create(y, 2 * to)?;
        Some((s1 * s2 * s3 * s4, y))
    };
    for col in 0..dim {
        if let Some((s, row)) = hop(col as u128, i, a) {
            g[(row as usize, col)] += s;
        }
        if let Some((s, row)) = hop(col as u128, a, i) {
            g[(row as usize, col)] -= s;
        }
    }
    Ok(g)
}

/// Block of a full-register matrix over a sector basis.
pub fn oracle_block(oracle: &SparseMatrix, basis: &[SlaterDeterminant]) -> nalgebra::DMatrix<f64> {
    let idx: Vec<usize> = basis.iter().map(|d| d.qubit_index()).collect();
    nalgebra::DMatrix::from_fn(basis.len(), basis.len(), |i, j| oracle.get(idx[i], idx[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{hubbard_integrals, HubbardSpec};

    fn hubbard(l: usize, t: f64, u: f64) -> IntegralSet {
        hubbard_integrals(&HubbardSpec::half_filled(l, t, u)).unwrap()
    }

    #[test]
    fn rotated_determinant_keeps_overlaps() {
        use crate::integrals::{rotate_orbitals, OrbitalRotation};
        let ints = hubbard(4, 1.0, 3.0);
        let mut rot = OrbitalRotation::identity(4);
        let p: Vec<f64> = (0..rot.params().len()).map(|k| 0.3 * (k as f64 + 1.0).sin()).collect();
        rot.set_params(&p);
        let rotated = rotate_orbitals(&ints, &rot).unwrap();
        let (_, gs) = singlet_sector_ground_state(&ints).unwrap();
        let (ham, gs_rot) = singlet_sector_ground_state(&rotated).unwrap();
        for det in [SlaterDeterminant::reference(2), SlaterDeterminant::new(0b0101, 0b0011)] {
            let v = rotate_determinant(&det, &rot.matrix(), &ham.basis);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let before = gs.state.coefficient(&det).abs();
            let after = crate::linalg::dot(&v.coefficients, &gs_rot.state.coefficients).abs();
            assert!((before - after).abs() < 1e-9, "{before} vs {after}");
        }
    }

    #[test]
    fn ket_convention() {
        let d = SlaterDeterminant::reference(2);
        assert_eq!(d.ket(4), "11110000");
        let d = SlaterDeterminant::new(0b0110, 0b0110);
        assert_eq!(d.ket(4), "00111100");
        assert_eq!(SlaterDeterminant::from_qubit_index(d.qubit_index()), d);
    }

    #[test]
    fn single_orbital_oracle_closed_form() {
        let mut ints = IntegralSet::zeros(1, 0).unwrap();
        ints.h[(0, 0)] = 0.7;
        ints.set_eri(0, 0, 0, 0, 0.3);
        let m = jw_oracle(&ints).unwrap().to_dense();
        let expect = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.7, 0.7, 1.7]));
        assert!((m - expect).amax() < 1e-14);
    }

    #[test]
    fn two_site_spectrum() {
        let (t, u) = (1.0, 4.0);
        let ham = build_sector_hamiltonian(&hubbard(2, t, u), 1, 1, DEFAULT_SECTOR_CAP).unwrap();
        assert_eq!(ham.dim(), 4);
        let (vals, _) = linalg::sorted_eigen(&ham.matrix.to_dense());
        let root = (u * u + 16.0 * t * t).sqrt();
        let mut expect = vec![0.0, u, (u - root) / 2.0, (u + root) / 2.0];
        expect.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{vals:?} vs {expect:?}");
        }
        let gs = ham.ground_state(&EigenConfig::default()).unwrap();
        assert!((gs.energy + 0.8284271247461903).abs() < 1e-8);
        assert!(!gs.degenerate);
    }

    #[test]
    fn sector_block_matches_oracle_for_hubbard() {
        let ints = hubbard(4, 1.0, 2.5);
        let oracle = jw_oracle(&ints).unwrap();
        for (na, nb) in [(2, 2), (1, 3), (3, 1)] {
            let mut ints = ints.clone();
            ints.nelec = na + nb;
            let ham = build_sector_hamiltonian(&ints, na, nb, DEFAULT_SECTOR_CAP).unwrap();
            let diff = (ham.matrix.to_dense() - oracle_block(&oracle, &ham.basis)).amax();
            assert!(diff < 1e-12, "({na},{nb}): {diff}");
        }
    }

    #[test]
    fn oracle_conserves_particle_number() {
        let ints = hubbard(4, 1.0, 1.0);
        let oracle = jw_oracle(&ints).unwrap();
        for i in 0..oracle.dim() {
            for (j, _) in oracle.row(i) {
                assert_eq!(i.count_ones(), j.count_ones());
            }
        }
    }

    #[test]
    fn non_interacting_ground_energy() {
        let l = 6;
        let ints = hubbard(l, 1.0, 0.0);
        let (_, gs) = singlet_sector_ground_state(&ints).unwrap();
        let mut eps: Vec<f64> =
            (1..=l).map(|k| -2.0 * (k as f64 * std::f64::consts::PI / (l + 1) as f64).cos()).collect();
        eps.sort_by(f64::total_cmp);
        let expect: f64 = 2.0 * eps[..l / 2].iter().sum::<f64>();
        assert!((gs.energy - expect).abs() < 1e-10);
    }

    #[test]
    fn size_cap_refuses() {
        let ints = hubbard(6, 1.0, 1.0);
        assert!(matches!(build_sector_hamiltonian(&ints, 3, 3, 100), Err(Error::SizeCap { dim: 400, cap: 100 })));
        assert!(build_sector_hamiltonian(&ints, 3, 2, 1000).is_err());
        assert!(matches!(jw_oracle(&hubbard(8, 1.0, 1.0)), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn fidelity_basics() {
        let a = QubitState::basis(4, 3);
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        let b = QubitState::basis(4, 5);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert!(fidelity(&a, &QubitState::zero(2)).is_err());
    }

    #[test]
    fn hf_is_exact_in_the_non_interacting_limit() {
        let ints = crate::integrals::core_hamiltonian_basis(&hubbard(2, 1.0, 1e-8));
        let (_, gs) = singlet_sector_ground_state(&ints).unwrap();
        let hf = CiVector { norb: 2, basis: vec![SlaterDeterminant::reference(1)], coefficients: vec![1.0] };
        assert!((fidelity(&hf, &gs.state).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn projection_rejects_foreign_weight() {
        let ints = hubbard(2, 1.0, 1.0);
        let ham = build_sector_hamiltonian(&ints, 1, 1, DEFAULT_SECTOR_CAP).unwrap();
        let inside = QubitState::basis(4, SlaterDeterminant::new(1, 2).qubit_index());
        assert_eq!(ham.project(&inside).unwrap().iter().filter(|&&x| x == 1.0).count(), 1);
        assert!(ham.project(&QubitState::basis(4, 0)).is_err());
    }
}
