//! UpCCD circuits: gates, a statevector simulator, OpenQASM export, and
//! exact and small-angle expansions of the product of paired rotations.
//!
//! A paired rotation on occupied orbital `i` and virtual orbital `a` acts on
//! qubits `(2i, 2i+1, 2a, 2a+1)` and mixes only `|1100>` and `|0011>`:
//!
//! ```text
//! |1100> -> cos(t)|1100> + sin(t)|0011>
//! |0011> -> -sin(t)|1100> + cos(t)|0011>
//! ```
//!
//! Terms are applied in list order; the default order is `(i, a)` ascending,
//! so the first gate is the rightmost factor of the written operator product.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactref::QubitState;
use crate::pairspace::{enumerate_pair_basis, pair_index, AmplitudeMatrix, PairDeterminant, PairStateVector};

/// Largest register simulated as a full statevector.
pub const MAX_SIM_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X(usize),
    Cx {
        control: usize,
        target: usize,
    },
    Ry {
        qubit: usize,
        theta: f64,
    },
    /// `|10> -> c|10> + s|01>`, `|01> -> -s|10> + c|01>` on `(q0, q1)`.
    Givens {
        q0: usize,
        q1: usize,
        theta: f64,
    },
    PairedDouble {
        qubits: [usize; 4],
        theta: f64,
    },
}

impl Gate {
    pub fn paired(i: usize, a: usize, theta: f64) -> Self {
        Gate::PairedDouble { qubits: [2 * i, 2 * i + 1, 2 * a, 2 * a + 1], theta }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::Ry { qubit: q, .. } => vec![q],
            Gate::Cx { control, target } => vec![control, target],
            Gate::Givens { q0, q1, .. } => vec![q0, q1],
            Gate::PairedDouble { qubits, .. } => qubits.to_vec(),
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { theta, .. } | Gate::Givens { theta, .. } | Gate::PairedDouble { theta, .. } => Some(theta),
            _ => None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::InvalidInput(format!("gate {self:?} uses qubit {q} of a {n_qubits}-qubit register")));
        }
        let distinct: BTreeSet<_> = qs.iter().collect();
        if distinct.len() != qs.len() {
            return Err(Error::InvalidInput(format!("gate {self:?} repeats a qubit")));
        }
        if self.angle().is_some_and(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("gate {self:?} has a non-finite angle")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Rewrites each paired rotation as `CX(2i,2i+1) CX(2a,2a+1) G(2i,2a) CX(2i,2i+1) CX(2a,2a+1)`.
    /// The rewrite agrees with the paired rotation on seniority-zero states.
    pub fn decompose(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        for g in &self.gates {
            match *g {
                Gate::PairedDouble { qubits: [i0, i1, a0, a1], theta } => {
                    let layer = [Gate::Cx { control: i0, target: i1 }, Gate::Cx { control: a0, target: a1 }];
                    out.gates.extend(layer);
                    out.gates.push(Gate::Givens { q0: i0, q1: a0, theta });
                    out.gates.extend(layer);
                }
                other => out.gates.push(other),
            }
        }
        out
    }

    /// Replaces Givens rotations by `CX(q0,q1)`, a controlled `RY(-2t)` on
    /// `q0` controlled by `q1` (two RY and two CX), and `CX(q0,q1)`.
    pub fn lower_givens(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        for g in &self.gates {
            match *g {
                Gate::Givens { q0, q1, theta } => {
                    let phi = -2.0 * theta;
                    out.gates.extend([
                        Gate::Cx { control: q0, target: q1 },
                        Gate::Ry { qubit: q0, theta: phi / 2.0 },
                        Gate::Cx { control: q1, target: q0 },
                        Gate::Ry { qubit: q0, theta: -phi / 2.0 },
                        Gate::Cx { control: q1, target: q0 },
                        Gate::Cx { control: q0, target: q1 },
                    ]);
                }
                other => out.gates.push(other),
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let qs = g.qubits();
            let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    pub fn counts(&self) -> GateCounts {
        let paired = self.gates.iter().filter(|g| matches!(g, Gate::PairedDouble { .. })).count();
        let x = self.gates.iter().filter(|g| matches!(g, Gate::X(_))).count();
        let decomposed = self.decompose();
        let two_qubit = decomposed.gates.iter().filter(|g| g.qubits().len() == 2).count();
        let lowered = decomposed.lower_givens();
        let cx = lowered.gates.iter().filter(|g| matches!(g, Gate::Cx { .. })).count();
        GateCounts {
            native: x + paired,
            paired_rotations: paired,
            two_qubit,
            cx,
            native_depth: self.depth(),
            depth: decomposed.depth(),
        }
    }
}

/// Gate accounting. `native` counts X and paired rotations; `two_qubit`
/// counts CX and Givens gates after decomposition; `cx` counts CX gates once
/// Givens rotations are lowered too; `depth` is the layered depth of the
/// decomposed circuit and `native_depth` that of the native one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub native: usize,
    pub paired_rotations: usize,
    pub two_qubit: usize,
    pub cx: usize,
    pub native_depth: usize,
    pub depth: usize,
}

/// Applies `circuit` to `state`, returning the new state.
pub fn apply(circuit: &Circuit, state: &QubitState) -> Result<QubitState> {
    if circuit.n_qubits != state.n_qubits {
        return Err(Error::InvalidInput(format!(
            "circuit has {} qubits, state has {}",
            circuit.n_qubits, state.n_qubits
        )));
    }
    let mut out = state.clone();
    for g in circuit.gates() {
        apply_gate(g, &mut out.amplitudes);
    }
    Ok(out)
}

fn rotate_pair(amps: &mut [Complex64], lo: usize, hi: usize, c: f64, s: f64) {
    // lo -> c lo + s hi ; hi -> -s lo + c hi
    let (x, y) = (amps[lo], amps[hi]);
    amps[lo] = x * c - y * s;
    amps[hi] = x * s + y * c;
}

fn apply_gate(g: &Gate, amps: &mut [Complex64]) {
    let dim = amps.len();
    match *g {
        Gate::X(q) => {
            let m = 1 << q;
            for k in (0..dim).filter(|k| k & m == 0) {
                amps.swap(k, k | m);
            }
        }
        Gate::Cx { control, target } => {
            let (mc, mt) = (1 << control, 1 << target);
            for k in (0..dim).filter(|k| k & mc != 0 && k & mt == 0) {
                amps.swap(k, k | mt);
            }
        }
        Gate::Ry { qubit, theta } => {
            let m = 1 << qubit;
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            for k in (0..dim).filter(|k| k & m == 0) {
                rotate_pair(amps, k, k | m, c, s);
            }
        }
        Gate::Givens { q0, q1, theta } => {
            let (m0, m1) = (1 << q0, 1 << q1);
            let (c, s) = (theta.cos(), theta.sin());
            for k in (0..dim).filter(|k| k & (m0 | m1) == 0) {
                rotate_pair(amps, k | m0, k | m1, c, s);
            }
        }
        Gate::PairedDouble { qubits: [i0, i1, a0, a1], theta } => {
            let occ = (1 << i0) | (1 << i1);
            let vir = (1 << a0) | (1 << a1);
            let (c, s) = (theta.cos(), theta.sin());
            for k in (0..dim).filter(|k| k & (occ | vir) == 0) {
                rotate_pair(amps, k | occ, k | vir, c, s);
            }
        }
    }
}

/// One paired rotation of the UpCCD product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpccdTerm {
    pub i: usize,
    pub a: usize,
    pub theta: f64,
}

/// Nonzero amplitudes as rotation terms, in the default `(i, a)` order.
pub fn terms_from_amplitudes(t: &AmplitudeMatrix) -> Vec<UpccdTerm> {
    t.nonzero().into_iter().map(|(i, a, theta)| UpccdTerm { i, a, theta }).collect()
}

fn validate_terms(terms: &[UpccdTerm], norb: usize, npairs: usize) -> Result<()> {
    if npairs > norb || 2 * norb > 126 {
        return Err(Error::InvalidInput(format!("{npairs} pairs in {norb} orbitals")));
    }
    let mut seen = BTreeSet::new();
    for t in terms {
        if !(t.i < npairs && npairs <= t.a && t.a < norb) {
            return Err(Error::InvalidInput(format!(
                "term ({}, {}) is not occupied->virtual for {npairs} pairs in {norb} orbitals",
                t.i, t.a
            )));
        }
        if !t.theta.is_finite() {
            return Err(Error::InvalidInput(format!("term ({}, {}) has a non-finite angle", t.i, t.a)));
        }
        if !seen.insert((t.i, t.a)) {
            return Err(Error::InvalidInput(format!("duplicate term ({}, {})", t.i, t.a)));
        }
    }
    Ok(())
}

/// X gates on the reference pairs followed by one paired rotation per term, in list order.
pub fn build_upccd(terms: &[UpccdTerm], norb: usize, npairs: usize) -> Result<Circuit> {
    validate_terms(terms, norb, npairs)?;
    let mut c = Circuit::new(2 * norb);
    for q in 0..2 * npairs {
        c.push(Gate::X(q))?;
    }
    for t in terms {
        c.push(Gate::paired(t.i, t.a, t.theta))?;
    }
    Ok(c)
}

/// OpenQASM 2.0 text. Givens rotations are written out as CX/RY; paired
/// rotations must be decomposed first.
pub fn export_openqasm(circuit: &Circuit) -> Result<String> {
    if circuit.gates().iter().any(|g| matches!(g, Gate::PairedDouble { .. })) {
        return Err(Error::InvalidInput(
            "circuit contains paired rotations; run Circuit::decompose before export".into(),
        ));
    }
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if circuit.n_qubits > 0 {
        let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits);
    }
    for g in circuit.lower_givens().gates() {
        let _ = match *g {
            Gate::X(q) => writeln!(out, "x q[{q}];"),
            Gate::Cx { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
            Gate::Ry { qubit, theta } => writeln!(out, "ry({theta:.16e}) q[{qubit}];"),
            Gate::Givens { .. } | Gate::PairedDouble { .. } => unreachable!("lowered above"),
        };
    }
    Ok(out)
}

/// Which way a term moved a pair along one expansion path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Step {
    Excite { i: usize, a: usize },
    Deexcite { i: usize, a: usize },
}

/// One path through the product that contains at least one deexcitation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedPath {
    pub determinant: String,
    /// Signed product of the angles along the path (deexcitations enter as `-theta`).
    pub amplitude_product: f64,
    /// Contribution of this path to the coefficient in its expansion.
    pub weight: f64,
    pub excitations: usize,
    pub deexcitations: usize,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub norb: usize,
    pub npairs: usize,
    /// Nonzero coefficients keyed by ket string.
    pub coefficients: BTreeMap<String, f64>,
    /// Excitation-deexcitation paths; paths that only excite are omitted.
    pub mixed_paths: Vec<MixedPath>,
    /// Path enumeration stopped at [`MAX_PATHS`]; coefficients are still exact.
    pub truncated: bool,
}

/// Cap on enumerated expansion paths.
pub const MAX_PATHS: usize = 1 << 20;

impl ExpansionReport {
    pub fn coefficient(&self, det: PairDeterminant) -> f64 {
        self.coefficients.get(&det.ket(self.norb)).copied().unwrap_or(0.0)
    }

    pub fn to_pair_state(&self) -> PairStateVector {
        let mut v = PairStateVector::zeros(self.norb, self.npairs);
        for det in enumerate_pair_basis(self.norb, self.npairs) {
            v.coefficients[pair_index(det)] = self.coefficient(det);
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy)]
enum Expansion {
    Exact,
    SmallAngle,
}

#[derive(Clone)]
struct Path {
    mask: u64,
    weight: f64,
    product: f64,
    steps: Vec<Step>,
}

fn expand(terms: &[UpccdTerm], norb: usize, npairs: usize, kind: Expansion) -> Result<ExpansionReport> {
    validate_terms(terms, norb, npairs)?;
    let reference = PairDeterminant::reference(npairs).0;

    // exact coefficients on the pair basis
    let mut coeffs: BTreeMap<u64, f64> = BTreeMap::from([(reference, 1.0)]);
    for t in terms {
        let (c, s) = match kind {
            Expansion::Exact => (t.theta.cos(), t.theta.sin()),
            Expansion::SmallAngle => (1.0, t.theta),
        };
        let mut next: BTreeMap<u64, f64> = BTreeMap::new();
        for (&m, &v) in &coeffs {
            let (occ_i, occ_a) = (m >> t.i & 1 == 1, m >> t.a & 1 == 1);
            let moved = m ^ (1 << t.i) ^ (1 << t.a);
            match (occ_i, occ_a) {
                (true, false) => {
                    *next.entry(m).or_default() += c * v;
                    *next.entry(moved).or_default() += s * v;
                }
                (false, true) => {
                    *next.entry(m).or_default() += c * v;
                    *next.entry(moved).or_default() -= s * v;
                }
                _ => *next.entry(m).or_default() += v,
            }
        }
        coeffs = next;
    }

    // path enumeration for the excitation-deexcitation list
    let mut paths = vec![Path { mask: reference, weight: 1.0, product: 1.0, steps: Vec::new() }];
    let mut truncated = false;
    for t in terms {
        let (c, s) = match kind {
            Expansion::Exact => (t.theta.cos(), t.theta.sin()),
            Expansion::SmallAngle => (1.0, t.theta),
        };
        let mut next = Vec::with_capacity(paths.len());
        for p in paths {
            let (occ_i, occ_a) = (p.mask >> t.i & 1 == 1, p.mask >> t.a & 1 == 1);
            let moved = p.mask ^ (1 << t.i) ^ (1 << t.a);
            let branch = match (occ_i, occ_a) {
                (true, false) => Some((1.0, Step::Excite { i: t.i, a: t.a })),
                (false, true) => Some((-1.0, Step::Deexcite { i: t.i, a: t.a })),
                _ => None,
            };
            match branch {
                Some((sign, step)) => {
                    if !truncated && next.len() + 2 > MAX_PATHS {
                        truncated = true;
                    }
                    if !truncated {
                        let mut steps = p.steps.clone();
                        steps.push(step);
                        next.push(Path {
                            mask: moved,
                            weight: p.weight * sign * s,
                            product: p.product * sign * t.theta,
                            steps,
                        });
                    }
                    next.push(Path { weight: p.weight * c, ..p });
                }
                None => next.push(p),
            }
        }
        paths = next;
    }
    let mixed_paths = paths
        .into_iter()
        .filter_map(|p| {
            let deexcitations = p.steps.iter().filter(|s| matches!(s, Step::Deexcite { .. })).count();
            (deexcitations > 0).then(|| MixedPath {
                determinant: PairDeterminant(p.mask).ket(norb),
                amplitude_product: p.product,
                weight: p.weight,
                excitations: p.steps.len() - deexcitations,
                deexcitations,
                steps: p.steps,
            })
        })
        .collect();

    Ok(ExpansionReport {
        norb,
        npairs,
        coefficients: coeffs
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(m, v)| (PairDeterminant(m).ket(norb), v))
            .collect(),
        mixed_paths,
        truncated,
    })
}

/// Product of exact paired rotations applied to the reference in the pair basis.
pub fn exact_expand(terms: &[UpccdTerm], norb: usize, npairs: usize) -> Result<ExpansionReport> {
    expand(terms, norb, npairs, Expansion::Exact)
}

/// Same product with each factor replaced by `1 + theta (P+_a P_i - P+_i P_a)`.
pub fn small_angle_expand(terms: &[UpccdTerm], norb: usize, npairs: usize) -> Result<ExpansionReport> {
    expand(terms, norb, npairs, Expansion::SmallAngle)
}

/// UpCCD state on the pair basis, obtained by simulating the circuit. Only
/// orbitals named in `terms` are simulated; the remaining occupied orbitals
/// stay doubly occupied and the remaining virtuals stay empty.
pub fn upccd_state(terms: &[UpccdTerm], norb: usize, npairs: usize) -> Result<PairStateVector> {
    validate_terms(terms, norb, npairs)?;
    let active: Vec<usize> = terms.iter().flat_map(|t| [t.i, t.a]).collect::<BTreeSet<_>>().into_iter().collect();
    let local = |p: usize| active.binary_search(&p).expect("orbital is active");
    let n_qubits = 2 * active.len();
    if n_qubits > MAX_SIM_QUBITS {
        return Err(Error::SizeCap { dim: n_qubits, cap: MAX_SIM_QUBITS });
    }

    let mut circuit = Circuit::new(n_qubits);
    for &p in active.iter().filter(|&&p| p < npairs) {
        circuit.push(Gate::X(2 * local(p)))?;
        circuit.push(Gate::X(2 * local(p) + 1))?;
    }
    for t in terms {
        circuit.push(Gate::paired(local(t.i), local(t.a), t.theta))?;
    }
    let state = apply(&circuit, &QubitState::zero(n_qubits))?;

    let frozen: u64 = (0..npairs).filter(|p| active.binary_search(p).is_err()).fold(0, |m, p| m | 1 << p);
    let mut out = PairStateVector::zeros(norb, npairs);
    for (k, amp) in state.amplitudes.iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        let mut mask = frozen;
        for (l, &p) in active.iter().enumerate() {
            let up = k >> (2 * l) & 1;
            let down = k >> (2 * l + 1) & 1;
            if up != down {
                return Err(Error::Contract("paired rotations left the seniority-zero space".into()));
            }
            if up == 1 {
                mask |= 1 << p;
            }
        }
        out.coefficients[pair_index(PairDeterminant(mask))] = amp.re;
    }
    Ok(out)
}

/// Orbitals touched by the terms, ascending.
pub fn active_orbitals(terms: &[UpccdTerm]) -> Vec<usize> {
    let set: BTreeSet<usize> = terms.iter().flat_map(|t| [t.i, t.a]).collect();
    set.into_iter().collect()
}

/// Pair determinants with nonzero weight in `state`, as masks over occupied orbitals.
pub fn support(state: &PairStateVector, tol: f64) -> Vec<(PairDeterminant, f64)> {
    state.iter().filter(|(_, c)| c.abs() > tol).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactref::{jw_pair_generator, ToQubitState};
    use crate::pairspace::pccd_expand;
    use nalgebra::DMatrix;

    fn term(i: usize, a: usize, theta: f64) -> UpccdTerm {
        UpccdTerm { i, a, theta }
    }

    fn state_dist(a: &QubitState, b: &QubitState) -> f64 {
        a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn empty_terms_prepare_the_reference() {
        let c = build_upccd(&[], 4, 2).unwrap();
        assert!(c.gates().iter().all(|g| matches!(g, Gate::X(_))));
        let s = apply(&c, &QubitState::zero(8)).unwrap();
        assert_eq!(s.support(1e-12)[0].0, "11110000");
    }

    #[test]
    fn single_term_two_orbitals() {
        let theta = 0.3;
        let c = build_upccd(&[term(0, 1, theta)], 2, 1).unwrap();
        let s = apply(&c, &QubitState::zero(4)).unwrap();
        let sup = s.support(1e-12);
        assert_eq!(sup[0].0, "1100");
        assert!((sup[0].1.re - theta.cos()).abs() < 1e-15);
        assert_eq!(sup[1].0, "0011");
        assert!((sup[1].1.re - theta.sin()).abs() < 1e-15);
    }

    #[test]
    fn duplicate_and_out_of_range_terms() {
        assert!(build_upccd(&[term(0, 2, 0.1), term(0, 2, 0.2)], 4, 2).is_err());
        assert!(build_upccd(&[term(2, 3, 0.1)], 4, 2).is_err());
        assert!(build_upccd(&[term(0, 4, 0.1)], 4, 2).is_err());
        assert!(build_upccd(&[term(0, 2, f64::NAN)], 4, 2).is_err());
    }

    #[test]
    fn paired_rotation_is_the_generator_exponential() {
        let norb = 4;
        for (i, a) in [(0, 1), (0, 3), (1, 2), (2, 0)] {
            let theta = 0.37;
            let u = (jw_pair_generator(norb, i, a).unwrap() * theta).exp();
            let mut c = Circuit::new(2 * norb);
            c.push(Gate::paired(i, a, theta)).unwrap();
            for col in 0..1 << (2 * norb) {
                let out = apply(&c, &QubitState::basis(2 * norb, col)).unwrap();
                for row in 0..1 << (2 * norb) {
                    assert!((out.amplitudes[row].re - u[(row, col)]).abs() < 1e-12, "({i},{a}) {row} {col}");
                }
            }
        }
    }

    #[test]
    fn theta_zero_is_identity() {
        let mut c = Circuit::new(6);
        c.push(Gate::paired(0, 2, 0.0)).unwrap();
        c.push(Gate::Givens { q0: 1, q1: 4, theta: 0.0 }).unwrap();
        c.push(Gate::Ry { qubit: 3, theta: 0.0 }).unwrap();
        let mut s = QubitState::zero(6);
        for (k, a) in s.amplitudes.iter_mut().enumerate() {
            *a = Complex64::new((k as f64).sin(), (k as f64).cos());
        }
        assert_eq!(apply(&c, &s).unwrap(), s);
    }

    #[test]
    fn decompositions_agree_on_pair_states() {
        let terms = [term(0, 2, 0.4), term(1, 3, -0.7), term(0, 3, 0.2), term(1, 2, 1.1)];
        let c = build_upccd(&terms, 4, 2).unwrap();
        let zero = QubitState::zero(8);
        let native = apply(&c, &zero).unwrap();
        let decomposed = apply(&c.decompose(), &zero).unwrap();
        let lowered = apply(&c.decompose().lower_givens(), &zero).unwrap();
        assert!(state_dist(&native, &decomposed) < 1e-12);
        assert!(state_dist(&native, &lowered) < 1e-12);
    }

    #[test]
    fn givens_lowering_is_exact_everywhere() {
        let mut c = Circuit::new(3);
        c.push(Gate::Givens { q0: 2, q1: 0, theta: 0.8 }).unwrap();
        for col in 0..8 {
            let s = QubitState::basis(3, col);
            assert!(state_dist(&apply(&c, &s).unwrap(), &apply(&c.lower_givens(), &s).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn circuit_matches_exact_expansion() {
        let terms = [term(0, 2, 0.4), term(1, 3, -0.7), term(0, 3, 0.2), term(1, 2, 1.1)];
        let sim = apply(&build_upccd(&terms, 4, 2).unwrap(), &QubitState::zero(8)).unwrap();
        let exp = exact_expand(&terms, 4, 2).unwrap().to_pair_state();
        let embedded = exp.to_qubit_state().unwrap();
        assert!(state_dist(&sim, &embedded) < 1e-12);
        assert!((exp.norm() - 1.0).abs() < 1e-12);
        let sub = upccd_state(&terms, 4, 2).unwrap();
        assert!(sub.coefficients.iter().zip(&exp.coefficients).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn mixed_term_structure_and_reversal() {
        let (t02, t03, t12, t13) = (0.11, -0.23, 0.37, 0.19);
        let mut terms = vec![term(0, 2, t02), term(0, 3, t03), term(1, 2, t12), term(1, 3, t13)];
        let det_12 = PairDeterminant(0b0110);
        let det_03 = PairDeterminant(0b1001);
        assert_eq!(det_12.ket(4), "00111100");
        assert_eq!(det_03.ket(4), "11000011");

        let r = small_angle_expand(&terms, 4, 2).unwrap();
        assert!((r.coefficient(det_12) - (t02 - t12 * t03 * t13)).abs() < 1e-15);
        assert!((r.coefficient(det_03) - t13).abs() < 1e-15);
        assert!(r
            .mixed_paths
            .iter()
            .any(|p| p.determinant == "00111100" && p.excitations == 2 && p.deexcitations == 1));

        terms.reverse();
        let r = small_angle_expand(&terms, 4, 2).unwrap();
        assert!((r.coefficient(det_12) - t02).abs() < 1e-15);
        assert!((r.coefficient(det_03) - (t13 - t12 * t03 * t02)).abs() < 1e-15);
    }

    #[test]
    fn no_mixed_paths_means_pccd() {
        let t = AmplitudeMatrix::from_entries(10, 7, &[(2, 8, -0.1575), (5, 9, -0.1569), (6, 7, -0.7315)]).unwrap();
        let terms = terms_from_amplitudes(&t);
        let r = small_angle_expand(&terms, 10, 7).unwrap();
        assert!(r.mixed_paths.is_empty());
        let p = pccd_expand(&t);
        let s = r.to_pair_state();
        assert!(p.coefficients.iter().zip(&s.coefficients).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn subregister_matches_full_register() {
        let terms = [term(1, 5, 0.3), term(2, 4, -0.6), term(1, 4, 0.25)];
        let (norb, npairs) = (6, 3);
        let sub = upccd_state(&terms, norb, npairs).unwrap();
        let full = apply(&build_upccd(&terms, norb, npairs).unwrap(), &QubitState::zero(12)).unwrap();
        assert!(state_dist(&sub.to_qubit_state().unwrap(), &full) < 1e-12);
    }

    #[test]
    fn qasm_export() {
        let c = build_upccd(&[], 2, 1).unwrap();
        assert_eq!(
            export_openqasm(&c).unwrap(),
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[4];\nx q[0];\nx q[1];\n"
        );
        assert_eq!(export_openqasm(&Circuit::new(0)).unwrap(), "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        let c = build_upccd(&[term(0, 1, 0.5)], 2, 1).unwrap();
        assert!(export_openqasm(&c).is_err());
        let text = export_openqasm(&c.decompose()).unwrap();
        assert!(text.contains("ry(-5.0000000000000000e-1) q[0];"));
        assert_eq!(text.lines().filter(|l| l.starts_with("cx")).count(), 8);
    }

    #[test]
    fn gate_counts() {
        let terms = [term(2, 8, -0.1575), term(5, 9, -0.1569), term(6, 7, -0.7315)];
        let k = build_upccd(&terms, 10, 7).unwrap().counts();
        assert_eq!(k.native, 17);
        assert_eq!(k.paired_rotations, 3);
        assert_eq!(k.two_qubit, 15);
        assert_eq!(k.cx, 24);
        assert_eq!(k.native_depth, 2);
        let mut c = build_upccd(&terms, 10, 7).unwrap();
        let before = c.depth();
        c.push(Gate::Cx { control: 0, target: 1 }).unwrap();
        assert!(c.depth() >= before);
    }

    #[test]
    fn generator_oracle_is_antisymmetric() {
        let g = jw_pair_generator(3, 0, 2).unwrap();
        assert_eq!(&g + g.transpose(), DMatrix::zeros(64, 64));
    }
}
