//! Spatial-orbital Hamiltonians: FCIDUMP I/O, Hubbard chains and orbital rotations.
//!
//! Orbital indices are 0-based in memory and 1-based on disk (FCIDUMP
//! convention). Two-electron integrals use chemist notation `(pq|rs)` and are
//! kept as a dense `norb^4` array in which all eight permutational images of
//! an integral hold the same value.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One- and two-electron integrals plus the core energy offset.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub norb: usize,
    pub nelec: usize,
    pub e_core: f64,
    pub h: DMatrix<f64>,
    eri: Vec<f64>,
}

#[inline]
fn eri_index(n: usize, p: usize, q: usize, r: usize, s: usize) -> usize {
    ((p * n + q) * n + r) * n + s
}

impl IntegralSet {
    /// All-zero integrals for `norb` orbitals and `nelec` electrons.
    pub fn zeros(norb: usize, nelec: usize) -> Result<Self> {
        if !nelec.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("odd electron count {nelec}; only singlets are supported")));
        }
        if nelec / 2 > norb {
            return Err(Error::InvalidInput(format!("{nelec} electrons do not fit in {norb} orbitals as pairs")));
        }
        Ok(Self { norb, nelec, e_core: 0.0, h: DMatrix::zeros(norb, norb), eri: vec![0.0; norb.pow(4)] })
    }

    pub fn npairs(&self) -> usize {
        self.nelec / 2
    }

    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri[eri_index(self.norb, p, q, r, s)]
    }

    /// Coulomb integral `J_pq = (pp|qq)`.
    #[inline]
    pub fn coulomb(&self, p: usize, q: usize) -> f64 {
        self.eri(p, p, q, q)
    }

    /// Exchange integral `K_pq = (pq|pq)`.
    #[inline]
    pub fn exchange(&self, p: usize, q: usize) -> f64 {
        self.eri(p, q, p, q)
    }

    /// Sets `(pq|rs)` and its seven symmetry images.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let n = self.norb;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.eri[eri_index(n, a, b, c, d)] = value;
        }
    }

    /// Sets `h_pq` and `h_qp`.
    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        self.h[(p, q)] = value;
        self.h[(q, p)] = value;
    }

    /// Restores exact 8-fold and `h` symmetry by copying each canonical
    /// representative (`p>=q`, `r>=s`, `pq>=rs`) onto its images.
    pub fn canonicalize(&mut self) {
        let n = self.norb;
        for p in 0..n {
            for q in 0..p {
                let v = self.h[(p, q)];
                self.h[(q, p)] = v;
            }
        }
        for (p, q, r, s) in canonical_quartets(n) {
            let v = self.eri(p, q, r, s);
            self.set_eri(p, q, r, s, v);
        }
    }

    /// Largest violation of the permutational symmetries of `h` and `eri`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.norb;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.h[(p, q)] - self.h[(q, p)]).abs());
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        worst = worst
                            .max((v - self.eri(q, p, r, s)).abs())
                            .max((v - self.eri(p, q, s, r)).abs())
                            .max((v - self.eri(r, s, p, q)).abs());
                    }
                }
            }
        }
        worst
    }

    pub(crate) fn eri_slice(&self) -> &[f64] {
        &self.eri
    }

    pub(crate) fn from_parts(norb: usize, nelec: usize, e_core: f64, h: DMatrix<f64>, eri: Vec<f64>) -> Self {
        debug_assert_eq!(eri.len(), norb.pow(4));
        Self { norb, nelec, e_core, h, eri }
    }
}

/// Canonical index quartets in FCIDUMP write order.
fn canonical_quartets(n: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..n).flat_map(move |p| {
        (0..=p).flat_map(move |q| {
            (0..=p).flat_map(move |r| {
                let s_max = if r == p { q } else { r };
                (0..=s_max).map(move |s| (p, q, r, s))
            })
        })
    })
}

// FCIDUMP ------------------------------------------------------------------

fn parse_value(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

/// Parses FCIDUMP text.
///
/// The namelist header must provide `NORB` and `NELEC`; `MS2` must be zero
/// when present. `ORBSYM`, `ISYM` and other keys are accepted and ignored.
/// Body lines are `value i j k l`: `i j 0 0` sets `h_ij`, `0 0 0 0` the core
/// energy, `i 0 0 0` (orbital energies) is skipped and anything else sets
/// `(ij|kl)`. Later lines overwrite earlier ones.
pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let mut header = String::new();
    let mut header_end = 0;
    let mut started = false;
    for (lineno, line) in lines.by_ref() {
        let trimmed = line.trim();
        if !started {
            if trimmed.is_empty() {
                continue;
            }
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(Error::Parse { line: lineno, msg: "expected '&FCI' namelist header".into() });
            }
            started = true;
        }
        header.push_str(line);
        header.push(',');
        let upper = trimmed.to_ascii_uppercase();
        if upper.contains("&END") || upper.ends_with('/') {
            header_end = lineno;
            break;
        }
    }
    if header_end == 0 {
        return Err(Error::Parse { line: text.lines().count().max(1), msg: "unterminated namelist header".into() });
    }

    let mut body = header.to_ascii_uppercase().replace("&FCI", "").replace("&END", "").replace('/', "");
    while body.contains("= ") || body.contains(" =") {
        body = body.replace("= ", "=").replace(" =", "=");
    }
    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0i64;
    for tok in body.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
        let Some((key, value)) = tok.split_once('=') else {
            // continuation value of an array key such as ORBSYM
            continue;
        };
        let value = value.trim();
        let as_int = || {
            value
                .parse::<i64>()
                .map_err(|_| Error::Parse { line: header_end, msg: format!("cannot read {key}={value}") })
        };
        match key.trim() {
            "NORB" => norb = Some(as_int()?),
            "NELEC" => nelec = Some(as_int()?),
            "MS2" => ms2 = as_int()?,
            _ => {}
        }
    }
    let norb = norb.ok_or(Error::Parse { line: header_end, msg: "header lacks NORB".into() })?;
    let nelec = nelec.ok_or(Error::Parse { line: header_end, msg: "header lacks NELEC".into() })?;
    if norb < 0 || nelec < 0 {
        return Err(Error::Parse { line: header_end, msg: "negative NORB or NELEC".into() });
    }
    if ms2 != 0 {
        return Err(Error::Parse {
            line: header_end,
            msg: format!("MS2={ms2}: only singlet (MS2=0) input is supported"),
        });
    }
    if nelec % 2 != 0 {
        return Err(Error::Parse {
            line: header_end,
            msg: format!("NELEC={nelec} is odd: only singlet pairing is supported"),
        });
    }
    let (norb, nelec) = (norb as usize, nelec as usize);
    let mut ints =
        IntegralSet::zeros(norb, nelec).map_err(|e| Error::Parse { line: header_end, msg: e.to_string() })?;

    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse { line: lineno, msg: format!("expected 5 fields, found {}", fields.len()) });
        }
        let value = parse_value(fields[0])
            .ok_or_else(|| Error::Parse { line: lineno, msg: format!("bad value '{}'", fields[0]) })?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&fields[1..]) {
            let i: i64 = tok.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad index '{tok}'") })?;
            if i < 0 || i as usize > norb {
                return Err(Error::Parse { line: lineno, msg: format!("index {i} outside [0, {norb}]") });
            }
            *slot = i as usize;
        }
        match idx {
            [0, 0, 0, 0] => ints.e_core = value,
            [i, j, 0, 0] if i > 0 && j > 0 => ints.set_h(i - 1, j - 1, value),
            [_, 0, 0, 0] => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => ints.set_eri(i - 1, j - 1, k - 1, l - 1, value),
            _ => {
                return Err(Error::Parse { line: lineno, msg: format!("unrecognised index pattern {idx:?}") });
            }
        }
    }
    Ok(ints)
}

/// Writes canonical FCIDUMP text: header, two-electron integrals (`p>=q`,
/// `r>=s`, `pq>=rs`), one-electron integrals (`p>=q`), then the core energy.
/// Zero integrals are omitted. Values carry 17 significant digits so that
/// re-parsing is exact.
pub fn write_fcidump(ints: &IntegralSet) -> String {
    let n = ints.norb;
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(out, " &FCI NORB={},NELEC={},MS2=0,", n, ints.nelec);
    let _ = writeln!(out, "  ORBSYM={orbsym},");
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for (p, q, r, s) in canonical_quartets(n) {
        let v = ints.eri(p, q, r, s);
        if v != 0.0 {
            let _ = writeln!(out, "{:>24.16e} {:>4} {:>4} {:>4} {:>4}", v, p + 1, q + 1, r + 1, s + 1);
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = ints.h[(p, q)];
            if v != 0.0 {
                let _ = writeln!(out, "{:>24.16e} {:>4} {:>4} {:>4} {:>4}", v, p + 1, q + 1, 0, 0);
            }
        }
    }
    let _ = writeln!(out, "{:>24.16e} {:>4} {:>4} {:>4} {:>4}", ints.e_core, 0, 0, 0, 0);
    out
}

// Hubbard ------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Seeded random integrals with a molecule-like structure: ascending orbital
/// energies with weak one-body coupling, and two-electron integrals built as
/// `(pq|rs) = sum_L B_L[pq] B_L[rs]` from symmetric factors, so the ERI
/// tensor is positive semidefinite with full 8-fold symmetry.
pub fn synthetic_integrals(norb: usize, nelec: usize, seed: u64) -> Result<IntegralSet> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut ints = IntegralSet::zeros(norb, nelec)?;
    for p in 0..norb {
        let level = -2.0 + 3.0 * p as f64 / norb.max(1) as f64;
        ints.set_h(p, p, level + 0.1 * (rng.gen::<f64>() - 0.5));
        for q in 0..p {
            ints.set_h(p, q, 0.2 * (rng.gen::<f64>() - 0.5));
        }
    }
    let factors: Vec<DMatrix<f64>> = (0..norb + 2)
        .map(|_| {
            let mut b = DMatrix::zeros(norb, norb);
            for p in 0..norb {
                b[(p, p)] = 0.4 + 0.3 * rng.gen::<f64>();
                for q in 0..p {
                    let v = 0.2 * (rng.gen::<f64>() - 0.5);
                    b[(p, q)] = v;
                    b[(q, p)] = v;
                }
            }
            b
        })
        .collect();
    for (p, q, r, s) in canonical_quartets(norb) {
        let v: f64 = factors.iter().map(|b| b[(p, q)] * b[(r, s)]).sum::<f64>() / factors.len() as f64;
        ints.set_eri(p, q, r, s, v);
    }
    ints.e_core = rng.gen::<f64>();
    Ok(ints)
}

/// A 1D Hubbard chain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HubbardSpec {
    pub sites: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub boundary: Boundary,
    pub filling: usize,
}

impl HubbardSpec {
    /// Open chain at half filling.
    pub fn half_filled(sites: usize, hopping: f64, interaction: f64) -> Self {
        Self { sites, hopping, interaction, boundary: Boundary::Open, filling: sites }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidInput(format!("Hubbard chain needs at least 2 sites, got {}", self.sites)));
        }
        if !self.filling.is_multiple_of(2) || self.filling > 2 * self.sites {
            return Err(Error::InvalidInput(format!(
                "filling {} must be even and at most {}",
                self.filling,
                2 * self.sites
            )));
        }
        Ok(())
    }
}

/// Site-basis integrals of a Hubbard chain. For two sites the periodic wrap
/// bond coincides with the open bond and is not added twice.
pub fn hubbard_integrals(spec: &HubbardSpec) -> Result<IntegralSet> {
    spec.validate()?;
    let l = spec.sites;
    let mut ints = IntegralSet::zeros(l, spec.filling)?;
    for p in 0..l - 1 {
        ints.set_h(p, p + 1, -spec.hopping);
    }
    if spec.boundary == Boundary::Periodic && l > 2 {
        ints.set_h(0, l - 1, -spec.hopping);
    }
    for p in 0..l {
        ints.set_eri(p, p, p, p, spec.interaction);
    }
    Ok(ints)
}

// Orbital rotations ----------------------------------------------------------

/// Antisymmetric generator `kappa` of an orbital rotation `C = exp(kappa)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalRotation {
    pub kappa: DMatrix<f64>,
    /// When set, only entries with both indices in this list may be nonzero.
    pub active: Option<Vec<usize>>,
}

impl OrbitalRotation {
    pub fn identity(norb: usize) -> Self {
        Self { kappa: DMatrix::zeros(norb, norb), active: None }
    }

    pub fn with_active(norb: usize, active: Option<Vec<usize>>) -> Self {
        Self { kappa: DMatrix::zeros(norb, norb), active }
    }

    pub fn norb(&self) -> usize {
        self.kappa.nrows()
    }

    /// Independent `(p, q)` pairs, `p < q`, that the rotation may mix.
    pub fn parameter_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.norb();
        let allowed = |p: usize| self.active.as_ref().is_none_or(|a| a.contains(&p));
        let mut pairs = Vec::new();
        for p in 0..n {
            for q in p + 1..n {
                if allowed(p) && allowed(q) {
                    pairs.push((p, q));
                }
            }
        }
        pairs
    }

    pub fn params(&self) -> Vec<f64> {
        self.parameter_pairs().iter().map(|&(p, q)| self.kappa[(p, q)]).collect()
    }

    pub fn set_params(&mut self, values: &[f64]) {
        let pairs = self.parameter_pairs();
        assert_eq!(pairs.len(), values.len(), "parameter count mismatch");
        self.kappa.fill(0.0);
        for (&(p, q), &v) in pairs.iter().zip(values) {
            self.kappa[(p, q)] = v;
            self.kappa[(q, p)] = -v;
        }
    }

    pub fn check_antisymmetric(&self) -> Result<()> {
        let k = &self.kappa;
        if !k.is_square() {
            return Err(Error::Contract("kappa must be square".into()));
        }
        let defect = (k + k.transpose()).amax();
        if defect > 1e-12 {
            return Err(Error::Contract(format!("kappa is not antisymmetric (defect {defect:.3e})")));
        }
        if let Some(active) = &self.active {
            for p in 0..k.nrows() {
                for q in 0..k.ncols() {
                    if k[(p, q)] != 0.0 && !(active.contains(&p) && active.contains(&q)) {
                        return Err(Error::Contract(format!("kappa[{p},{q}] lies outside the active space")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Orthogonal rotation matrix `exp(kappa)` (columns are new orbitals).
    pub fn matrix(&self) -> DMatrix<f64> {
        if self.kappa.iter().all(|&x| x == 0.0) {
            return DMatrix::identity(self.norb(), self.norb());
        }
        self.kappa.clone().exp()
    }
}

/// Transforms integrals into the orbitals `C = exp(kappa)`:
/// `h' = C^T h C` and the matching four-index transform of `(pq|rs)`.
pub fn rotate_orbitals(ints: &IntegralSet, rot: &OrbitalRotation) -> Result<IntegralSet> {
    if rot.norb() != ints.norb {
        return Err(Error::Contract(format!("kappa is {0}x{0}, integrals have {1} orbitals", rot.norb(), ints.norb)));
    }
    rot.check_antisymmetric()?;
    let c = rot.matrix();
    Ok(transform_integrals(ints, &c))
}

/// Basis change with an arbitrary square coefficient matrix.
pub fn transform_integrals(ints: &IntegralSet, c: &DMatrix<f64>) -> IntegralSet {
    let n = ints.norb;
    let h = c.transpose() * &ints.h * c;

    // four quarter transforms, each contracting one index
    let mut a = ints.eri_slice().to_vec();
    let mut b = vec![0.0; a.len()];
    for _ in 0..4 {
        // b[q,r,s,i] = sum_p a[p,q,r,s] c[p,i]; repeated four times cycles the
        // index order back to (i,j,k,l)
        b.iter_mut().for_each(|x| *x = 0.0);
        for p in 0..n {
            for qrs in 0..n * n * n {
                let v = a[p * n * n * n + qrs];
                if v == 0.0 {
                    continue;
                }
                let dst = &mut b[qrs * n..qrs * n + n];
                for (i, d) in dst.iter_mut().enumerate() {
                    *d += v * c[(p, i)];
                }
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    let mut out = IntegralSet::from_parts(n, ints.nelec, ints.e_core, h, a);
    out.canonicalize();
    out
}

/// Integrals in the eigenbasis of the one-electron matrix `h`, orbitals
/// sorted by ascending eigenvalue and each vector signed so its largest
/// component is positive. For half-filled Hubbard chains this is the
/// restricted Hartree-Fock basis.
pub fn core_hamiltonian_basis(ints: &IntegralSet) -> IntegralSet {
    let (_, mut c) = crate::linalg::sorted_eigen(&ints.h);
    for j in 0..c.ncols() {
        let mut col: Vec<f64> = c.column(j).iter().copied().collect();
        crate::linalg::fix_sign(&mut col);
        c.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    transform_integrals(ints, &c)
}
