//! Sparse symmetric matrices and lowest-eigenpair solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed for the Lanczos start vector.
pub const LANCZOS_SEED: u64 = 0x05ee_d1a2_c205;

/// Row-compressed real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists. Duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                debug_assert!(c < dim);
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Gershgorin enclosure `[min(a_ii - r_i), max(a_ii + r_i)]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    d = v;
                } else {
                    r += v.abs();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }
}

/// Lowest eigenpair of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<f64>,
    /// Gap to the next eigenvalue, when the solver resolved one.
    pub gap: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl Eigenpair {
    /// Ground state is (numerically) degenerate.
    pub fn degenerate(&self) -> bool {
        self.gap.is_some_and(|g| g < 1e-8)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    /// Matrices smaller than this are diagonalized densely.
    pub dense_below: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { dense_below: 2000, max_iterations: 600, tolerance: 1e-10 }
    }
}

/// Flips the sign so the largest-magnitude component is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    for &x in v.iter() {
        if x.abs() > best.abs() + 1e-14 {
            best = x;
        }
    }
    if best < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Sorted eigenvalues and matching eigenvectors (columns) of a dense symmetric matrix.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.nrows(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn dense_ground_state(m: &DMatrix<f64>) -> Eigenpair {
    let n = m.nrows();
    let (values, vectors) = sorted_eigen(m);
    let mut vector: Vec<f64> = vectors.column(0).iter().copied().collect();
    fix_sign(&mut vector);
    let x = DVector::from_column_slice(&vector);
    let residual = (m * &x - &x * values[0]).norm();
    Eigenpair { energy: values[0], vector, gap: (n > 1).then(|| values[1] - values[0]), residual, iterations: 0 }
}

/// Lowest eigenpair: dense below `cfg.dense_below`, otherwise Lanczos with
/// full reorthogonalization from a seeded random start.
pub fn ground_state(m: &SparseMatrix, cfg: &EigenConfig) -> Result<Eigenpair> {
    if m.dim() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if m.dim() < cfg.dense_below {
        Ok(dense_ground_state(&m.to_dense()))
    } else {
        lanczos(m, cfg)
    }
}

pub fn lanczos(m: &SparseMatrix, cfg: &EigenConfig) -> Result<Eigenpair> {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    normalize(&mut v);

    let max_iter = cfg.max_iterations.min(n);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;

    for k in 0..max_iter {
        let mut w = m.matvec(&basis[k]);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole Krylov basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let beta = dot(&w, &w).sqrt();

        let exhausted = beta < 1e-13 || k + 1 == max_iter;
        if k % 5 == 4 || exhausted {
            let dim = alphas.len();
            let t = DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    alphas[i]
                } else if i + 1 == j {
                    betas[i]
                } else if j + 1 == i {
                    betas[j]
                } else {
                    0.0
                }
            });
            let (values, vectors) = sorted_eigen(&t);
            let s = vectors.column(0);
            let residual = (beta * s[dim - 1]).abs();
            last_residual = residual;
            if residual < cfg.tolerance || beta < 1e-13 {
                let mut x = vec![0.0; n];
                for (i, b) in basis.iter().enumerate() {
                    axpy(s[i], b, &mut x);
                }
                normalize(&mut x);
                fix_sign(&mut x);
                let gap = (dim > 1).then(|| values[1] - values[0]);
                return Ok(Eigenpair { energy: values[0], vector: x, gap, residual, iterations: k + 1 });
            }
        }
        if exhausted {
            break;
        }
        betas.push(beta);
        let mut next = w;
        next.iter_mut().for_each(|x| *x /= beta);
        basis.push(next);
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: last_residual })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> SparseMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, (i % 7) as f64 * 0.3)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        SparseMatrix::from_rows(rows)
    }

    #[test]
    fn diagonal_ground_state() {
        let m = SparseMatrix::from_dense(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0])));
        let gs = ground_state(&m, &EigenConfig::default()).unwrap();
        assert_eq!(gs.energy, 1.0);
        assert_eq!(gs.vector, vec![0.0, 1.0, 0.0]);
        assert_eq!(gs.gap, Some(1.0));
    }

    #[test]
    fn lanczos_matches_dense() {
        let m = chain(300);
        let dense = dense_ground_state(&m.to_dense());
        let lz = lanczos(&m, &EigenConfig::default()).unwrap();
        assert!((dense.energy - lz.energy).abs() < 1e-8);
        let overlap: f64 = dot(&dense.vector, &lz.vector);
        assert!((overlap - 1.0).abs() < 1e-8, "{overlap}");
    }

    #[test]
    fn lanczos_reports_non_convergence() {
        let m = chain(400);
        let cfg = EigenConfig { max_iterations: 6, ..Default::default() };
        assert!(matches!(lanczos(&m, &cfg), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn gershgorin_encloses_spectrum() {
        let m = chain(40);
        let (lo, hi) = m.gershgorin();
        let (values, _) = sorted_eigen(&m.to_dense());
        assert!(lo <= values[0] && values[39] <= hi);
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let m = SparseMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)], vec![(1, 1.0)]]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 2);
    }
}
