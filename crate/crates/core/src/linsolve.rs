//! Sparse matrices and linear solvers.
//!
//! Direct solves go through faer's sparse LU (COLAMD ordering, partial
//! pivoting) and sparse Cholesky. Every solve recomputes its residual from
//! the returned solution; a solve that misses the tolerance after a few
//! rounds of iterative refinement is an error, never a silent success.

use std::fmt::Write as _;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use crate::error::{MhdError, Result};

pub const DEFAULT_TOL: f64 = 1e-11;
const REFINEMENT_STEPS: usize = 3;

/// Factorizations are single-threaded so that results are bit-reproducible.
fn sequential() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Compressed sparse row matrix. Column indices are sorted within each row
/// and unique; explicit zeros are kept so that patterns stay stable.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Compresses a coordinate list. Duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            assert!(i < nrows && j < ncols, "entry ({i}, {j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_triplets(rows.len(), ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Adds `v` at `(i, j)`, which must already be in the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[start + k] += v,
            Err(_) => panic!("({i}, {j}) is not in the sparsity pattern"),
        }
    }

    /// Same pattern, all values zero.
    pub fn zeroed(&self) -> Self {
        SparseMatrix {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    /// `Aᵀ x` without forming the transpose.
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * xi;
            }
        }
        y
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            row_ptr[j + 1] += 1;
        }
        for j in 0..self.ncols {
            row_ptr[j + 1] += row_ptr[j];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                col_idx[next[j]] = i;
                values[next[j]] = a;
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseMatrix {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `a * self + b * other` over the union of both patterns.
    pub fn lin_comb(&self, a: f64, other: &SparseMatrix, b: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        if self.same_pattern(other) {
            return SparseMatrix {
                values: self
                    .values
                    .iter()
                    .zip(&other.values)
                    .map(|(x, y)| a * x + b * y)
                    .collect(),
                ..self.clone()
            };
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.nrows {
            let (c1, v1) = self.row(i);
            let (c2, v2) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < c1.len() || q < c2.len() {
                let j1 = c1.get(p).copied().unwrap_or(usize::MAX);
                let j2 = c2.get(q).copied().unwrap_or(usize::MAX);
                if j1 == j2 {
                    col_idx.push(j1);
                    values.push(a * v1[p] + b * v2[q]);
                    p += 1;
                    q += 1;
                } else if j1 < j2 {
                    col_idx.push(j1);
                    values.push(a * v1[p]);
                    p += 1;
                } else {
                    col_idx.push(j2);
                    values.push(b * v2[q]);
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Submatrix selected by index maps (`None` drops a row/column).
    pub fn submatrix(
        &self,
        row_map: impl Fn(usize) -> Option<usize>,
        nrows: usize,
        col_map: impl Fn(usize) -> Option<usize>,
        ncols: usize,
    ) -> Self {
        let mut rows: Vec<Option<usize>> = vec![None; nrows];
        for i in 0..self.nrows {
            if let Some(r) = row_map(i) {
                rows[r] = Some(i);
            }
        }
        let cmap: Vec<Option<usize>> = (0..self.ncols).map(col_map).collect();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for src in rows {
            if let Some(i) = src {
                let (c, v) = self.row(i);
                for (&j, &a) in c.iter().zip(v) {
                    if let Some(nj) = cmap[j] {
                        col_idx.push(nj);
                        values.push(a);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
        // column maps are monotone in practice, but do not rely on it
        let mut m = SparseMatrix { nrows, ncols, row_ptr, col_idx, values };
        m.sort_rows();
        m
    }

    fn sort_rows(&mut self) {
        for i in 0..self.nrows {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            if self.col_idx[r.clone()].windows(2).all(|w| w[0] < w[1]) {
                continue;
            }
            let mut pairs: Vec<(usize, f64)> = self.col_idx[r.clone()]
                .iter()
                .copied()
                .zip(self.values[r.clone()].iter().copied())
                .collect();
            pairs.sort_by_key(|p| p.0);
            for (k, (j, v)) in pairs.into_iter().enumerate() {
                self.col_idx[r.start + k] = j;
                self.values[r.start + k] = v;
            }
        }
    }

    /// Largest entrywise difference `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = self.lin_comb(1.0, &t, -1.0);
        d.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coordinate text dump, one `row col value` line per stored entry.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{i} {j} {v:.17e}");
        }
        out
    }

    /// This matrix reinterpreted as compressed-column storage, i.e. `Aᵀ`.
    fn as_transposed_csc(&self) -> SparseColMatRef<'_, usize, f64> {
        let symbolic = SymbolicSparseColMatRef::new_checked(
            self.ncols,
            self.nrows,
            &self.row_ptr,
            None,
            &self.col_idx,
        );
        SparseColMatRef::new(symbolic, &self.values)
    }
}

/// Incremental builder for block matrices.
#[derive(Debug)]
pub struct BlockBuilder {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl BlockBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        BlockBuilder { nrows, ncols, triplets: Vec::new() }
    }

    pub fn block(&mut self, row0: usize, col0: usize, m: &SparseMatrix, scale: f64) -> &mut Self {
        self.triplets
            .extend(m.triplets().map(|(i, j, v)| (row0 + i, col0 + j, scale * v)));
        self
    }

    pub fn entry(&mut self, i: usize, j: usize, v: f64) -> &mut Self {
        self.triplets.push((i, j, v));
        self
    }

    pub fn build(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, &self.triplets)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Direct,
            tol: DEFAULT_TOL,
            max_iter: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveReport {
    /// `‖A x − b‖₂ / max(‖b‖₂, tiny)`, recomputed from the returned `x`.
    pub residual: f64,
    /// Krylov iterations, or refinement sweeps for the direct path.
    pub iterations: usize,
    pub seconds: f64,
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = a.mul_vec(x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    norm2(&r) / norm2(b).max(f64::MIN_POSITIVE)
}

/// Solves `A x = b`.
pub fn solve(a: &SparseMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(MhdError::Dimension(format!(
            "{}x{} system with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    match opts.method {
        Method::Direct => LuFactor::new(a)?.solve_checked(a, b, opts.tol),
        Method::Iterative => gmres(a, b, opts),
    }
}

/// Symbolic LU analysis, reusable for matrices with an identical pattern.
#[derive(Clone, Debug)]
pub struct LuPattern {
    symbolic: SymbolicLu<usize>,
}

impl LuPattern {
    pub fn analyze(a: &SparseMatrix) -> Result<Self> {
        sequential();
        let symbolic = SymbolicLu::try_new(a.as_transposed_csc().symbolic())
            .map_err(|e| MhdError::Singular(format!("symbolic LU failed: {e:?}")))?;
        Ok(LuPattern { symbolic })
    }
}

/// Numeric sparse LU factorization of a square matrix.
#[derive(Debug)]
pub struct LuFactor {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LuFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        Self::with_pattern(&LuPattern::analyze(a)?, a)
    }

    pub fn with_pattern(pattern: &LuPattern, a: &SparseMatrix) -> Result<Self> {
        sequential();
        if a.nrows() != a.ncols() {
            return Err(MhdError::Dimension(format!("LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        // We hold Aᵀ in column storage, so factor Aᵀ and use transposed solves.
        let lu = Lu::try_new_with_symbolic(pattern.symbolic.clone(), a.as_transposed_csc())
            .map_err(|e| MhdError::Singular(format!("LU factorization failed: {e:?}")))?;
        Ok(LuFactor { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solve plus residual recomputation and iterative refinement.
    pub fn solve_checked(&self, a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        refine(a, b, tol, |r| self.solve(r))
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
#[derive(Debug)]
pub struct CholeskyFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl CholeskyFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(MhdError::Dimension(format!(
                "Cholesky of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        sequential();
        let csc = a.as_transposed_csc();
        let symbolic = SymbolicLlt::try_new(csc.symbolic(), Side::Lower)
            .map_err(|e| MhdError::Singular(format!("symbolic Cholesky failed: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, csc, Side::Lower)
            .map_err(|e| MhdError::Singular(format!("matrix is not positive definite: {e:?}")))?;
        Ok(CholeskyFactor { llt, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    pub fn solve_checked(&self, a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        refine(a, b, tol, |r| self.solve(r))
    }
}

fn refine(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    inner: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = inner(b);
    let mut sweeps = 0;
    loop {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MhdError::Singular("non-finite entries in the solution".into()));
        }
        let r: Vec<f64> = b.iter().zip(a.mul_vec(&x)).map(|(bi, ax)| bi - ax).collect();
        let residual = norm2(&r) / bnorm;
        if residual <= tol {
            return Ok((
                x,
                SolveReport {
                    residual,
                    iterations: sweeps,
                    seconds: start.elapsed().as_secs_f64(),
                },
            ));
        }
        if sweeps == REFINEMENT_STEPS {
            return Err(MhdError::Residual { residual, tol });
        }
        let dx = inner(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        sweeps += 1;
    }
}

/// Zero-fill incomplete LU on the pattern of `A`.
struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &SparseMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = a.nrows();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            let start = lu.row_ptr[i];
            if let Ok(k) = lu.col_idx[start..lu.row_ptr[i + 1]].binary_search(&i) {
                diag[i] = start + k;
            } else {
                return Err(MhdError::Singular(format!("ILU(0): row {i} has no diagonal entry")));
            }
        }
        for i in 0..n {
            let (rs, re) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for kk in rs..re {
                let k = lu.col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag[k]];
                if pivot == 0.0 {
                    return Err(MhdError::Singular(format!("ILU(0): zero pivot at {k}")));
                }
                lu.values[kk] /= pivot;
                let lik = lu.values[kk];
                // row_i -= l_ik * row_k on the existing pattern
                for kj in diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.col_idx[kj];
                    if let Ok(p) = lu.col_idx[rs..re].binary_search(&j) {
                        lu.values[rs + p] -= lik * lu.values[kj];
                    }
                }
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.values[k] * y[self.lu.col_idx[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in self.diag[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[k] * y[self.lu.col_idx[k]];
            }
            y[i] = s / self.lu.values[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned restarted GMRES with ILU(0).
fn gmres(a: &SparseMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    const RESTART: usize = 50;
    let start = Instant::now();
    let n = b.len();
    let ilu = Ilu0::new(a)?;
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut residual;

    while iterations < opts.max_iter {
        let r: Vec<f64> = b.iter().zip(a.mul_vec(&x)).map(|(bi, ax)| bi - ax).collect();
        let beta = norm2(&r);
        residual = beta / bnorm;
        if residual <= opts.tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < RESTART && iterations < opts.max_iter {
            let z = ilu.apply(&basis[k]);
            let mut w = a.mul_vec(&z);
            let mut h = vec![0.0; k + 2];
            for (j, vj) in basis.iter().enumerate() {
                h[j] = dot(&w, vj);
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= h[j] * vi;
                }
            }
            h[k + 1] = norm2(&w);
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let denom = h[k].hypot(h[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
            cs.push(c);
            sn.push(s);
            let next_norm = h[k + 1];
            h[k] = denom;
            h[k + 1] = 0.0;
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(h);
            iterations += 1;
            k += 1;
            if (g[k].abs() / bnorm) <= opts.tol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (yj, vj) in y.iter().zip(&basis) {
            for (u, v) in update.iter_mut().zip(vj) {
                *u += yj * v;
            }
        }
        for (xi, d) in x.iter_mut().zip(ilu.apply(&update)) {
            *xi += d;
        }
    }
    let residual = relative_residual(a, &x, b);
    if !(residual <= opts.tol) {
        return Err(MhdError::NoConvergence { iterations, residual });
    }
    Ok((
        x,
        SolveReport {
            residual,
            iterations,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Factored bordered saddle system
///
/// ```text
/// [ M  Cᵀ 0 ] [x]   [f]
/// [ C  0  m ] [y] = [g]
/// [ 0  mᵀ 0 ] [λ]   [0]
/// ```
///
/// The scalar multiplier `λ` pins the multiplier `y` to `mᵀ y = 0` without
/// fixing any single entry.
#[derive(Debug)]
pub struct SaddleSolver {
    matrix: SparseMatrix,
    factor: LuFactor,
    n_primal: usize,
    n_mult: usize,
    tol: f64,
}

impl SaddleSolver {
    pub fn new(m: &SparseMatrix, c: &SparseMatrix, mean: Option<&[f64]>, tol: f64) -> Result<Self> {
        let (np, nm) = (m.nrows(), c.nrows());
        if m.ncols() != np || c.ncols() != np || mean.is_some_and(|v| v.len() != nm) {
            return Err(MhdError::Dimension(format!(
                "saddle blocks M {}x{}, C {}x{}",
                m.nrows(),
                m.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        let border = usize::from(mean.is_some());
        let n = np + nm + border;
        let mut builder = BlockBuilder::new(n, n);
        builder.block(0, 0, m, 1.0);
        builder.block(np, 0, c, 1.0);
        builder.block(0, np, &c.transpose(), 1.0);
        if let Some(mv) = mean {
            for (q, &w) in mv.iter().enumerate() {
                builder.entry(np + q, np + nm, w);
                builder.entry(np + nm, np + q, w);
            }
        }
        // Keep an explicit (zero) diagonal so the pattern is square-complete.
        for i in np..n {
            builder.entry(i, i, 0.0);
        }
        let matrix = builder.build();
        let factor = LuFactor::new(&matrix)?;
        Ok(SaddleSolver {
            matrix,
            factor,
            n_primal: np,
            n_mult: nm,
            tol,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Returns `(x, y, report)`.
    pub fn solve(&self, f: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
        let mut rhs = Vec::with_capacity(self.matrix.nrows());
        rhs.extend_from_slice(f);
        rhs.extend_from_slice(g);
        rhs.resize(self.matrix.nrows(), 0.0);
        let (sol, report) = self.factor.solve_checked(&self.matrix, &rhs, self.tol)?;
        let x = sol[..self.n_primal].to_vec();
        let y = sol[self.n_primal..self.n_primal + self.n_mult].to_vec();
        Ok((x, y, report))
    }
}

/// One-shot bordered saddle solve; see [`SaddleSolver`].
pub fn solve_saddle(
    m: &SparseMatrix,
    c: &SparseMatrix,
    rhs_top: &[f64],
    rhs_constraint: &[f64],
    mean: Option<&[f64]>,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
    SaddleSolver::new(m, c, mean, tol)?.solve(rhs_top, rhs_constraint)
}
