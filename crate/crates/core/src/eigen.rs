//! Lowest eigenvalues of sparse symmetric positive semidefinite matrices.
//!
//! The iterative path is a block Lanczos iteration on the shift-inverted
//! operator `(A + σI)^{-1}` with full reorthogonalization, locking of
//! converged pairs and restarts from the best unconverged Ritz vectors.
//! The dense path (`nalgebra`'s symmetric eigensolver) handles small
//! matrices and serves as the oracle for the iterative one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

/// Matrices up to this dimension go to the dense solver under [`Method::Auto`].
pub const DENSE_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    /// Absolute bound on `‖Ax - λx‖` for a unit `x`.
    pub tol: f64,
    /// Seed of the random start block.
    pub seed: u64,
    /// Columns per Lanczos block; 0 picks a size from `k`.
    pub block_size: usize,
    /// Krylov basis size per sweep; 0 picks a size from `k`.
    pub max_basis: usize,
    pub max_restarts: usize,
    /// `σ` in `(A + σI)^{-1}`; must make `A + σI` positive definite.
    pub shift: f64,
    pub exec: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Auto,
            tol: 1e-6,
            seed: 0,
            block_size: 0,
            max_basis: 0,
            max_restarts: 40,
            shift: 1.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// `‖Ax - λx‖ / ‖x‖` per value.
    pub residual_norms: Vec<f64>,
    pub k_requested: usize,
    pub k_converged: usize,
    pub method: Method,
    /// Lanczos sweeps (0 for the dense path).
    pub sweeps: usize,
}

impl EigenResult {
    pub fn is_complete(&self) -> bool {
        self.k_converged == self.k_requested
    }
}

pub fn lowest_eigenvalues(a: &CsrMatrix, k: usize, tol: f64) -> Result<EigenResult> {
    lowest_eigenvalues_with(a, k, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn lowest_eigenvalues_with(a: &CsrMatrix, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    let n = a.dimension();
    if k == 0 || k >= n {
        return Err(Error::validation(format!("need 1 <= k < dimension, got k = {k}, dimension = {n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    match opts.method {
        Method::Dense => dense(a, k),
        Method::Lanczos => lanczos(a, k, opts),
        Method::Auto if n <= DENSE_LIMIT => dense(a, k),
        Method::Auto => lanczos(a, k, opts),
    }
}

fn dense(a: &CsrMatrix, k: usize) -> Result<EigenResult> {
    let m = a.to_dense();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(k);
    let mut residual_norms = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let lam = eig.eigenvalues[i];
        let x = eig.eigenvectors.column(i);
        let r = &m * x - x * lam;
        values.push(lam);
        residual_norms.push(r.norm() / x.norm());
    }
    Ok(EigenResult { values, residual_norms, k_requested: k, k_converged: k, method: Method::Dense, sweeps: 0 })
}

struct Locked {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    residuals: Vec<f64>,
}

impl Locked {
    fn len(&self) -> usize {
        self.values.len()
    }

    /// Value of the `k`-th smallest locked pair.
    fn kth(&self, k: usize) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v[k - 1]
    }
}

fn lanczos(a: &CsrMatrix, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    let n = a.dimension();
    let exec = opts.exec;
    let chol = EnvelopeCholesky::factor(a, opts.shift)?;
    let mut b = if opts.block_size > 0 { opts.block_size } else { (k / 4).clamp(8, 48) }.min(n / 2).max(1);
    let mut stalled = 0;
    let mut settled_before = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut locked = Locked { vectors: DMatrix::zeros(n, 0), values: Vec::new(), residuals: Vec::new() };
    let mut restart: Option<DMatrix<f64>> = None;
    let mut verifying = false;
    let mut certified = false;
    let mut lowest_unconverged = f64::INFINITY;
    let mut sweeps = 0;

    while sweeps < opts.max_restarts {
        sweeps += 1;
        let free = n - locked.len();
        if free == 0 {
            certified = true;
            break;
        }
        let wanted = k.saturating_sub(settled_before.min(locked.len()));
        let auto_basis = (2 * wanted + 2 * b).max(6 * b);
        let cap = if opts.max_basis > 0 { opts.max_basis.max(6 * b) } else { auto_basis }.min(free).max(1);
        let bs = b.min(cap);

        // Start block: restart vectors first, random columns after.
        let mut start = smooth(&chol, DMatrix::from_fn(n, bs, |_, _| rng.random::<f64>() - 0.5), exec);
        if let Some(r) = restart.take() {
            for c in 0..r.ncols().min(bs) {
                start.set_column(c, &r.column(c));
            }
        }
        let mut fresh = || smooth(&chol, DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() - 0.5), exec).column(0).into_owned();
        let mut q = DMatrix::zeros(n, cap);
        let mut bq = DMatrix::zeros(n, cap);
        let mut cur = orthonormalize_into(&mut q, 0, start, &locked.vectors, &mut fresh);
        let mut done = 0;
        while done < cur {
            let block = q.columns(done, cur - done).into_owned();
            let w = solve_block(&chol, &block, exec);
            bq.columns_mut(done, cur - done).copy_from(&w);
            done = cur;
            if cur >= cap {
                break;
            }
            let room = (cap - cur).min(w.ncols());
            let w = w.columns(0, room).into_owned();
            cur = orthonormalize_into(&mut q, cur, w, &locked.vectors, &mut fresh);
        }
        let q = q.columns(0, done).into_owned();
        let bq = bq.columns(0, done).into_owned();
        let mut h = at_b(&q, &bq);
        h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..done).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let candidates = order.len().min(wanted + b);
        let y = DMatrix::from_fn(done, candidates, |r, c| eig.eigenvectors[(r, order[c])]);
        let x = &q * y;
        let ritz: Vec<DVector<f64>> = x
            .column_iter()
            .map(|c| {
                let norm = c.norm();
                c / norm
            })
            .collect();
        let checked = par::map(exec, &ritz, |x| rayleigh_residual(a, x, exec));

        let kth_before = (locked.len() >= k).then(|| locked.kth(k));
        let mut locked_new_below = false;
        let mut unconverged = Vec::new();
        lowest_unconverged = f64::INFINITY;
        for (x, &(rho, res)) in ritz.into_iter().zip(&checked) {
            if res <= opts.tol {
                let x = deflate(x, &locked.vectors);
                let norm = x.norm();
                if norm < 0.5 {
                    continue;
                }
                if kth_before.is_some_and(|kth| rho < kth) {
                    locked_new_below = true;
                }
                let col = locked.vectors.ncols();
                locked.vectors = std::mem::replace(&mut locked.vectors, DMatrix::zeros(0, 0)).insert_column(col, 0.0);
                locked.vectors.set_column(col, &(x / norm));
                locked.values.push(rho);
                locked.residuals.push(res);
            } else {
                lowest_unconverged = lowest_unconverged.min(rho);
                if unconverged.len() < b {
                    unconverged.push(x);
                }
            }
        }

        // Pairs locked above the lowest unconverged value are no progress.
        let settled = locked.values.iter().filter(|&&v| v <= lowest_unconverged + opts.tol).count();
        if settled > settled_before || verifying {
            settled_before = settled;
            stalled = 0;
        } else if 2 * b <= (free / 3).min(256) {
            // A block Krylov space holds at most `b` directions of any one
            // eigenspace, so a stalled sweep usually means a larger cluster.
            b *= 2;
        } else {
            stalled += 1;
            if stalled >= 3 {
                // Nothing left that this tolerance can reach.
                break;
            }
        }
        if locked.len() >= k {
            let kth = locked.kth(k);
            let clear = lowest_unconverged >= kth - opts.tol;
            if verifying && !locked_new_below && clear {
                certified = true;
                break;
            }
            if clear {
                // Confirm from a fresh random start that nothing below the
                // k-th value was missed.
                verifying = true;
                restart = None;
            } else {
                verifying = false;
                restart = (!unconverged.is_empty()).then(|| DMatrix::from_columns(&unconverged));
            }
        } else {
            verifying = false;
            restart = (!unconverged.is_empty()).then(|| DMatrix::from_columns(&unconverged));
        }
    }

    let mut pairs: Vec<(f64, f64)> = locked.values.iter().copied().zip(locked.residuals.iter().copied()).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    if !certified {
        // Only values below every unconverged Ritz value are known to be
        // the lowest ones.
        pairs.retain(|p| p.0 < lowest_unconverged - opts.tol);
    }
    pairs.truncate(k);
    let k_converged = pairs.len();
    Ok(EigenResult {
        values: pairs.iter().map(|p| p.0).collect(),
        residual_norms: pairs.iter().map(|p| p.1).collect(),
        k_requested: k,
        k_converged,
        method: Method::Lanczos,
        sweeps,
    })
}

/// `(A + σI)^{-1} X`, one column per task.
fn solve_block(chol: &EnvelopeCholesky, x: &DMatrix<f64>, exec: Execution) -> DMatrix<f64> {
    let cols = par::map_range(exec, x.ncols(), |c| chol.solve(x.column(c).as_slice()));
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (c, col) in cols.into_iter().enumerate() {
        out.column_mut(c).copy_from_slice(&col);
    }
    out
}

fn rayleigh_residual(a: &CsrMatrix, x: &DVector<f64>, exec: Execution) -> (f64, f64) {
    let ax = DVector::from_vec(a.matvec(x.as_slice(), exec));
    let rho = x.dot(&ax);
    (rho, (ax - x * rho).norm())
}

/// `(A + σI)^{-2} X`: random vectors carry every mode with weight one, and
/// a few stray high modes in the basis cap the attainable residual.
fn smooth(chol: &EnvelopeCholesky, x: DMatrix<f64>, exec: Execution) -> DMatrix<f64> {
    let y = solve_block(chol, &solve_block(chol, &x, exec), exec);
    let norms: Vec<f64> = y.column_iter().map(|c| c.norm()).collect();
    DMatrix::from_fn(y.nrows(), y.ncols(), |r, c| y[(r, c)] / norms[c])
}

/// `Aᵀ B` through the blocked matrix product.
fn at_b(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * b
}

/// Remove from the columns of `w` their components along the orthonormal
/// columns of `basis`.
fn project_out(w: &mut DMatrix<f64>, basis: &DMatrix<f64>) {
    if basis.ncols() > 0 && w.ncols() > 0 {
        let c = at_b(basis, w);
        *w -= basis * c;
    }
}

/// Remove the components along the (orthonormal) columns of `basis`, twice.
fn deflate(x: DVector<f64>, basis: &DMatrix<f64>) -> DVector<f64> {
    let mut x = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    for _ in 0..2 {
        project_out(&mut x, basis);
    }
    DVector::from_column_slice(x.as_slice())
}

/// Orthonormalize the columns of `w` against `locked`, the first `cur`
/// columns of `q` and each other, and append the survivors to `q`.
/// Columns that collapse are replaced by `fresh()` directions.
/// Returns the new column count of `q`.
fn orthonormalize_into(
    q: &mut DMatrix<f64>,
    cur: usize,
    w: DMatrix<f64>,
    locked: &DMatrix<f64>,
    fresh: &mut impl FnMut() -> DVector<f64>,
) -> usize {
    let first = cur;
    let mut cur = cur;
    let mut w = w;
    let original: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    // Block classical Gram-Schmidt against everything older, twice.
    let old = q.columns(0, first).into_owned();
    for _ in 0..2 {
        project_out(&mut w, locked);
        project_out(&mut w, &old);
    }
    for j in 0..w.ncols() {
        if cur >= q.ncols() {
            break;
        }
        let mut v = w.column(j).into_owned();
        let mut reference = original[j];
        let mut accepted = false;
        for attempt in 0..3 {
            if attempt > 0 {
                v = fresh();
                reference = v.norm();
                for _ in 0..2 {
                    v = deflate_once(v, locked);
                    v = deflate_once(v, &old);
                }
            }
            // Against the columns accepted from this block, twice.
            let before = v.norm();
            for _ in 0..2 {
                for c in first..cur {
                    let qc = q.column(c);
                    let d = qc.dot(&v);
                    v.axpy(-d, &qc, 1.0);
                }
            }
            let mut norm = v.norm();
            let mut last = before;
            // Heavy cancellation: full passes until the norm settles.
            for _ in 0..3 {
                if norm >= 0.5 * last || norm <= 1e-12 * reference {
                    break;
                }
                v = deflate_once(v, locked);
                v = deflate_once(v, &q.columns(0, cur).into_owned());
                last = norm;
                norm = v.norm();
            }
            // Below this the column is rounding noise.
            if norm > 1e-12 * reference && norm > 0.0 {
                q.set_column(cur, &(v / norm));
                cur += 1;
                accepted = true;
                break;
            }
        }
        if !accepted {
            // The complement is exhausted.
            break;
        }
    }
    cur
}

fn deflate_once(x: DVector<f64>, basis: &DMatrix<f64>) -> DVector<f64> {
    if basis.ncols() == 0 {
        return x;
    }
    let c = basis.tr_mul(&x);
    x - basis * c
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Mean of the members.
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusteredSpectrum {
    pub clusters: Vec<Cluster>,
}

impl ClusteredSpectrum {
    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }
}

pub fn cluster_multiplicities(result: &EigenResult, rel_gap: f64) -> Result<ClusteredSpectrum> {
    cluster_values(&result.values, rel_gap)
}

/// Greedy gap clustering of ascending values: a value joins the current
/// cluster when its distance to the previous value is at most
/// `rel_gap * max(1, mean of the cluster)`.
pub fn cluster_values(values: &[f64], rel_gap: f64) -> Result<ClusteredSpectrum> {
    if !(rel_gap > 0.0 && rel_gap < 0.5) {
        return Err(Error::validation(format!("rel_gap must lie in (0, 0.5), got {rel_gap}")));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("values must be sorted ascending"));
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    for &v in values {
        match clusters.last_mut() {
            Some(c) if v - prev <= rel_gap * c.value.max(1.0) => {
                sum += v;
                c.multiplicity += 1;
                c.value = sum / c.multiplicity as f64;
            }
            _ => {
                sum = v;
                clusters.push(Cluster { value: v, multiplicity: 1 });
            }
        }
        prev = v;
    }
    Ok(ClusteredSpectrum { clusters })
}
