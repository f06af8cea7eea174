//! Smallest eigenpairs of `L u = λ D u` through the normalized operator
//! `N = D^{-1/2} L D^{-1/2}`.
//!
//! Small problems go straight to a dense symmetric eigendecomposition. Larger
//! ones use a thick-restarted block Lanczos iteration with full
//! reorthogonalization and Rayleigh–Ritz extraction; if that stalls and the
//! problem is still small enough, the dense path takes over.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Embedding;
use crate::error::{Error, Result};
use crate::graph_io::{SparseSymMatrix, SymCsr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenMethod {
    Dense,
    Krylov,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual tolerance `||N y - θ y||` for each unit Ritz vector.
    pub tol: f64,
    pub max_restarts: usize,
    /// Problems with `n` up to this size are solved densely.
    pub dense_threshold: usize,
    /// Largest `n` for which a stalled Krylov solve falls back to dense.
    pub dense_fallback_limit: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 500,
            dense_threshold: 200,
            dense_fallback_limit: 2000,
            seed: 0x6d6f_6763,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    /// `D`-orthonormal generalized eigenvectors, one per column.
    pub vectors: Embedding,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    pub method: EigenMethod,
    pub restarts: usize,
}

/// `K` smallest generalized eigenpairs with default options.
pub fn smallest_generalized_eigenpairs(l: &SparseSymMatrix, d: &[f64], k: usize, tol: f64) -> Result<(Embedding, Vec<f64>)> {
    let opts = EigenOptions {
        tol,
        ..EigenOptions::default()
    };
    let sol = smallest_generalized_eigenpairs_with(l, d, k, &opts, None)?;
    Ok((sol.vectors, sol.values))
}

/// As [`smallest_generalized_eigenpairs`], optionally warm-started from a
/// previous embedding (used by the alternating solver between iterations).
pub fn smallest_generalized_eigenpairs_with(
    l: &SparseSymMatrix,
    d: &[f64],
    k: usize,
    opts: &EigenOptions,
    warm: Option<&Embedding>,
) -> Result<EigenSolution> {
    let n = l.n();
    if d.len() != n {
        return Err(Error::Dimension(format!("degree vector has length {}, matrix is {n}x{n}", d.len())));
    }
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of a {n}x{n} problem")));
    }
    if let Some(i) = d.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::ZeroDegree(i));
    }
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();

    let (y, values, method, restarts) = if n <= opts.dense_threshold {
        let (y, v) = dense(l, &s, k);
        (y, v, EigenMethod::Dense, 0)
    } else {
        let op = Operator {
            csr: l.to_csr(),
            s: s.clone(),
        };
        let start = warm.filter(|u| u.nrows() == n).map(|u| {
            let mut y = u.clone();
            for (i, mut row) in y.row_iter_mut().enumerate() {
                row *= d[i].sqrt();
            }
            y
        });
        match block_lanczos(&op, k, opts, start.as_ref()) {
            Ok((y, v, r)) => (y, v, EigenMethod::Krylov, r),
            Err(e) if n <= opts.dense_fallback_limit => {
                log::warn!("{e}; falling back to dense eigensolver (n={n})");
                let (y, v) = dense(l, &s, k);
                (y, v, EigenMethod::Dense, opts.max_restarts)
            }
            Err(e) => return Err(e),
        }
    };

    let mut vectors = y;
    for (i, mut row) in vectors.row_iter_mut().enumerate() {
        row *= s[i];
    }
    Ok(EigenSolution {
        vectors,
        values,
        method,
        restarts,
    })
}

fn sorted_eigen(t: DMatrix<f64>) -> (Vec<usize>, SymmetricEigen<f64, nalgebra::Dyn>) {
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    (order, eig)
}

fn dense(l: &SparseSymMatrix, s: &[f64], k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = l.n();
    let mut nm = l.to_dense();
    for i in 0..n {
        for j in 0..n {
            nm[(i, j)] *= s[i] * s[j];
        }
    }
    let (order, eig) = sorted_eigen(nm);
    let mut y = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        y.set_column(c, &eig.eigenvectors.column(idx));
        values.push(eig.eigenvalues[idx]);
    }
    (y, values)
}

struct Operator {
    csr: SymCsr,
    s: Vec<f64>,
}

impl Operator {
    fn n(&self) -> usize {
        self.s.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let scaled: Vec<f64> = x.iter().zip(&self.s).map(|(a, b)| a * b).collect();
        self.csr.matvec(&scaled, y);
        for (v, b) in y.iter_mut().zip(&self.s) {
            *v *= b;
        }
    }
}

/// Orthogonalizes `v` against the first `m` columns of `q`, twice.
fn orthogonalize(q: &DMatrix<f64>, m: usize, v: &mut DVector<f64>) {
    if m == 0 {
        return;
    }
    let basis = q.columns(0, m);
    for _ in 0..2 {
        let h = basis.tr_mul(v);
        *v -= basis * h;
    }
}

/// Appends the orthonormalized `candidates` to the basis, refilling deflated
/// directions with random vectors. Returns how many columns were added.
fn append_block(
    op: &Operator,
    q: &mut DMatrix<f64>,
    aq: &mut DMatrix<f64>,
    m: &mut usize,
    candidates: Vec<DVector<f64>>,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = op.n();
    let cap = q.ncols();
    let first = *m;
    for mut v in candidates {
        if *m == cap {
            break;
        }
        let mut accepted = false;
        for attempt in 0..3 {
            if attempt > 0 {
                v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            }
            let before = v.norm();
            orthogonalize(q, *m, &mut v);
            let after = v.norm();
            if before > 0.0 && after > 1e-10 * before && after > 1e-300 {
                v /= after;
                q.set_column(*m, &v);
                *m += 1;
                accepted = true;
                break;
            }
        }
        if !accepted {
            // the basis already spans everything reachable
            break;
        }
    }
    let added = *m - first;
    let products: Vec<Vec<f64>> = (first..*m)
        .into_par_iter()
        .map(|c| {
            let mut y = vec![0.0; n];
            op.apply(q.column(c).as_slice(), &mut y);
            y
        })
        .collect();
    for (off, y) in products.into_iter().enumerate() {
        aq.set_column(first + off, &DVector::from_vec(y));
    }
    added
}

fn block_lanczos(
    op: &Operator,
    k: usize,
    opts: &EigenOptions,
    warm: Option<&DMatrix<f64>>,
) -> Result<(DMatrix<f64>, Vec<f64>, usize)> {
    let n = op.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let block = (k + 3).min(n);
    let max_dim = (k + 4 * block).max(48).min(n);
    let keep = (k + block).min(max_dim.saturating_sub(block)).max(k.min(max_dim));

    let mut q = DMatrix::zeros(n, max_dim);
    let mut aq = DMatrix::zeros(n, max_dim);
    let mut m = 0usize;

    let mut candidates: Vec<DVector<f64>> = Vec::with_capacity(block);
    if let Some(w) = warm {
        for c in w.column_iter().take(block) {
            candidates.push(c.into_owned());
        }
    }
    while candidates.len() < block {
        candidates.push(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
    }

    for restart in 0..=opts.max_restarts {
        while m < max_dim {
            let first = m;
            let added = append_block(op, &mut q, &mut aq, &mut m, std::mem::take(&mut candidates), &mut rng);
            if added == 0 {
                break;
            }
            candidates = (first..m).map(|c| aq.column(c).into_owned()).collect();
        }

        let qm = q.columns(0, m);
        let aqm = aq.columns(0, m);
        let t = qm.tr_mul(&aqm);
        let t = (&t + t.transpose()) * 0.5;
        let (order, eig) = sorted_eigen(t);
        let wanted = k.min(m);
        let keep_now = keep.min(m);
        let mut yk = DMatrix::zeros(m, keep_now);
        for (c, &idx) in order.iter().take(keep_now).enumerate() {
            yk.set_column(c, &eig.eigenvectors.column(idx));
        }
        let theta: Vec<f64> = order.iter().take(keep_now).map(|&i| eig.eigenvalues[i]).collect();
        let x = qm * &yk;
        let ax = aqm * &yk;
        let mut resid = ax.clone();
        for c in 0..keep_now {
            let xc = x.column(c) * theta[c];
            let mut rc = resid.column_mut(c);
            rc -= xc;
        }
        let converged = m == n || (0..wanted).all(|c| resid.column(c).norm() <= opts.tol);
        if converged && wanted == k {
            let values = theta[..k].to_vec();
            return Ok((x.columns(0, k).into_owned(), values, restart));
        }

        // thick restart: keep the leading Ritz vectors, continue from residuals
        q.columns_mut(0, keep_now).copy_from(&x);
        aq.columns_mut(0, keep_now).copy_from(&ax);
        m = keep_now;
        candidates = (0..keep_now.min(block)).map(|c| resid.column(c).into_owned()).collect();
    }
    Err(Error::NotConverged("block Lanczos eigensolver", opts.max_restarts))
}
