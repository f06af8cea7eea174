use nalgebra::DMatrix;

use super::{MotifBundle, WeightMatrix};
use crate::error::{Error, Result};
use crate::graph_io::SparseSymMatrix;
use crate::linalg::{degree, laplacian, smallest_generalized_eigenpairs_with, EigenOptions, EigenSolution, Embedding};

/// `A_f = ½ Σ_j (W_j A_j diag(Λ_:j) + diag(Λ_:j) A_j W_j)`.
///
/// Entry `(i, l)` reduces to `½ Σ_j A_j[i,l] (Λ_lj + Λ_ij)`, since a nonzero
/// `A_j[i,l]` already implies both nodes are non-isolated under motif `j`.
pub fn fuse_adjacency(bundle: &MotifBundle, lambda: &WeightMatrix) -> Result<SparseSymMatrix> {
    if lambda.n() != bundle.n() || lambda.m() != bundle.m() {
        return Err(Error::Dimension(format!(
            "weights are {}x{}, bundle is {}x{}",
            lambda.n(),
            lambda.m(),
            bundle.n(),
            bundle.m()
        )));
    }
    let mut entries = Vec::with_capacity(bundle.pattern().len());
    for (e, &(i, l)) in bundle.pattern().iter().enumerate() {
        let mut v = 0.0;
        for j in 0..bundle.m() {
            let a = bundle.pattern_values(j)[e];
            if a != 0.0 {
                v += a * (lambda.get(l, j) + lambda.get(i, j));
            }
        }
        if v != 0.0 {
            entries.push((i, l, 0.5 * v));
        }
    }
    SparseSymMatrix::from_sorted_upper(bundle.n(), entries)
}

/// `tr(Uᵀ (D - A) U)` for a symmetric `A`.
pub(crate) fn trace_quadratic(a: &SparseSymMatrix, u: &Embedding) -> f64 {
    // Σ_{i<l} A_il Σ_k (u_ik - u_lk)²
    let mut t = 0.0;
    for &(i, l, v) in a.entries() {
        if i != l {
            let mut s = 0.0;
            for k in 0..u.ncols() {
                let d = u[(i, k)] - u[(l, k)];
                s += d * d;
            }
            t += v * s;
        }
    }
    t
}

/// `tr(Uᵀ L_f U) + α ||Λ||_F²`.
pub fn objective(bundle: &MotifBundle, lambda: &WeightMatrix, u: &Embedding, alpha: f64) -> Result<f64> {
    if u.nrows() != bundle.n() {
        return Err(Error::Dimension(format!("U has {} rows, bundle has {} nodes", u.nrows(), bundle.n())));
    }
    let a_f = fuse_adjacency(bundle, lambda)?;
    Ok(trace_quadratic(&a_f, u) + alpha * lambda.frobenius_sq())
}

/// Largest entry of `|Uᵀ D_f U - I|` under the given weights.
pub(crate) fn orthonormality_drift(bundle: &MotifBundle, lambda: &WeightMatrix, u: &Embedding) -> Result<f64> {
    let d = degree(&fuse_adjacency(bundle, lambda)?);
    let k = u.ncols();
    let mut g = DMatrix::<f64>::zeros(k, k);
    for (i, &di) in d.iter().enumerate() {
        for a in 0..k {
            for b in a..k {
                g[(a, b)] += di * u[(i, a)] * u[(i, b)];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in a..k {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g[(a, b)] - target).abs());
        }
    }
    Ok(worst)
}

/// `K` smallest generalized eigenvectors of `(L_f, D_f)`; zero degrees are
/// replaced by `ridge` for the solve.
pub fn solve_u(a_f: &SparseSymMatrix, k: usize, ridge: f64) -> Result<(Embedding, Vec<f64>)> {
    let sol = solve_u_with(a_f, k, ridge, &EigenOptions::default(), None)?;
    Ok((sol.vectors, sol.values))
}

pub fn solve_u_with(
    a_f: &SparseSymMatrix,
    k: usize,
    ridge: f64,
    opts: &EigenOptions,
    warm: Option<&Embedding>,
) -> Result<EigenSolution> {
    let mut d = degree(a_f);
    let mut ridged = 0;
    for v in d.iter_mut() {
        if *v <= 0.0 {
            *v = ridge;
            ridged += 1;
        }
    }
    if ridged > 0 {
        log::debug!("applied degree ridge to {ridged} node(s)");
    }
    smallest_generalized_eigenpairs_with(&laplacian(a_f), &d, k, opts, warm)
}
