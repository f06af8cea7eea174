//! The weight subproblem: with `U` fixed, `Λ̃` (the column-stacked weights)
//! solves
//!
//! ```text
//! min  V Λ̃ + α ||Λ̃||²   s.t.  M Λ̃ = 1_n,  P Λ̃ = b,  Λ̃ >= 0
//! ```
//!
//! over the variables whose node is not isolated under their motif. `M` sums
//! each node's weights; the rows of `P` express `U_kᵀ D_f U_l` as a linear
//! function of the weights.
//!
//! Stationarity gives `Λ̃ = (Mᵀ Φ1 + Pᵀ Φ2 - Vᵀ) / 2α`. Because `M Mᵀ` is
//! diagonal (the per-node free counts), `Φ1` can be eliminated exactly and
//! only a small Schur complement in `Φ2` remains.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{LambdaUpdate, MotifBundle, OrthoConstraints, WeightMatrix};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, Embedding};

#[derive(Clone, Debug)]
pub struct LambdaProblem {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Linear cost, entry `j * n + i` for weight `(i, j)`.
    pub v: Vec<f64>,
    /// Constraint rows over the stacked variables; the first `k` rows are the
    /// diagonal terms `U_kᵀ D_f U_k`, any further rows the off-diagonal ones.
    pub p: DMatrix<f64>,
    pub p_rhs: Vec<f64>,
    /// Variables not fixed to zero.
    pub free: Vec<bool>,
}

impl LambdaProblem {
    pub fn num_vars(&self) -> usize {
        self.n * self.m
    }

    pub fn objective(&self, x: &[f64], alpha: f64) -> f64 {
        self.v.iter().zip(x).map(|(v, x)| v * x).sum::<f64>() + alpha * x.iter().map(|x| x * x).sum::<f64>()
    }

    /// Largest violation of the row-sum and `P` equality constraints.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let s: f64 = (0..self.m).map(|j| x[j * self.n + i]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        let px = &self.p * DVector::from_column_slice(x);
        for (r, b) in px.iter().zip(&self.p_rhs) {
            worst = worst.max((r - b).abs());
        }
        worst
    }
}

/// Builds the problem with only the diagonal normalization rows.
pub fn build_lambda_problem(bundle: &MotifBundle, u: &Embedding) -> Result<LambdaProblem> {
    build_lambda_problem_with(bundle, u, OrthoConstraints::Diagonal)
}

/// For every column `k` and motif `j` (all vectors over nodes):
///
/// * `Ã_k = U_k ∘ (A_j U_k)`, so that `Σ_k Ã_k Λ̃ = tr(Uᵀ A_f U)`;
/// * `Â_k = U_k² ∘ deg_j` and `Ā_k = A_j U_k²`, so that
///   `½ (Â_k + Ā_k) Λ̃ = U_kᵀ D_f U_k`.
///
/// `V = Σ_k ½ (Â_k + Ā_k) - Ã_k`. The `P` rows are `½ (Â_k + Ā_k)`, which makes
/// the constraint right-hand side exactly one.
pub fn build_lambda_problem_with(
    bundle: &MotifBundle,
    u: &Embedding,
    constraints: OrthoConstraints,
) -> Result<LambdaProblem> {
    let (n, m, k) = (bundle.n(), bundle.m(), u.ncols());
    if u.nrows() != n {
        return Err(Error::Dimension(format!("U has {} rows, bundle has {n} nodes", u.nrows())));
    }
    let pairs: Vec<(usize, usize)> = match constraints {
        OrthoConstraints::Diagonal => (0..k).map(|a| (a, a)).collect(),
        OrthoConstraints::Full => (0..k)
            .map(|a| (a, a))
            .chain((0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))))
            .collect(),
    };
    let mut v = vec![0.0; n * m];
    let mut p = DMatrix::zeros(pairs.len(), n * m);
    let p_rhs = pairs.iter().map(|&(a, b)| if a == b { 1.0 } else { 0.0 }).collect();
    let mut t = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut prod = vec![0.0; n];
    for j in 0..m {
        let csr = bundle.csr(j);
        let deg = bundle.degree(j);
        for (r, &(a, b)) in pairs.iter().enumerate() {
            let ua = u.column(a);
            let ub = u.column(b);
            for i in 0..n {
                prod[i] = ua[i] * ub[i];
            }
            csr.matvec(&prod, &mut s);
            for i in 0..n {
                p[(r, j * n + i)] = 0.5 * (prod[i] * deg[i] + s[i]);
            }
            if a == b {
                csr.matvec(ua.as_slice(), &mut t);
                for i in 0..n {
                    v[j * n + i] += p[(r, j * n + i)] - ua[i] * t[i];
                }
            }
        }
    }
    let mut free = vec![false; n * m];
    for j in 0..m {
        for i in 0..n {
            free[j * n + i] = bundle.is_free(i, j);
        }
    }
    Ok(LambdaProblem { n, m, k, v, p, p_rhs, free })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaMethod {
    /// Closed-form multipliers, no clipping needed.
    ClosedForm,
    /// Exact minimizer from the active-set iteration.
    ActiveSet,
    /// Clipped closed form followed by row rescaling.
    ClipRenormalize,
}

#[derive(Clone, Debug)]
pub struct LambdaOptions {
    pub update: LambdaUpdate,
    /// Relative tolerance for the conjugate-gradient Schur solve.
    pub cg_tol: f64,
    /// Eigenvalues of the Schur complement below this fraction of the largest
    /// are treated as zero (minimum-norm multipliers).
    pub rank_tol: f64,
    pub max_active_set_iter: Option<usize>,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        Self {
            update: LambdaUpdate::Exact,
            cg_tol: 1e-13,
            rank_tol: 1e-11,
            max_active_set_iter: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LambdaSolution {
    pub weights: WeightMatrix,
    /// Stacked solution.
    pub stacked: Vec<f64>,
    /// Closed-form `(Mᵀ Φ1 + Pᵀ Φ2 - Vᵀ) / 2α` before any projection.
    pub unclipped: Vec<f64>,
    pub objective: f64,
    pub method: LambdaMethod,
    /// The closed form had negative entries.
    pub clipped: bool,
    pub active_set_iterations: usize,
    /// Some Schur solve fell back to minimum-norm multipliers.
    pub rank_deficient: bool,
    pub equality_residual: f64,
}

/// Closed-form step with clip-and-renormalize repair.
pub fn solve_lambda(problem: &LambdaProblem, alpha: f64, cg_tol: f64) -> Result<WeightMatrix> {
    let opts = LambdaOptions {
        update: LambdaUpdate::ClipRenormalize,
        cg_tol,
        ..LambdaOptions::default()
    };
    Ok(solve_lambda_with(problem, alpha, &opts, None)?.weights)
}

/// Solves the weight step. With [`LambdaUpdate::Exact`] and a feasible `warm`
/// start (the previous weights), the result is the exact minimizer even when
/// the closed form has negative entries.
pub fn solve_lambda_with(
    problem: &LambdaProblem,
    alpha: f64,
    opts: &LambdaOptions,
    warm: Option<&WeightMatrix>,
) -> Result<LambdaSolution> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let (n, m) = (problem.n, problem.m);
    if problem.v.len() != n * m || problem.p.ncols() != n * m || problem.free.len() != n * m {
        return Err(Error::Dimension("inconsistent weight problem".into()));
    }
    for i in 0..n {
        if !(0..m).any(|j| problem.free[j * n + i]) {
            return Err(Error::Config(format!("node {i} has no non-isolated motif")));
        }
    }

    let mut reduced = Reduced::new(problem, &vec![false; n * m]);
    let rhs_p: Vec<f64> = problem.p_rhs.iter().map(|b| 2.0 * alpha * b).collect();
    let (phi1, phi2) = reduced.multipliers(&problem.v, 2.0 * alpha, &rhs_p, opts);
    let unclipped = reduced.primal(&phi1, &phi2, &problem.v, alpha);
    let mut rank_deficient = reduced.rank_deficient;
    let clipped = unclipped.iter().zip(&problem.free).any(|(&x, &f)| f && x < 0.0);

    let finish = |mut x: Vec<f64>, method, iters, rank_deficient| -> Result<LambdaSolution> {
        // remove rounding drift from the row sums; forced single weights become exactly one
        for i in 0..n {
            let s: f64 = (0..m).map(|j| x[j * n + i]).sum();
            if s > 0.0 {
                (0..m).for_each(|j| x[j * n + i] /= s);
            }
        }
        Ok(LambdaSolution {
            weights: WeightMatrix::from_stacked(n, m, &x)?,
            objective: problem.objective(&x, alpha),
            equality_residual: problem.equality_residual(&x),
            stacked: x,
            unclipped: unclipped.clone(),
            method,
            clipped,
            active_set_iterations: iters,
            rank_deficient,
        })
    };

    if !clipped && problem.equality_residual(&unclipped) <= 1e-8 {
        return finish(unclipped.clone(), LambdaMethod::ClosedForm, 0, rank_deficient);
    }
    if opts.update == LambdaUpdate::Exact {
        if let Some(w) = warm {
            match active_set(problem, alpha, opts, w) {
                Some((x, iters, rd)) => {
                    rank_deficient |= rd;
                    return finish(x, LambdaMethod::ActiveSet, iters, rank_deficient);
                }
                None => log::warn!("warm start is not feasible; falling back to clip-and-renormalize"),
            }
        }
    }
    let mut x: Vec<f64> = unclipped.iter().zip(&problem.free).map(|(&x, &f)| if f { x.max(0.0) } else { 0.0 }).collect();
    for i in 0..n {
        let s: f64 = (0..m).map(|j| x[j * n + i]).sum();
        let free: Vec<usize> = (0..m).filter(|&j| problem.free[j * n + i]).collect();
        for &j in &free {
            x[j * n + i] = if s > 0.0 { x[j * n + i] / s } else { 1.0 / free.len() as f64 };
        }
    }
    if clipped {
        log::debug!("weight step clipped negative entries; rows renormalized");
    }
    finish(x, LambdaMethod::ClipRenormalize, 0, rank_deficient)
}

/// Equality-constrained KKT system restricted to the variables not held at
/// zero, with `Φ1` eliminated node by node.
struct Reduced<'a> {
    problem: &'a LambdaProblem,
    /// Variable is free and not in the working set.
    inactive: Vec<bool>,
    count: Vec<usize>,
    /// Column `i`: sum of the `P` columns of node `i`'s inactive variables.
    col_sums: DMatrix<f64>,
    /// `P_F P_Fᵀ`.
    gram: DMatrix<f64>,
    rank_deficient: bool,
}

impl<'a> Reduced<'a> {
    fn new(problem: &'a LambdaProblem, working: &[bool]) -> Self {
        let r = problem.p.nrows();
        let mut red = Self {
            problem,
            inactive: problem.free.iter().zip(working).map(|(&f, &w)| f && !w).collect(),
            count: vec![0; problem.n],
            col_sums: DMatrix::zeros(r, problem.n),
            gram: DMatrix::zeros(r, r),
            rank_deficient: false,
        };
        red.rebuild();
        red
    }

    fn rebuild(&mut self) {
        let n = self.problem.n;
        self.count.iter_mut().for_each(|c| *c = 0);
        self.col_sums.fill(0.0);
        self.gram.fill(0.0);
        for idx in 0..self.inactive.len() {
            if self.inactive[idx] {
                self.inactive[idx] = false;
                self.toggle(idx, n, true);
            }
        }
    }

    fn toggle(&mut self, idx: usize, n: usize, on: bool) {
        let i = idx % n;
        let col = self.problem.p.column(idx);
        let sign = if on { 1.0 } else { -1.0 };
        self.gram.ger(sign, &col, &col, 1.0);
        let mut cs = self.col_sums.column_mut(i);
        cs.axpy(sign, &col, 1.0);
        if on {
            self.count[i] += 1;
        } else {
            self.count[i] -= 1;
        }
        self.inactive[idx] = on;
    }

    /// Solves `C_F C_Fᵀ Φ = [rhs_m 1 + M_F h ; rhs_p + P_F h]`.
    fn multipliers(&mut self, h: &[f64], rhs_m: f64, rhs_p: &[f64], opts: &LambdaOptions) -> (Vec<f64>, DVector<f64>) {
        let (n, r) = (self.problem.n, self.problem.p.nrows());
        let mut h_sum = vec![0.0; n];
        let mut ph = DVector::from_column_slice(rhs_p);
        for (idx, &on) in self.inactive.iter().enumerate() {
            if on {
                h_sum[idx % n] += h[idx];
                ph.axpy(h[idx], &self.problem.p.column(idx), 1.0);
            }
        }
        let mut schur = self.gram.clone();
        let mut rhs = ph;
        for i in 0..n {
            if self.count[i] == 0 {
                continue;
            }
            let c = self.col_sums.column(i);
            let inv = 1.0 / self.count[i] as f64;
            schur.ger(-inv, &c, &c, 1.0);
            rhs.axpy(-(rhs_m + h_sum[i]) * inv, &c, 1.0);
        }
        let phi2 = if r == 0 {
            DVector::zeros(0)
        } else {
            let (x, deficient) = schur_solve(schur, &rhs, opts);
            self.rank_deficient |= deficient;
            x
        };
        let phi1 = (0..n)
            .map(|i| {
                if self.count[i] == 0 {
                    0.0
                } else {
                    (rhs_m + h_sum[i] - self.col_sums.column(i).dot(&phi2)) / self.count[i] as f64
                }
            })
            .collect();
        (phi1, phi2)
    }

    /// `(Mᵀ Φ1 + Pᵀ Φ2 - h) / 2α` on inactive variables, zero elsewhere.
    fn primal(&self, phi1: &[f64], phi2: &DVector<f64>, h: &[f64], alpha: f64) -> Vec<f64> {
        let n = self.problem.n;
        let pt_phi = self.problem.p.tr_mul(phi2);
        (0..self.inactive.len())
            .map(|idx| {
                if self.inactive[idx] {
                    (phi1[idx % n] + pt_phi[idx] - h[idx]) / (2.0 * alpha)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Solves the small symmetric PSD Schur system by conjugate gradient when it
/// is well conditioned, otherwise by the minimum-norm pseudo-inverse.
fn schur_solve(s: DMatrix<f64>, rhs: &DVector<f64>, opts: &LambdaOptions) -> (DVector<f64>, bool) {
    let r = s.nrows();
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let thresh = opts.rank_tol * top;
    let full_rank = top > 0.0 && eig.eigenvalues.iter().all(|&l| l > thresh);
    if full_rank {
        let apply = |x: &[f64], y: &mut [f64]| {
            let out = &s * DVector::from_column_slice(x);
            y.copy_from_slice(out.as_slice());
        };
        if let Ok(sol) = conjugate_gradient(apply, rhs.as_slice(), opts.cg_tol, 20 * r.max(1)) {
            return (DVector::from_vec(sol.x), false);
        }
    }
    let mut x = DVector::zeros(r);
    for (c, &l) in eig.eigenvalues.iter().enumerate() {
        if l > thresh && l > 0.0 {
            let q = eig.eigenvectors.column(c);
            x.axpy(q.dot(rhs) / l, &q, 1.0);
        }
    }
    (x, !full_rank)
}

/// Primal active-set method for the strictly convex QP, started from a
/// feasible point. Returns `None` when `warm` is not feasible.
fn active_set(
    problem: &LambdaProblem,
    alpha: f64,
    opts: &LambdaOptions,
    warm: &WeightMatrix,
) -> Option<(Vec<f64>, usize, bool)> {
    let (n, m) = (problem.n, problem.m);
    if warm.n() != n || warm.m() != m {
        return None;
    }
    let mut x: Vec<f64> = warm
        .stacked()
        .into_iter()
        .zip(&problem.free)
        .map(|(v, &f)| if f { v.max(0.0) } else { 0.0 })
        .collect();
    if problem.equality_residual(&x) > 1e-6 {
        return None;
    }
    let mut working: Vec<bool> = x.iter().zip(&problem.free).map(|(&v, &f)| f && v == 0.0).collect();
    let mut red = Reduced::new(problem, &working);
    if (0..n).any(|i| red.count[i] == 0) {
        return None;
    }

    let nvars = problem.free.iter().filter(|&&f| f).count();
    let max_iter = opts.max_active_set_iter.unwrap_or(20 * nvars + 100);
    let zeros_p = vec![0.0; problem.p.nrows()];
    let mut changes = 0;
    for iter in 0..max_iter {
        if changes >= 64 {
            red.rebuild();
            changes = 0;
        }
        let g: Vec<f64> = problem.v.iter().zip(&x).map(|(v, x)| v + 2.0 * alpha * x).collect();
        let (l1, l2) = red.multipliers(&g, 0.0, &zeros_p, opts);
        let p = red.primal(&l1, &l2, &g, alpha);
        let x_scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let p_norm = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        if p_norm <= 1e-13 * x_scale {
            // stationary on the current working set: check bound multipliers
            let g_scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let pt_l = problem.p.tr_mul(&l2);
            let mut drop: Option<(usize, f64)> = None;
            for idx in 0..n * m {
                if working[idx] {
                    let mu = g[idx] - l1[idx % n] - pt_l[idx];
                    if mu < -1e-10 * g_scale && drop.is_none_or(|(_, best)| mu < best) {
                        drop = Some((idx, mu));
                    }
                }
            }
            match drop {
                None => return Some((x, iter, red.rank_deficient)),
                Some((idx, _)) => {
                    working[idx] = false;
                    red.toggle(idx, n, true);
                    changes += 1;
                }
            }
            continue;
        }

        let mut step = 1.0;
        let mut blocking = None;
        for idx in 0..n * m {
            if red.inactive[idx] && p[idx] < 0.0 && red.count[idx % n] > 1 {
                let ratio = -x[idx] / p[idx];
                if ratio < step {
                    step = ratio;
                    blocking = Some(idx);
                }
            }
        }
        for idx in 0..n * m {
            if red.inactive[idx] {
                x[idx] = (x[idx] + step * p[idx]).max(0.0);
            }
        }
        if let Some(b) = blocking {
            x[b] = 0.0;
            working[b] = true;
            red.toggle(b, n, false);
            changes += 1;
        }
    }
    log::warn!("active-set weight step hit its iteration cap ({max_iter}); returning the current feasible iterate");
    Some((x, max_iter, red.rank_deficient))
}
