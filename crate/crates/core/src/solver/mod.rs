//! Alternating minimization of the multi-order clustering objective
//!
//! ```text
//! min_{Λ,U}  tr(Uᵀ L_f U) + α ||Λ||_F²
//! s.t.       Uᵀ D_f U = I,  Λ 1 = 1,  Λ >= 0,  Λ_ij = 0 where node i is isolated under motif j
//! ```
//!
//! where `A_f = ½ Σ_j (W_j A_j diag(Λ_:j) + diag(Λ_:j) A_j W_j)`.
//! With `Λ` fixed the problem is a generalized eigenproblem; with `U` fixed
//! it is a convex quadratic program in the stacked weights.

mod fuse;
mod lambda;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_io::{LabelVector, SymCsr};
use crate::linalg::{kmeans_with, EigenMethod, EigenOptions, Embedding, KMeansOptions};
use crate::motif::MotifAdjacency;

pub use fuse::{fuse_adjacency, objective, solve_u, solve_u_with};
pub use lambda::{
    build_lambda_problem, build_lambda_problem_with, solve_lambda, solve_lambda_with, LambdaMethod, LambdaOptions,
    LambdaProblem, LambdaSolution,
};

/// Ordered motif matrices over a common node set.
#[derive(Clone, Debug)]
pub struct MotifBundle {
    motifs: Vec<MotifAdjacency>,
    /// Union of the motifs' off-diagonal sparsity patterns, upper triangle, sorted.
    pattern: Vec<(usize, usize)>,
    /// `values[j][e]` is motif `j`'s entry at `pattern[e]` (zero when absent).
    values: Vec<Vec<f64>>,
    degrees: Vec<Vec<f64>>,
    csr: Vec<SymCsr>,
}

impl MotifBundle {
    pub fn new(motifs: Vec<MotifAdjacency>) -> Result<Self> {
        let Some(first) = motifs.first() else {
            return Err(Error::Config("motif bundle needs at least one motif".into()));
        };
        let n = first.n();
        if let Some(bad) = motifs.iter().find(|m| m.n() != n) {
            return Err(Error::Dimension(format!(
                "motif {} has {} nodes, expected {n}",
                bad.spec.name(),
                bad.n()
            )));
        }
        let mut all: Vec<(usize, usize, usize, f64)> = Vec::new();
        for (j, m) in motifs.iter().enumerate() {
            for &(a, b, v) in m.matrix.entries() {
                if a == b {
                    return Err(Error::Data(format!("motif {} has a diagonal entry at {a}", m.spec.name())));
                }
                if v < 0.0 {
                    return Err(Error::Data(format!("motif {} has a negative entry", m.spec.name())));
                }
                all.push((a, b, j, v));
            }
        }
        all.sort_by_key(|x| (x.0, x.1, x.2));
        let mut pattern = Vec::new();
        let mut values = vec![Vec::new(); motifs.len()];
        for (a, b, j, v) in all {
            if pattern.last() != Some(&(a, b)) {
                pattern.push((a, b));
                for col in values.iter_mut() {
                    col.push(0.0);
                }
            }
            values[j][pattern.len() - 1] = v;
        }
        let degrees = motifs.iter().map(|m| m.matrix.row_sums()).collect();
        let csr = motifs.iter().map(|m| m.matrix.to_csr()).collect();
        Ok(Self {
            motifs,
            pattern,
            values,
            degrees,
            csr,
        })
    }

    pub fn n(&self) -> usize {
        self.motifs[0].n()
    }

    pub fn m(&self) -> usize {
        self.motifs.len()
    }

    pub fn motifs(&self) -> &[MotifAdjacency] {
        &self.motifs
    }

    pub fn names(&self) -> Vec<String> {
        self.motifs.iter().map(|m| m.spec.name().to_string()).collect()
    }

    /// Whether weight `(i, j)` is a free variable (node `i` not isolated under motif `j`).
    pub fn is_free(&self, i: usize, j: usize) -> bool {
        self.motifs[j].mask[i]
    }

    /// Number of motifs under which node `i` is not isolated.
    pub fn free_count(&self, i: usize) -> usize {
        (0..self.m()).filter(|&j| self.is_free(i, j)).count()
    }

    /// Nodes with support under at least one motif.
    pub fn covered_nodes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.free_count(i) > 0).collect()
    }

    /// Restricts every motif to the nodes in `keep` (sorted).
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        Self::new(self.motifs.iter().map(|m| m.submatrix(keep)).collect())
    }

    pub(crate) fn degree(&self, j: usize) -> &[f64] {
        &self.degrees[j]
    }

    pub(crate) fn csr(&self, j: usize) -> &SymCsr {
        &self.csr[j]
    }

    pub(crate) fn pattern(&self) -> &[(usize, usize)] {
        &self.pattern
    }

    pub(crate) fn pattern_values(&self, j: usize) -> &[f64] {
        &self.values[j]
    }
}

/// Per-node motif weights, `n x m`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::Dimension(format!("{} weights for a {n}x{m} matrix", data.len())));
        }
        Ok(Self { n, m, data })
    }

    /// Uniform weights over each node's non-isolated motifs.
    pub fn uniform(bundle: &MotifBundle) -> Self {
        let (n, m) = (bundle.n(), bundle.m());
        let mut data = vec![0.0; n * m];
        for i in 0..n {
            let c = bundle.free_count(i);
            for j in 0..m {
                if bundle.is_free(i, j) {
                    data[i * m + j] = 1.0 / c as f64;
                }
            }
        }
        Self { n, m, data }
    }

    /// From the column-stacked vector `Λ̃` (entry `j * n + i` is `Λ_ij`).
    pub fn from_stacked(n: usize, m: usize, stacked: &[f64]) -> Result<Self> {
        if stacked.len() != n * m {
            return Err(Error::Dimension(format!("{} stacked weights for a {n}x{m} matrix", stacked.len())));
        }
        let mut data = vec![0.0; n * m];
        for j in 0..m {
            for i in 0..n {
                data[i * m + j] = stacked[j * n + i];
            }
        }
        Ok(Self { n, m, data })
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.m];
        for i in 0..self.n {
            for j in 0..self.m {
                out[j * self.n + i] = self.data[i * self.m + j];
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn column_means(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum::<f64>() / self.n as f64)
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Largest violation of row-stochasticity, nonnegativity and fixed zeros.
    pub fn feasibility_violation(&self, bundle: &MotifBundle) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let row = self.row(i);
            worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            for (j, &v) in row.iter().enumerate() {
                worst = worst.max(-v);
                if !bundle.is_free(i, j) {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

/// How the weight step handles the nonnegativity bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaUpdate {
    /// Closed-form multipliers; when clipping fires, an active-set method warm
    /// started from the previous weights finds the exact minimizer.
    Exact,
    /// Closed-form multipliers, clip negatives, rescale each row to sum one.
    ClipRenormalize,
}

/// Which parts of `Uᵀ D_f U = I` the weight step keeps fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrthoConstraints {
    /// Only the diagonal, `U_kᵀ D_f U_k = 1`.
    Diagonal,
    /// Diagonal and off-diagonal entries.
    Full,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MOGCConfig {
    pub alpha: f64,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub kmeans_restarts: usize,
    pub degree_ridge: f64,
    pub row_normalize: bool,
    pub lambda_update: LambdaUpdate,
    pub constraints: OrthoConstraints,
    pub eigen_tol: f64,
}

impl MOGCConfig {
    pub fn new(alpha: f64, k: usize) -> Self {
        Self {
            alpha,
            k,
            tol: 1e-5,
            max_iter: 100,
            seed: 0,
            kmeans_restarts: 10,
            degree_ridge: 1e-8,
            row_normalize: false,
            lambda_update: LambdaUpdate::Exact,
            constraints: OrthoConstraints::Full,
            eigen_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tol must be positive and max_iter at least 1".into()));
        }
        if !(self.degree_ridge > 0.0) {
            return Err(Error::Config("degree ridge must be positive".into()));
        }
        Ok(())
    }

    fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.eigen_tol,
            ..EigenOptions::default()
        }
    }

    fn kmeans_options(&self) -> KMeansOptions {
        KMeansOptions {
            restarts: self.kmeans_restarts,
            row_normalize: self.row_normalize,
            ..KMeansOptions::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    /// `f(Λ_t, U_{t+1})`, after the eigen step.
    pub objective_after_u: f64,
    /// `f(Λ_{t+1}, U_{t+1})`, after the weight step.
    pub objective_after_lambda: f64,
    /// Relative gap between `V Λ̃` and `tr(Uᵀ L_f U)`.
    pub trace_identity_gap: f64,
    pub delta_u: f64,
    pub delta_lambda: f64,
    pub eigen_method: EigenMethod,
    pub lambda_method: LambdaMethod,
    pub clipped: bool,
    pub active_set_iterations: usize,
    pub rank_deficient: bool,
    /// Largest `|U_kᵀ D_f U_l - δ_kl|` for the new weights and the current `U`.
    pub orthonormality_drift: f64,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub u: Embedding,
    pub lambda: WeightMatrix,
    /// `f(Λ_0, U_1)` followed by the objective after every weight step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Generalized eigenvalues of the last eigen step. The columns of `u` span
    /// their eigenspace but may be rotated within it.
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Vec<IterationDiagnostics>,
}

impl SolverState {
    /// Largest increase between consecutive objective values (zero if monotone).
    pub fn max_objective_increase(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut seq = Vec::with_capacity(2 * self.diagnostics.len());
        for d in &self.diagnostics {
            seq.push(d.objective_after_u);
            seq.push(d.objective_after_lambda);
        }
        for w in seq.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
        worst
    }
}

/// Rotates `u` by the orthogonal `Q` minimizing `||u Q - prev||_F`.
///
/// The trace objective, `Uᵀ D_f U = I` and the weight step are unchanged by
/// such rotations, so this only removes the sign and rotation freedom within
/// (near-)degenerate eigenspaces before measuring the change in `U`.
fn align_to(u: &mut DMatrix<f64>, prev: &DMatrix<f64>) {
    let svd = (u.transpose() * prev).svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(a), Some(bt)) => *u = &*u * (a * bt),
        _ => {
            for c in 0..u.ncols() {
                if u.column(c).dot(&prev.column(c)) < 0.0 {
                    u.column_mut(c).neg_mut();
                }
            }
        }
    }
}

/// Runs the alternating solver and discretizes the final embedding with k-means.
pub fn mogc_cluster(bundle: &MotifBundle, cfg: &MOGCConfig) -> Result<(SolverState, LabelVector)> {
    let state = mogc_solve(bundle, cfg)?;
    let labels = kmeans_with(&state.u, cfg.k, cfg.seed, &cfg.kmeans_options())?.labels;
    Ok((state, labels))
}

/// The alternating solver without the final k-means step.
pub fn mogc_solve(bundle: &MotifBundle, cfg: &MOGCConfig) -> Result<SolverState> {
    cfg.validate()?;
    let n = bundle.n();
    if cfg.k > n {
        return Err(Error::Config(format!("K={} exceeds the node count {n}", cfg.k)));
    }
    if let Some(i) = (0..n).find(|&i| bundle.free_count(i) == 0) {
        return Err(Error::Data(format!(
            "node {i} is isolated under every motif; restrict the bundle to covered nodes first"
        )));
    }
    let eig_opts = cfg.eigen_options();
    let lam_opts = LambdaOptions {
        update: cfg.lambda_update,
        ..LambdaOptions::default()
    };

    let mut lambda = WeightMatrix::uniform(bundle);
    let mut prev_u: Option<Embedding> = None;
    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    let mut converged = false;
    let mut eigenvalues = Vec::new();
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        let a_f = fuse_adjacency(bundle, &lambda)?;
        let sol = solve_u_with(&a_f, cfg.k, cfg.degree_ridge, &eig_opts, prev_u.as_ref())?;
        let mut u = sol.vectors;
        if let Some(p) = &prev_u {
            align_to(&mut u, p);
        }
        eigenvalues = sol.values;

        let problem = build_lambda_problem_with(bundle, &u, cfg.constraints)?;
        let stacked = lambda.stacked();
        let linear: f64 = problem.v.iter().zip(&stacked).map(|(a, b)| a * b).sum();
        let trace = fuse::trace_quadratic(&a_f, &u);
        let trace_identity_gap = (linear - trace).abs() / 1f64.max(linear.abs()).max(trace.abs());
        let objective_after_u = trace + cfg.alpha * lambda.frobenius_sq();
        if it == 1 {
            history.push(objective_after_u);
        }

        let step = solve_lambda_with(&problem, cfg.alpha, &lam_opts, Some(&lambda))?;
        let new_lambda = step.weights;
        history.push(step.objective);

        let delta_u = match &prev_u {
            Some(p) => (&u - p).norm_squared(),
            None => f64::INFINITY,
        };
        let delta_lambda = new_lambda.distance_sq(&lambda);
        let orthonormality_drift = fuse::orthonormality_drift(bundle, &new_lambda, &u)?;
        diagnostics.push(IterationDiagnostics {
            objective_after_u,
            objective_after_lambda: step.objective,
            trace_identity_gap,
            delta_u,
            delta_lambda,
            eigen_method: sol.method,
            lambda_method: step.method,
            clipped: step.clipped,
            active_set_iterations: step.active_set_iterations,
            rank_deficient: step.rank_deficient,
            orthonormality_drift,
        });
        log::debug!(
            "iter {it}: f_u={objective_after_u:.12e} f_lambda={:.12e} dU={delta_u:.3e} dL={delta_lambda:.3e} {:?}",
            step.objective,
            step.method
        );

        lambda = new_lambda;
        prev_u = Some(u);
        if delta_u.max(delta_lambda) <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(SolverState {
        u: prev_u.expect("at least one iteration"),
        lambda,
        objective_history: history,
        iterations,
        converged,
        eigenvalues,
        diagnostics,
    })
}
