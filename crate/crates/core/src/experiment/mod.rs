//! End-to-end runs: load a labelled graph, build (or fetch cached) motif
//! matrices, cluster over several k-means seeds and score against the labels.

mod report;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_io::{load_edge_list, load_gml, load_labels, Graph, LabelVector, MotifCache};
use crate::linalg::{kmeans_with, Embedding, KMeansOptions};
use crate::metrics::{adjusted_rand_index, nmi, rand_index};
use crate::motif::{motif_adjacency, MotifAdjacency, MotifSpec};
use crate::solver::{mogc_solve, solve_u_with, LambdaUpdate, MOGCConfig, MotifBundle, OrthoConstraints, SolverState};

pub use report::{MotifInfo, RunReport, Summary, SweepReport, SweepRow, TrialRecord, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    EdgeList,
    Gml,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgelist" => Ok(Self::EdgeList),
            "gml" => Ok(Self::Gml),
            other => Err(Error::Config(format!("unknown graph format `{other}` (expected edgelist or gml)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Mogc,
    Sc,
    MotifSc,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mogc" => Ok(Self::Mogc),
            "sc" => Ok(Self::Sc),
            "motif_sc" => Ok(Self::MotifSc),
            other => Err(Error::Config(format!("unknown algorithm `{other}` (expected mogc, sc or motif_sc)"))),
        }
    }
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Self::Mogc => "mogc",
            Self::Sc => "sc",
            Self::MotifSc => "motif_sc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: PathBuf,
    pub format: GraphFormat,
    /// Separate `node label` file; required for edge lists.
    pub labels: Option<PathBuf>,
    /// Node attribute holding the class in GML files.
    pub label_key: String,
    pub weighted: bool,
    pub motifs: Vec<String>,
    pub algorithm: Algorithm,
    pub alphas: Vec<f64>,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub kmeans_restarts: usize,
    pub row_normalize: bool,
    pub lambda_update: LambdaUpdate,
    pub constraints: OrthoConstraints,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(graph: impl Into<PathBuf>, format: GraphFormat, motifs: &[&str], k: usize) -> Self {
        let defaults = MOGCConfig::new(1.0, k);
        Self {
            graph: graph.into(),
            format,
            labels: None,
            label_key: "value".into(),
            weighted: false,
            motifs: motifs.iter().map(|s| s.to_string()).collect(),
            algorithm: Algorithm::Mogc,
            alphas: vec![1.0],
            k,
            trials: 20,
            seed: 0,
            tol: defaults.tol,
            max_iter: defaults.max_iter,
            kmeans_restarts: defaults.kmeans_restarts,
            row_normalize: defaults.row_normalize,
            lambda_update: defaults.lambda_update,
            constraints: defaults.constraints,
            cache_dir: None,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.motifs.is_empty() {
            return Err(Error::Config("at least one motif is required".into()));
        }
        for m in &self.motifs {
            MotifSpec::parse(m)?;
        }
        if self.alphas.is_empty() {
            return Err(Error::Config("alpha grid is empty".into()));
        }
        self.solver_config(self.alphas[0]).validate()?;
        for &a in &self.alphas {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("alpha must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn solver_config(&self, alpha: f64) -> MOGCConfig {
        MOGCConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            kmeans_restarts: self.kmeans_restarts,
            row_normalize: self.row_normalize,
            lambda_update: self.lambda_update,
            constraints: self.constraints,
            ..MOGCConfig::new(alpha, self.k)
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

/// `{0.1, 0.2, ..., 3.0} ∪ {4, 5, ..., 20}`.
pub fn default_alpha_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=30).map(|i| i as f64 / 10.0).collect();
    grid.extend((4..=20).map(|i| i as f64));
    grid
}

/// Parses `lo:hi:step` into an inclusive grid.
pub fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("alpha grid must be `lo:hi:step`, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    // round to the step's precision so 0.1 + 2 * 0.1 prints as 0.3
    Ok((0..=count).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
}

/// A loaded graph with its labels and motif matrices.
pub struct Dataset {
    pub graph: Graph,
    pub labels: LabelVector,
    pub motifs: Vec<MotifAdjacency>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<(Graph, LabelVector)> {
    match cfg.format {
        GraphFormat::Gml => {
            let (g, gml_labels) = load_gml(&cfg.graph, &cfg.label_key)?;
            let labels = match &cfg.labels {
                Some(p) => load_labels(p, &g)?,
                None => gml_labels,
            };
            Ok((g, labels))
        }
        GraphFormat::EdgeList => {
            let g = load_edge_list(&cfg.graph, cfg.weighted)?;
            let path = cfg
                .labels
                .as_ref()
                .ok_or_else(|| Error::Config("edge-list graphs need a labels file".into()))?;
            let labels = load_labels(path, &g)?;
            Ok((g, labels))
        }
    }
}

/// Motif matrices for `names`, read from / written to `cache` when given.
pub fn build_motifs(graph: &Graph, names: &[String], cache: Option<&MotifCache>) -> Result<Vec<MotifAdjacency>> {
    names
        .iter()
        .map(|name| {
            let spec = MotifSpec::parse(name)?;
            if let Some(c) = cache {
                if let Some((matrix, count)) = c.get(graph, name) {
                    log::debug!("motif {name}: cache hit");
                    return Ok(MotifAdjacency::new(spec, matrix, count));
                }
            }
            let t = Instant::now();
            let adj = motif_adjacency(graph, &spec)?;
            log::info!(
                "motif {name}: {} instances, {} isolated nodes ({:.2?})",
                adj.instance_count,
                adj.isolated_count(),
                t.elapsed()
            );
            if let Some(c) = cache {
                c.put(graph, name, &adj.matrix, adj.instance_count)?;
            }
            Ok(adj)
        })
        .collect()
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (graph, labels) = load_dataset(cfg)?;
    if cfg.k > graph.n() {
        return Err(Error::Config(format!("K={} exceeds the node count {}", cfg.k, graph.n())));
    }
    let cache = cfg.cache_dir.as_ref().map(MotifCache::new).transpose()?;
    let motifs = build_motifs(&graph, &cfg.motifs, cache.as_ref())?;
    Ok(Dataset { graph, labels, motifs })
}

/// Bundle over the nodes covered by at least one motif, plus the kept indices.
fn covered_bundle(motifs: Vec<MotifAdjacency>) -> Result<(MotifBundle, Vec<usize>)> {
    let full = MotifBundle::new(motifs)?;
    let keep = full.covered_nodes();
    if keep.is_empty() {
        return Err(Error::FullFragmentation(full.names().join(",")));
    }
    if keep.len() == full.n() {
        return Ok((full, keep));
    }
    Ok((full.restrict(&keep)?, keep))
}

/// Lifts labels on `keep` to all `n` nodes; the rest join the largest cluster.
fn expand_labels(n: usize, keep: &[usize], labels: &LabelVector, k: usize) -> LabelVector {
    if keep.len() == n {
        return labels.clone();
    }
    let mut sizes = vec![0usize; k.max(1)];
    for &l in labels.as_slice() {
        sizes[l] += 1;
    }
    let largest = (0..sizes.len()).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
    let mut out = vec![largest; n];
    for (&i, &l) in keep.iter().zip(labels.as_slice()) {
        out[i] = l;
    }
    LabelVector::new(out)
}

fn motif_info(motifs: &[MotifAdjacency]) -> Vec<MotifInfo> {
    motifs
        .iter()
        .map(|m| MotifInfo {
            name: m.spec.name().to_string(),
            instances: m.instance_count,
            isolated_nodes: m.isolated_count(),
        })
        .collect()
}

/// Runs k-means on `u` once per trial and scores the results.
fn score_trials(
    cfg: &ExperimentConfig,
    data: &Dataset,
    u: &Embedding,
    keep: &[usize],
    iterations: usize,
    converged: bool,
) -> Result<(Vec<TrialRecord>, LabelVector)> {
    let opts = cfg.kmeans_options();
    let n = data.graph.n();
    let results: Vec<(TrialRecord, LabelVector)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let t = Instant::now();
            let seed = cfg.seed.wrapping_add(trial as u64);
            let local = kmeans_with(u, cfg.k, seed, &opts)?.labels;
            let labels = expand_labels(n, keep, &local, cfg.k);
            let record = TrialRecord {
                trial,
                kmeans_seed: seed,
                ari: adjusted_rand_index(&data.labels, &labels)?,
                ri: rand_index(&data.labels, &labels)?,
                nmi: nmi(&data.labels, &labels)?,
                iterations,
                converged,
                runtime_secs: t.elapsed().as_secs_f64(),
            };
            Ok((record, labels))
        })
        .collect::<Result<_>>()?;
    let first = results[0].1.clone();
    Ok((results.into_iter().map(|(r, _)| r).collect(), first))
}

fn base_report(cfg: &ExperimentConfig, data: &Dataset, algorithm: Algorithm, motifs: &[MotifAdjacency]) -> RunReport {
    RunReport {
        config: cfg.clone(),
        algorithm: algorithm.name().into(),
        alpha: None,
        nodes: data.graph.n(),
        edges: data.graph.num_edges(),
        motifs: motif_info(motifs),
        excluded_nodes: 0,
        trials: Vec::new(),
        ari: Summary::of(&[]),
        ri: Summary::of(&[]),
        nmi: Summary::of(&[]),
        converged: true,
        iterations: 0,
        lambda_column_means: None,
        objective_history: Vec::new(),
        max_objective_increase: None,
        max_trace_identity_gap: None,
        labels: Vec::new(),
        solver_runtime_secs: 0.0,
    }
}

/// The solve behind a MOGC report, kept for weight dumps.
pub struct MogcRun {
    pub report: RunReport,
    pub state: SolverState,
    /// Internal ids of the nodes the solver saw.
    pub kept: Vec<usize>,
}

pub fn run_mogc_on(cfg: &ExperimentConfig, data: &Dataset, alpha: f64) -> Result<MogcRun> {
    let (bundle, keep) = covered_bundle(data.motifs.clone())?;
    if keep.len() < data.graph.n() {
        log::warn!("{} node(s) isolated under every motif; assigned to the largest cluster", data.graph.n() - keep.len());
    }
    let scfg = cfg.solver_config(alpha);
    let t = Instant::now();
    let state = mogc_solve(&bundle, &scfg)?;
    let solver_secs = t.elapsed().as_secs_f64();
    if !state.converged {
        log::warn!("alpha={alpha}: solver stopped after {} iterations without converging", state.iterations);
    }
    let (trials, labels) = score_trials(cfg, data, &state.u, &keep, state.iterations, state.converged)?;
    let mut report = base_report(cfg, data, Algorithm::Mogc, &data.motifs);
    report.alpha = Some(alpha);
    report.excluded_nodes = data.graph.n() - keep.len();
    report.trials = trials;
    report.converged = state.converged;
    report.iterations = state.iterations;
    report.lambda_column_means = Some(state.lambda.column_means());
    report.objective_history = state.objective_history.clone();
    report.max_objective_increase = Some(state.max_objective_increase());
    report.max_trace_identity_gap = Some(state.diagnostics.iter().map(|d| d.trace_identity_gap).fold(0.0, f64::max));
    report.labels = labels.as_slice().to_vec();
    report.solver_runtime_secs = solver_secs;
    report.aggregate();
    Ok(MogcRun { report, state, kept: keep })
}

/// MOGC over `cfg.alphas`; with several values, the report with the best mean ARI.
pub fn run_mogc_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let data = prepare(cfg)?;
    if cfg.alphas.len() == 1 {
        return Ok(run_mogc_on(cfg, &data, cfg.alphas[0])?.report);
    }
    let sweep = alpha_sweep_on(cfg, &data)?;
    let best = sweep.best_ari_alpha;
    Ok(sweep.reports.into_iter().find(|r| r.alpha == Some(best)).expect("best alpha has a report"))
}

fn spectral_report(cfg: &ExperimentConfig, data: &Dataset, algorithm: Algorithm, motifs: Vec<MotifAdjacency>) -> Result<RunReport> {
    for m in &motifs {
        if m.matrix.nnz() == 0 {
            return Err(Error::FullFragmentation(m.spec.name().to_string()));
        }
    }
    let (bundle, keep) = covered_bundle(motifs.clone())?;
    let scfg = cfg.solver_config(1.0);
    let t = Instant::now();
    // with a single motif the weights are fixed at one, so A_f is the motif matrix
    let a = bundle.motifs()[0].matrix.clone();
    let sol = solve_u_with(&a, cfg.k, scfg.degree_ridge, &crate::linalg::EigenOptions::default(), None)?;
    let solver_secs = t.elapsed().as_secs_f64();
    let (trials, labels) = score_trials(cfg, data, &sol.vectors, &keep, 1, true)?;
    let mut report = base_report(cfg, data, algorithm, &motifs);
    report.excluded_nodes = data.graph.n() - keep.len();
    report.trials = trials;
    report.iterations = 1;
    report.labels = labels.as_slice().to_vec();
    report.solver_runtime_secs = solver_secs;
    report.aggregate();
    Ok(report)
}

/// Spectral clustering on the plain edge adjacency.
pub fn run_baseline_sc(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cfg = ExperimentConfig {
        motifs: vec!["edge".into()],
        algorithm: Algorithm::Sc,
        ..cfg.clone()
    };
    let data = prepare(&cfg)?;
    let motifs = data.motifs.clone();
    spectral_report(&cfg, &data, Algorithm::Sc, motifs)
}

/// Spectral clustering on a single motif adjacency matrix.
pub fn run_baseline_motif_sc(cfg: &ExperimentConfig) -> Result<RunReport> {
    if cfg.motifs.len() != 1 {
        return Err(Error::Config(format!("motif_sc takes exactly one motif, got {}", cfg.motifs.len())));
    }
    let cfg = ExperimentConfig {
        algorithm: Algorithm::MotifSc,
        ..cfg.clone()
    };
    let data = prepare(&cfg)?;
    let motifs = data.motifs.clone();
    let report = spectral_report(&cfg, &data, Algorithm::MotifSc, motifs)?;
    if report.excluded_nodes > 0 {
        log::info!("motif_sc: {} node(s) isolated under {}", report.excluded_nodes, cfg.motifs[0]);
    }
    Ok(report)
}

/// Dispatches on `cfg.algorithm`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    match cfg.algorithm {
        Algorithm::Mogc => run_mogc_experiment(cfg),
        Algorithm::Sc => run_baseline_sc(cfg),
        Algorithm::MotifSc => run_baseline_motif_sc(cfg),
    }
}

pub fn alpha_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let data = prepare(cfg)?;
    alpha_sweep_on(cfg, &data)
}

pub fn alpha_sweep_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<SweepReport> {
    let reports: Vec<RunReport> = cfg
        .alphas
        .par_iter()
        .map(|&a| run_mogc_on(cfg, data, a).map(|r| r.report))
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = reports
        .iter()
        .map(|r| {
            let means = r.lambda_column_means.clone().unwrap_or_default();
            let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
            SweepRow {
                alpha: r.alpha.expect("mogc report has alpha"),
                mean_ari: r.ari.mean,
                std_ari: r.ari.std,
                mean_ri: r.ri.mean,
                mean_nmi: r.nmi.mean,
                std_nmi: r.nmi.std,
                iterations: r.iterations,
                converged: r.converged,
                lambda_spread: hi - lo,
                lambda_column_means: means,
            }
        })
        .collect();
    // first maximum wins, so ties go to the smaller alpha
    let argmax = |f: fn(&SweepRow) -> f64| {
        rows.iter()
            .fold(None::<&SweepRow>, |best, r| match best {
                Some(b) if f(b) >= f(r) => Some(b),
                _ => Some(r),
            })
            .map(|r| r.alpha)
            .expect("grid is nonempty")
    };
    let best_ari_alpha = argmax(|r| r.mean_ari);
    let best_nmi_alpha = argmax(|r| r.mean_nmi);
    Ok(SweepReport {
        motifs: cfg.motifs.clone(),
        rows,
        best_ari_alpha,
        best_nmi_alpha,
        reports,
    })
}

/// Final per-node weights of a MOGC run at `cfg.alphas[0]`. Nodes isolated
/// under every motif carry no weights and are left out.
pub fn dump_weights(cfg: &ExperimentConfig) -> Result<WeightTable> {
    let data = prepare(cfg)?;
    let run = run_mogc_on(cfg, &data, cfg.alphas[0])?;
    let rows = run
        .kept
        .iter()
        .enumerate()
        .map(|(local, &node)| (data.graph.original_id(node).to_string(), run.state.lambda.row(local).to_vec()))
        .collect();
    Ok(WeightTable {
        motifs: cfg.motifs.clone(),
        rows,
    })
}
