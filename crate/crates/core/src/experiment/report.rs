use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub kmeans_seed: u64,
    pub ari: f64,
    pub ri: f64,
    pub nmi: f64,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotifInfo {
    pub name: String,
    pub instances: u64,
    pub isolated_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub algorithm: String,
    pub alpha: Option<f64>,
    pub nodes: usize,
    pub edges: usize,
    pub motifs: Vec<MotifInfo>,
    /// Nodes isolated under every motif of the run; they are left out of the
    /// solve and assigned to the largest cluster.
    pub excluded_nodes: usize,
    pub trials: Vec<TrialRecord>,
    pub ari: Summary,
    pub ri: Summary,
    pub nmi: Summary,
    pub converged: bool,
    pub iterations: usize,
    /// Column means of the final weights (MOGC only).
    pub lambda_column_means: Option<Vec<f64>>,
    /// Objective values of the solve shared by all trials (MOGC only).
    pub objective_history: Vec<f64>,
    pub max_objective_increase: Option<f64>,
    pub max_trace_identity_gap: Option<f64>,
    /// Labels of trial 0, in internal node order.
    pub labels: Vec<usize>,
    pub solver_runtime_secs: f64,
}

impl RunReport {
    pub(crate) fn aggregate(&mut self) {
        let pick = |f: fn(&TrialRecord) -> f64| self.trials.iter().map(f).collect::<Vec<_>>();
        self.ari = Summary::of(&pick(|t| t.ari));
        self.ri = Summary::of(&pick(|t| t.ri));
        self.nmi = Summary::of(&pick(|t| t.nmi));
    }

    /// Copy with every timing field zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.solver_runtime_secs = 0.0;
        r.trials.iter_mut().for_each(|t| t.runtime_secs = 0.0);
        r
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(format!("cannot serialize report: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn write_trials_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for t in &self.trials {
            w.serialize(t).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub mean_ari: f64,
    pub std_ari: f64,
    pub mean_ri: f64,
    pub mean_nmi: f64,
    pub std_nmi: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest minus smallest weight column mean.
    pub lambda_spread: f64,
    pub lambda_column_means: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub motifs: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub best_ari_alpha: f64,
    pub best_nmi_alpha: f64,
    pub reports: Vec<RunReport>,
}

impl SweepReport {
    pub fn best_ari(&self) -> &SweepRow {
        self.rows.iter().find(|r| r.alpha == self.best_ari_alpha).expect("best alpha is a row")
    }

    pub fn best_nmi(&self) -> &SweepRow {
        self.rows.iter().find(|r| r.alpha == self.best_nmi_alpha).expect("best alpha is a row")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec![
            "alpha", "mean_ari", "std_ari", "mean_ri", "mean_nmi", "std_nmi", "iterations", "converged", "lambda_spread",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        header.extend(self.motifs.iter().map(|m| format!("lambda_mean_{m}")));
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for r in &self.rows {
            let mut rec = vec![
                r.alpha.to_string(),
                r.mean_ari.to_string(),
                r.std_ari.to_string(),
                r.mean_ri.to_string(),
                r.mean_nmi.to_string(),
                r.std_nmi.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                r.lambda_spread.to_string(),
            ];
            rec.extend(r.lambda_column_means.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Data(format!("cannot serialize sweep: {e}")))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Per-node weights keyed by original node id.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    pub motifs: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl WeightTable {
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.rows.len().max(1) as f64;
        (0..self.motifs.len())
            .map(|j| self.rows.iter().map(|(_, r)| r[j]).sum::<f64>() / n)
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec!["node".to_string()];
        header.extend(self.motifs.iter().cloned());
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for (id, row) in &self.rows {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}
