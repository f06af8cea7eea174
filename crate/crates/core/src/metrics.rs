//! Partition agreement scores.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph_io::LabelVector;

/// Counts of co-occurring labels between two partitions of the same items.
#[derive(Clone, Debug)]
pub struct ContingencyTable {
    n: usize,
    cells: HashMap<(usize, usize), u64>,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl ContingencyTable {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Dimension(format!("label vectors of length {} and {}", a.len(), b.len())));
        }
        let ra = dense_ids(a);
        let rb = dense_ids(b);
        let mut rows = vec![0u64; ra.iter().max().map_or(0, |m| m + 1)];
        let mut cols = vec![0u64; rb.iter().max().map_or(0, |m| m + 1)];
        let mut cells = HashMap::new();
        for (&x, &y) in ra.iter().zip(&rb) {
            *cells.entry((x, y)).or_insert(0) += 1;
            rows[x] += 1;
            cols[y] += 1;
        }
        Ok(Self { n: a.len(), cells, rows, cols })
    }

    pub fn total(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.cells.get(&(r, c)).copied().unwrap_or(0)
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.rows
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.cols
    }
}

fn dense_ids(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Fraction of item pairs on which the two partitions agree.
pub fn rand_index(truth: &LabelVector, pred: &LabelVector) -> Result<f64> {
    let t = ContingencyTable::new(truth.as_slice(), pred.as_slice())?;
    if t.n < 2 {
        return Ok(1.0);
    }
    let total = comb2(t.n as u64);
    let same_both: f64 = t.cells.values().map(|&c| comb2(c)).sum();
    let same_a: f64 = t.rows.iter().map(|&c| comb2(c)).sum();
    let same_b: f64 = t.cols.iter().map(|&c| comb2(c)).sum();
    Ok((total + 2.0 * same_both - same_a - same_b) / total)
}

/// Hubert-Arabie adjusted Rand index. Two identical partitions score 1,
/// including the degenerate case where both are a single cluster.
pub fn adjusted_rand_index(truth: &LabelVector, pred: &LabelVector) -> Result<f64> {
    let t = ContingencyTable::new(truth.as_slice(), pred.as_slice())?;
    let index: f64 = t.cells.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = t.rows.iter().map(|&c| comb2(c)).sum();
    let sum_b: f64 = t.cols.iter().map(|&c| comb2(c)).sum();
    let total = comb2(t.n as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // both partitions trivial in the same way
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NmiNormalization {
    /// `2 I / (H_a + H_b)`.
    Arithmetic,
    /// `I / sqrt(H_a H_b)`.
    Geometric,
}

/// Normalized mutual information with arithmetic-mean normalization.
pub fn nmi(truth: &LabelVector, pred: &LabelVector) -> Result<f64> {
    nmi_with(truth, pred, NmiNormalization::Arithmetic)
}

pub fn nmi_with(truth: &LabelVector, pred: &LabelVector, norm: NmiNormalization) -> Result<f64> {
    let t = ContingencyTable::new(truth.as_slice(), pred.as_slice())?;
    if t.n == 0 {
        return Ok(1.0);
    }
    let n = t.n as f64;
    let entropy = |counts: &[u64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&t.rows);
    let hb = entropy(&t.cols);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (&(r, c), &count) in &t.cells {
        let nrc = count as f64;
        mi += nrc / n * (n * nrc / (t.rows[r] as f64 * t.cols[c] as f64)).ln();
    }
    let mi = mi.max(0.0);
    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (ha + hb),
        NmiNormalization::Geometric => (ha * hb).sqrt(),
    };
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).min(1.0))
}
