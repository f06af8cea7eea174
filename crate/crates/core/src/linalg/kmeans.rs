//! Lloyd's k-means with k-means++ seeding on the rows of an embedding.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph_io::LabelVector;

#[derive(Clone, Debug)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Scale each row to unit length first.
    pub row_normalize: bool,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-8,
            row_normalize: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: LabelVector,
    /// Within-cluster sum of squares of the returned run.
    pub inertia: f64,
}

pub fn kmeans(u: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<LabelVector> {
    let opts = KMeansOptions {
        restarts,
        ..KMeansOptions::default()
    };
    Ok(kmeans_with(u, k, seed, &opts)?.labels)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans_with(u: &DMatrix<f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeansResult> {
    let n = u.nrows();
    let dim = u.ncols();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k-means with k={k} on {n} points")));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("embedding has non-finite entries".into()));
    }
    // row-major copy for cache-friendly distance loops
    let mut points: Vec<Vec<f64>> = (0..n).map(|i| u.row(i).iter().copied().collect()).collect();
    if opts.row_normalize {
        for p in &mut points {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                p.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..opts.restarts.max(1) {
        let (labels, inertia) = lloyd(&points, dim, k, opts, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    let (labels, inertia) = best.expect("at least one restart");
    Ok(KMeansResult {
        labels: LabelVector::new(labels),
        inertia,
    })
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, ctr) in centers.iter().enumerate() {
            let d = dist2(p, ctr);
            if d < best.1 {
                best = (c, d);
            }
        }
        labels[i] = best.0;
        inertia += best.1;
    }
    inertia
}

fn lloyd(points: &[Vec<f64>], dim: usize, k: usize, opts: &KMeansOptions, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut centers = seed_plus_plus(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut inertia = assign(points, &centers, &mut labels);
    for _ in 0..opts.max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let new = if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(&points[a], &centers[labels[a]]).total_cmp(&dist2(&points[b], &centers[labels[b]]))
                    })
                    .expect("n > 0");
                points[far].clone()
            } else {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            };
            shift = shift.max(dist2(&new, &centers[c]).sqrt());
            centers[c] = new;
        }
        inertia = assign(points, &centers, &mut labels);
        if shift < opts.tol {
            break;
        }
    }
    (labels, inertia)
}
