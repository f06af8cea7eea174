#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mogc::graph_io::{Graph, LabelVector, SparseSymMatrix};
use mogc::motif::{builtin_motif, motif_adjacency, MotifSpec};
use mogc::solver::{LambdaProblem, MotifBundle, WeightMatrix};

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Planted-partition graph with its block labels.
pub fn sbm(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> (Graph, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let n = block.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if block[a] == block[b] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    (Graph::from_edges(n, &edges).unwrap(), LabelVector::new(block))
}

/// `count` cliques of size `size` joined in a ring by single edges.
pub fn ring_of_cliques(count: usize, size: usize) -> (Graph, LabelVector) {
    let mut edges = Vec::new();
    for c in 0..count {
        let base = c * size;
        for a in 0..size {
            for b in a + 1..size {
                edges.push((base + a, base + b));
            }
        }
        edges.push((base + size - 1, ((c + 1) % count) * size));
    }
    let labels = (0..count * size).map(|i| i / size).collect();
    (Graph::from_edges(count * size, &edges).unwrap(), LabelVector::new(labels))
}

pub fn bundle(g: &Graph, names: &[&str]) -> MotifBundle {
    MotifBundle::new(
        names
            .iter()
            .map(|m| motif_adjacency(g, &builtin_motif(m).unwrap()).unwrap())
            .collect(),
    )
    .unwrap()
}

pub struct Toy {
    pub name: &'static str,
    pub graph: Graph,
    pub labels: LabelVector,
    pub motifs: &'static [&'static str],
    pub k: usize,
}

/// Small graphs with known structure used for convergence checks.
pub fn toy_suite() -> Vec<Toy> {
    let two_triangles = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
    let bridged = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
    let (ring, ring_labels) = ring_of_cliques(5, 6);
    let (s3, s3_labels) = sbm(&[30, 30, 30], 0.3, 0.05, 11);
    let (s2, s2_labels) = sbm(&[40, 40], 0.25, 0.04, 12);
    let (s4, s4_labels) = sbm(&[60, 60, 60, 60], 0.15, 0.02, 13);
    vec![
        Toy {
            name: "two_triangles",
            graph: two_triangles,
            labels: LabelVector::new(vec![0, 0, 0, 1, 1, 1]),
            motifs: &["edge", "m3_3"],
            k: 2,
        },
        Toy {
            name: "bridged_triangles",
            graph: bridged,
            labels: LabelVector::new(vec![0, 0, 0, 1, 1, 1]),
            motifs: &["edge", "m3_3", "m3_2"],
            k: 2,
        },
        Toy {
            name: "ring_of_cliques",
            graph: ring,
            labels: ring_labels,
            motifs: &["edge", "m3_3", "m3_2"],
            k: 5,
        },
        Toy {
            name: "sbm3",
            graph: s3,
            labels: s3_labels,
            motifs: &["edge", "m3_3", "m3_2"],
            k: 3,
        },
        Toy {
            name: "sbm2_edge_wedge",
            graph: s2,
            labels: s2_labels,
            motifs: &["edge", "m3_2"],
            k: 2,
        },
        Toy {
            name: "sbm4_krylov",
            graph: s4,
            labels: s4_labels,
            motifs: &["edge", "m3_3", "m3_2"],
            k: 4,
        },
    ]
}

/// Motif adjacency by checking every `p`-subset against every relabeling of
/// the pattern, counting anchor pairs.
pub fn brute_force_motif(g: &Graph, spec: &MotifSpec) -> SparseSymMatrix {
    let n = g.n();
    let p = spec.p();
    let mut adj = vec![vec![false; n]; n];
    for &(a, b, _) in g.edges() {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let pattern = spec.matrix();
    let perms = all_permutations(p);
    let mut counts = vec![vec![0u64; n]; n];
    for subset in subsets(n, p) {
        let mut anchored = vec![false; p];
        let mut any = false;
        for perm in &perms {
            // perm[position] = index into subset
            let ok = (0..p).all(|a| (0..p).all(|b| a == b || (pattern[a][b] == 1) == adj[subset[perm[a]]][subset[perm[b]]]));
            if ok {
                any = true;
                for &a in spec.anchors() {
                    anchored[perm[a]] = true;
                }
            }
        }
        if any {
            for x in 0..p {
                for y in x + 1..p {
                    if anchored[x] && anchored[y] {
                        counts[subset[x]][subset[y]] += 1;
                    }
                }
            }
        }
    }
    let mut triplets = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if counts[a][b] > 0 {
                triplets.push((a, b, counts[a][b] as f64));
            }
        }
    }
    SparseSymMatrix::from_triplets(n, triplets)
}

fn all_permutations(p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in all_permutations(p - 1) {
        for pos in 0..=rest.len() {
            let mut v = rest.clone();
            v.insert(pos, p - 1);
            out.push(v);
        }
    }
    out
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, p, cur, out);
            cur.pop();
        }
    }
    rec(0, n, p, &mut cur, &mut out);
    out
}

/// Fused adjacency from the matrix-product definition, densely.
pub fn dense_fused(b: &MotifBundle, lambda: &WeightMatrix) -> DMatrix<f64> {
    let n = b.n();
    let mut a_f = DMatrix::zeros(n, n);
    for (j, m) in b.motifs().iter().enumerate() {
        let a = m.matrix.to_dense();
        let w = DMatrix::from_fn(n, n, |r, c| if r == c && b.is_free(r, j) { 1.0 } else { 0.0 });
        let l = DMatrix::from_fn(n, n, |r, c| if r == c { lambda.get(r, j) } else { 0.0 });
        a_f += (&w * &a * &l + &l * &a * &w) * 0.5;
    }
    a_f
}

/// `tr(Uᵀ (D - A) U) + α ||Λ||²` with dense matrices.
pub fn dense_objective(b: &MotifBundle, lambda: &WeightMatrix, u: &DMatrix<f64>, alpha: f64) -> f64 {
    let a = dense_fused(b, lambda);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(a.nrows(), a.row_iter().map(|r| r.sum())));
    (u.transpose() * (d - a) * u).trace() + alpha * lambda.frobenius_sq()
}

/// Random weights, positive on free entries, rows summing to one.
pub fn random_weights(b: &MotifBundle, seed: u64) -> WeightMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (b.n(), b.m());
    let mut data = vec![0.0; n * m];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..m {
            if b.is_free(i, j) {
                let v = 0.2 + rng.random::<f64>();
                data[i * m + j] = v;
                s += v;
            }
        }
        for j in 0..m {
            data[i * m + j] /= s;
        }
    }
    WeightMatrix::new(n, m, data).unwrap()
}

/// Projected-gradient oracle for `min V x + α ||x||²` over
/// `{row sums one, P x = b, x >= 0, fixed zeros}`. The projection onto the
/// polyhedron is computed by Dykstra's alternating projections between the
/// affine set and the nonnegative orthant.
pub fn qp_oracle(problem: &LambdaProblem, alpha: f64) -> Vec<f64> {
    let nm = problem.num_vars();
    let free: Vec<usize> = (0..nm).filter(|&i| problem.free[i]).collect();
    let f = free.len();
    let n = problem.n;
    let r = problem.p.nrows();
    let mut c = DMatrix::zeros(n + r, f);
    let mut d = DVector::zeros(n + r);
    for (col, &idx) in free.iter().enumerate() {
        c[(idx % n, col)] = 1.0;
        for row in 0..r {
            c[(n + row, col)] = problem.p[(row, idx)];
        }
    }
    for i in 0..n {
        d[i] = 1.0;
    }
    for row in 0..r {
        d[n + row] = problem.p_rhs[row];
    }
    let pinv = c.clone().pseudo_inverse(1e-12).unwrap();
    let along = DMatrix::identity(f, f) - &pinv * &c;
    let offset = &pinv * &d;
    let affine = |y: &DVector<f64>| -> DVector<f64> { &along * y + &offset };
    let project = |y0: &DVector<f64>| -> DVector<f64> {
        let mut x = y0.clone();
        let mut p_aff = DVector::zeros(f);
        let mut q_pos = DVector::zeros(f);
        for _ in 0..200_000 {
            let y = affine(&(&x + &p_aff));
            p_aff = &x + &p_aff - &y;
            let x_new = (&y + &q_pos).map(|v| v.max(0.0));
            q_pos = &y + &q_pos - &x_new;
            let change = (&x_new - &x).amax();
            x = x_new;
            if change < 1e-15 {
                break;
            }
        }
        x
    };
    let v = DVector::from_iterator(f, free.iter().map(|&i| problem.v[i]));
    let step = 1.0 / (2.0 * alpha);
    let mut x = DVector::from_element(f, 0.0);
    for _ in 0..50 {
        let grad = &v + &x * (2.0 * alpha);
        let next = project(&(&x - grad * step));
        let done = (&next - &x).amax() < 1e-13;
        x = next;
        if done {
            break;
        }
    }
    let mut out = vec![0.0; nm];
    for (col, &idx) in free.iter().enumerate() {
        out[idx] = x[col];
    }
    out
}

/// `$MOGC_DATA_DIR`, or `data/` at the workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os("MOGC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}
