//! Closed-form 3-node motif matrices computed row by row.
//!
//! Triangles: `A = (B·B) ∘ B`, i.e. common-neighbour counts on edges.
//! Induced wedges: a non-adjacent pair `{a, b}` shares one wedge per common
//! neighbour; an adjacent pair shares one wedge per node attached to exactly
//! one of them, `d_a + d_b - 2 - 2·t_ab`.

use rayon::prelude::*;

use super::{builtin_motif, MotifAdjacency};
use crate::graph_io::{Graph, SparseSymMatrix};

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn assemble(n: usize, rows: Vec<Vec<(usize, usize, f64)>>) -> SparseSymMatrix {
    let entries = rows.into_iter().flatten().collect();
    SparseSymMatrix::from_sorted_upper(n, entries).expect("rows are emitted in sorted order")
}

/// Triangle motif matrix.
pub fn motif_adjacency_m33(g: &Graph) -> MotifAdjacency {
    let nbrs = g.neighbors();
    let rows: Vec<_> = (0..g.n())
        .into_par_iter()
        .map(|i| {
            nbrs[i]
                .iter()
                .filter(|&&j| j > i)
                .filter_map(|&j| {
                    let t = sorted_intersection_len(&nbrs[i], &nbrs[j]);
                    (t > 0).then_some((i, j, t as f64))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let matrix = assemble(g.n(), rows);
    let count = (matrix.upper_sum() / 3.0).round() as u64;
    MotifAdjacency::new(builtin_motif("m3_3").expect("catalog"), matrix, count)
}

/// Induced wedge (open 2-path) motif matrix.
pub fn motif_adjacency_m32(g: &Graph) -> MotifAdjacency {
    let n = g.n();
    let nbrs = g.neighbors();
    let rows: Vec<_> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], Vec::new()),
            |(common, touched), a| {
                // common[b] = |N(a) ∩ N(b)| for b > a
                for &c in &nbrs[a] {
                    for &b in nbrs[c].iter().filter(|&&b| b > a) {
                        if common[b] == 0 {
                            touched.push(b);
                        }
                        common[b] += 1;
                    }
                }
                for &b in nbrs[a].iter().filter(|&&b| b > a) {
                    if common[b] == 0 {
                        touched.push(b);
                    }
                }
                touched.sort_unstable();
                let da = nbrs[a].len();
                let mut row = Vec::with_capacity(touched.len());
                for &b in touched.iter() {
                    let t = common[b];
                    let v = if nbrs[a].binary_search(&b).is_ok() {
                        da + nbrs[b].len() - 2 - 2 * t
                    } else {
                        t
                    };
                    if v > 0 {
                        row.push((a, b, v as f64));
                    }
                    common[b] = 0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    let matrix = assemble(n, rows);
    let count = (matrix.upper_sum() / 3.0).round() as u64;
    MotifAdjacency::new(builtin_motif("m3_2").expect("catalog"), matrix, count)
}
