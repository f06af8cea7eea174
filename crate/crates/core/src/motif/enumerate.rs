//! ESU enumeration of connected induced subgraphs, filtered by pattern.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MotifAdjacency, MotifSpec};
use crate::error::{Error, Result};
use crate::graph_io::{Graph, SparseSymMatrix};

pub const DEFAULT_INSTANCE_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MotifInstance {
    /// Sorted node ids.
    pub nodes: Vec<usize>,
    /// Sorted subset of `nodes` that plays an anchor role in some matching.
    pub anchors: Vec<usize>,
}

struct Adjacency {
    lists: Vec<Vec<usize>>,
}

impl Adjacency {
    fn new(g: &Graph) -> Self {
        Self { lists: g.neighbors() }
    }

    fn adjacent(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.lists[u].len() <= self.lists[v].len() { (u, v) } else { (v, u) };
        self.lists[a].binary_search(&b).is_ok()
    }
}

/// Runs ESU from `root`, calling `visit` with each connected `p`-set whose
/// smallest node is `root`. Stops early once `visit` returns false.
fn esu_root(adj: &Adjacency, root: usize, p: usize, visit: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn extend(
        adj: &Adjacency,
        root: usize,
        p: usize,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if sub.len() == p {
            return visit(sub);
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &adj.lists[w] {
                if u <= root || sub.contains(&u) || next.contains(&u) {
                    continue;
                }
                // exclusive neighbourhood: u must not touch the current subgraph
                if sub.iter().any(|&s| adj.adjacent(s, u)) {
                    continue;
                }
                next.push(u);
            }
            sub.push(w);
            let keep_going = extend(adj, root, p, sub, next, visit);
            sub.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }

    let ext: Vec<usize> = adj.lists[root].iter().copied().filter(|&u| u > root).collect();
    let mut sub = vec![root];
    extend(adj, root, p, &mut sub, ext, visit)
}

/// Shared driver: visits every matching instance as `(sorted nodes, anchor bitmask)`.
fn for_each_instance<S, F>(g: &Graph, spec: &MotifSpec, cap: u64, init: impl Fn() -> S + Sync + Send, f: F) -> Result<Vec<S>>
where
    S: Send,
    F: Fn(&mut S, &[usize], u8) + Sync + Send,
{
    let adj = Adjacency::new(g);
    let table = spec.match_table();
    let p = spec.p();
    let count = AtomicU64::new(0);
    let overflow = AtomicBool::new(false);
    let states: Vec<S> = (0..g.n())
        .into_par_iter()
        .map(|root| {
            let mut state = init();
            if overflow.load(Ordering::Relaxed) {
                return state;
            }
            let mut sorted = [0usize; super::MAX_MOTIF_NODES];
            esu_root(&adj, root, p, &mut |nodes| {
                let s = &mut sorted[..p];
                s.copy_from_slice(nodes);
                s.sort_unstable();
                let mask = table.mask_of(s, |u, v| adj.adjacent(u, v));
                if table.matches(mask) {
                    if count.fetch_add(1, Ordering::Relaxed) >= cap {
                        overflow.store(true, Ordering::Relaxed);
                        return false;
                    }
                    f(&mut state, s, table.anchor_bits(mask));
                }
                !overflow.load(Ordering::Relaxed)
            });
            state
        })
        .collect();
    if overflow.load(Ordering::Relaxed) {
        return Err(Error::InstanceCap { cap });
    }
    Ok(states)
}

/// Every induced instance of `spec`, each node set exactly once.
pub fn enumerate_motif_instances(g: &Graph, spec: &MotifSpec) -> Result<Vec<MotifInstance>> {
    enumerate_motif_instances_capped(g, spec, DEFAULT_INSTANCE_CAP)
}

pub fn enumerate_motif_instances_capped(g: &Graph, spec: &MotifSpec, cap: u64) -> Result<Vec<MotifInstance>> {
    let per_root = for_each_instance(g, spec, cap, Vec::new, |out: &mut Vec<MotifInstance>, nodes, bits| {
        let anchors = nodes.iter().enumerate().filter(|(a, _)| bits & (1 << a) != 0).map(|(_, &v)| v).collect();
        out.push(MotifInstance {
            nodes: nodes.to_vec(),
            anchors,
        });
    })?;
    Ok(per_root.into_iter().flatten().collect())
}

fn add_anchor_pairs(acc: &mut HashMap<(usize, usize), f64>, anchors: impl Iterator<Item = usize> + Clone) {
    for (k, a) in anchors.clone().enumerate() {
        for b in anchors.clone().skip(k + 1) {
            *acc.entry((a.min(b), a.max(b))).or_insert(0.0) += 1.0;
        }
    }
}

/// Adds one to `A[i, j]` for every anchor pair of every instance.
pub fn accumulate_motif_adjacency(n: usize, instances: &[MotifInstance], spec: &MotifSpec) -> Result<MotifAdjacency> {
    let mut acc = HashMap::new();
    for inst in instances {
        if let Some(&v) = inst.nodes.iter().chain(&inst.anchors).find(|&&v| v >= n) {
            return Err(Error::Data(format!("motif instance node {v} out of range for n={n}")));
        }
        if inst.nodes.len() != spec.p() {
            return Err(Error::Data(format!(
                "instance {:?} has {} nodes, motif {} has {}",
                inst.nodes,
                inst.nodes.len(),
                spec.name(),
                spec.p()
            )));
        }
        add_anchor_pairs(&mut acc, inst.anchors.iter().copied());
    }
    let matrix = SparseSymMatrix::from_triplets(n, acc.into_iter().map(|((i, j), v)| (i, j, v)));
    Ok(MotifAdjacency::new(spec.clone(), matrix, instances.len() as u64))
}

/// Enumerate-and-accumulate without materializing the instance list.
pub fn motif_adjacency_generic(g: &Graph, spec: &MotifSpec, cap: u64) -> Result<MotifAdjacency> {
    let init = || (HashMap::new(), 0u64);
    let parts = for_each_instance(g, spec, cap, init, |(acc, count), nodes, bits| {
        *count += 1;
        let anchors = nodes.iter().enumerate().filter(move |(a, _)| bits & (1 << a) != 0).map(|(_, &v)| v);
        add_anchor_pairs(acc, anchors);
    })?;
    let mut count = 0;
    let mut triplets = Vec::new();
    for (acc, c) in parts {
        count += c;
        triplets.extend(acc.into_iter().map(|((i, j), v)| (i, j, v)));
    }
    // counts are small integers, so the summation order cannot change the result
    let matrix = SparseSymMatrix::from_triplets(g.n(), triplets);
    Ok(MotifAdjacency::new(spec.clone(), matrix, count))
}
