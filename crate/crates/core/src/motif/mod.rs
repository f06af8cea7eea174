//! Motif patterns, exact instance enumeration and motif adjacency matrices.
//!
//! A motif is a small connected pattern `B` on `p <= 5` nodes together with a
//! set of anchor positions. An instance is a node set whose *induced*
//! subgraph equals `B` up to relabeling, so a wedge never matches inside a
//! triangle. The motif adjacency matrix counts, for every node pair, the
//! instances in which both nodes appear as anchors.

mod enumerate;
mod triad;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_io::{Graph, SparseSymMatrix};

pub use enumerate::{
    accumulate_motif_adjacency, enumerate_motif_instances, enumerate_motif_instances_capped,
    motif_adjacency_generic, MotifInstance, DEFAULT_INSTANCE_CAP,
};
pub use triad::{motif_adjacency_m32, motif_adjacency_m33};

pub const MAX_MOTIF_NODES: usize = 5;

/// Names accepted by [`builtin_motif`].
pub const CATALOG: [&str; 8] = ["edge", "m3_2", "m3_3", "m4_1", "m4_2", "m5_1", "m5_2", "m5_3"];

/// Index of the unordered position pair `a < b` in a `p`-node upper triangle.
fn pair_index(p: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < p);
    a * (2 * p - a - 1) / 2 + (b - a - 1)
}

fn num_pairs(p: usize) -> usize {
    p * (p - 1) / 2
}

/// All permutations of `0..p` in lexicographic order.
fn permutations(p: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(p), &mut vec![false; p], &mut out);
    out
}

/// Connected undirected pattern with anchor positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifSpec {
    name: String,
    p: usize,
    /// Bit `pair_index(a, b)` is set when positions `a` and `b` are adjacent.
    mask: u16,
    anchors: Vec<usize>,
}

impl MotifSpec {
    /// Builds a motif from its edge list. `anchors = None` means all nodes.
    pub fn new(name: impl Into<String>, p: usize, edges: &[(usize, usize)], anchors: Option<Vec<usize>>) -> Result<Self> {
        let name = name.into();
        if !(2..=MAX_MOTIF_NODES).contains(&p) {
            return Err(Error::Motif(format!("{name}: motif size must be 2..={MAX_MOTIF_NODES}, got {p}")));
        }
        let mut mask = 0u16;
        for &(a, b) in edges {
            if a >= p || b >= p {
                return Err(Error::Motif(format!("{name}: edge ({a},{b}) out of range for p={p}")));
            }
            if a == b {
                return Err(Error::Motif(format!("{name}: pattern has a self-loop at {a}")));
            }
            mask |= 1 << pair_index(p, a.min(b), a.max(b));
        }
        let mut anchors = anchors.unwrap_or_else(|| (0..p).collect());
        anchors.sort_unstable();
        anchors.dedup();
        if anchors.is_empty() {
            return Err(Error::Motif(format!("{name}: anchor set is empty")));
        }
        if let Some(&a) = anchors.iter().find(|&&a| a >= p) {
            return Err(Error::Motif(format!("{name}: anchor {a} out of range for p={p}")));
        }
        let spec = Self { name, p, mask, anchors };
        if !spec.is_connected() {
            return Err(Error::Motif(format!("{}: pattern is not connected", spec.name)));
        }
        Ok(spec)
    }

    /// Builds a motif from a dense 0/1 pattern matrix.
    pub fn from_matrix(name: impl Into<String>, b: &[Vec<u8>], anchors: Option<Vec<usize>>) -> Result<Self> {
        let name = name.into();
        let p = b.len();
        let mut edges = Vec::new();
        for (i, row) in b.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Motif(format!("{name}: pattern matrix is not square")));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::Motif(format!("{name}: pattern entries must be 0 or 1")));
                }
                if v != b[j][i] {
                    return Err(Error::Motif(format!("{name}: pattern matrix is not symmetric")));
                }
                if i == j && v != 0 {
                    return Err(Error::Motif(format!("{name}: pattern diagonal must be zero")));
                }
                if i < j && v == 1 {
                    edges.push((i, j));
                }
            }
        }
        Self::new(name, p, &edges, anchors)
    }

    /// Parses a catalog name or `pattern:<p>:<a-b,...>[:<anchor,...>]`.
    pub fn parse(token: &str) -> Result<Self> {
        let token = token.trim();
        let Some(rest) = token.strip_prefix("pattern:") else {
            return builtin_motif(token);
        };
        let bad = |msg: &str| Error::Motif(format!("`{token}`: {msg}"));
        let fields: Vec<&str> = rest.split(':').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad("expected pattern:<p>:<edges>[:<anchors>]"));
        }
        let p: usize = fields[0].parse().map_err(|_| bad("bad node count"))?;
        let mut edges = Vec::new();
        for e in fields[1].split(',').filter(|s| !s.is_empty()) {
            let (a, b) = e.split_once('-').ok_or_else(|| bad("edges look like 0-1"))?;
            let a = a.parse().map_err(|_| bad("bad edge endpoint"))?;
            let b = b.parse().map_err(|_| bad("bad edge endpoint"))?;
            edges.push((a, b));
        }
        let anchors = match fields.get(2) {
            None => None,
            Some(list) => Some(
                list.split(',')
                    .map(|a| a.parse::<usize>().map_err(|_| bad("bad anchor")))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Self::new(token, p, &edges, anchors)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    /// True when every pattern node is an anchor.
    pub fn is_simple(&self) -> bool {
        self.anchors.len() == self.p
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.mask & (1 << pair_index(self.p, a.min(b), a.max(b))) != 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.p {
            for b in a + 1..self.p {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Dense 0/1 pattern matrix `B`.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        let mut b = vec![vec![0u8; self.p]; self.p];
        for (a, c) in self.edges() {
            b[a][c] = 1;
            b[c][a] = 1;
        }
        b
    }

    /// Isomorphism-invariant key: the smallest upper-triangle mask over all relabelings.
    pub fn canonical_key(&self) -> u16 {
        canonical_key(self.p, self.mask)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.p];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..self.p {
                if !seen[b] && self.has_edge(a, b) {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Lookup table over induced-subgraph masks of sorted `p`-node sets.
    pub(crate) fn match_table(&self) -> MatchTable {
        let size = 1usize << num_pairs(self.p);
        let mut anchor_bits = vec![0u8; size];
        let mut matches = vec![false; size];
        for perm in permutations(self.p) {
            // perm maps pattern position -> position in the sorted instance
            let mut m = 0u16;
            for (a, b) in self.edges() {
                let (x, y) = (perm[a].min(perm[b]), perm[a].max(perm[b]));
                m |= 1 << pair_index(self.p, x, y);
            }
            matches[m as usize] = true;
            for &a in &self.anchors {
                anchor_bits[m as usize] |= 1 << perm[a];
            }
        }
        MatchTable {
            p: self.p,
            matches,
            anchor_bits,
        }
    }
}

impl fmt::Display for MotifSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub(crate) fn canonical_key(p: usize, mask: u16) -> u16 {
    let mut best = u16::MAX;
    for perm in permutations(p) {
        let mut m = 0u16;
        for a in 0..p {
            for b in a + 1..p {
                if mask & (1 << pair_index(p, a, b)) != 0 {
                    let (x, y) = (perm[a].min(perm[b]), perm[a].max(perm[b]));
                    m |= 1 << pair_index(p, x, y);
                }
            }
        }
        best = best.min(m);
    }
    best
}

pub(crate) struct MatchTable {
    pub(crate) p: usize,
    matches: Vec<bool>,
    /// For a matching mask, the union over all isomorphisms of the anchor images.
    anchor_bits: Vec<u8>,
}

impl MatchTable {
    /// Induced mask of a sorted node set under `adjacent`.
    pub(crate) fn mask_of(&self, nodes: &[usize], adjacent: impl Fn(usize, usize) -> bool) -> u16 {
        let mut m = 0u16;
        for a in 0..self.p {
            for b in a + 1..self.p {
                if adjacent(nodes[a], nodes[b]) {
                    m |= 1 << pair_index(self.p, a, b);
                }
            }
        }
        m
    }

    pub(crate) fn matches(&self, mask: u16) -> bool {
        self.matches[mask as usize]
    }

    pub(crate) fn anchor_bits(&self, mask: u16) -> u8 {
        self.anchor_bits[mask as usize]
    }
}

/// Returns the catalog motif for `name`.
///
/// Shapes: `m3_2` wedge, `m3_3` triangle, `m4_1` 4-path, `m4_2` 4-cycle,
/// `m5_1` 5-path, `m5_2` 4-leaf star, `m5_3` fork (a 4-path with a pendant
/// on its third node).
pub fn builtin_motif(name: &str) -> Result<MotifSpec> {
    let (p, edges): (usize, &[(usize, usize)]) = match name {
        "edge" => (2, &[(0, 1)]),
        "m3_2" => (3, &[(0, 1), (1, 2)]),
        "m3_3" => (3, &[(0, 1), (1, 2), (0, 2)]),
        "m4_1" => (4, &[(0, 1), (1, 2), (2, 3)]),
        "m4_2" => (4, &[(0, 1), (1, 2), (2, 3), (3, 0)]),
        "m5_1" => (5, &[(0, 1), (1, 2), (2, 3), (3, 4)]),
        "m5_2" => (5, &[(0, 1), (0, 2), (0, 3), (0, 4)]),
        "m5_3" => (5, &[(0, 1), (1, 2), (2, 3), (2, 4)]),
        _ => return Err(Error::UnknownMotif(name.to_string())),
    };
    MotifSpec::new(name, p, edges, None)
}

/// Motif adjacency matrix with its non-isolated mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotifAdjacency {
    pub spec: MotifSpec,
    pub matrix: SparseSymMatrix,
    /// `mask[i]` is true when row `i` has a nonzero entry.
    pub mask: Vec<bool>,
    pub instance_count: u64,
}

impl MotifAdjacency {
    pub fn new(spec: MotifSpec, matrix: SparseSymMatrix, instance_count: u64) -> Self {
        let mut mask = vec![false; matrix.n()];
        for &(i, j, _) in matrix.entries() {
            mask[i] = true;
            mask[j] = true;
        }
        Self {
            spec,
            matrix,
            mask,
            instance_count,
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn isolated_count(&self) -> usize {
        self.mask.iter().filter(|&&w| !w).count()
    }

    /// Restricts to the nodes in `keep` (sorted), preserving the spec and count.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        Self::new(self.spec.clone(), self.matrix.submatrix(keep), self.instance_count)
    }
}

/// Binarized adjacency of mutual links, `A ∘ Aᵀ` with all weights set to one.
pub fn bidirectional_adjacency(g: &Graph) -> SparseSymMatrix {
    let entries = g.edges().iter().map(|&(u, v, _)| (u, v, 1.0)).collect();
    SparseSymMatrix::from_sorted_upper(g.n(), entries).expect("graph edges are sorted and unique")
}

/// Builds the motif adjacency of `spec`, picking the fastest exact path.
pub fn motif_adjacency(g: &Graph, spec: &MotifSpec) -> Result<MotifAdjacency> {
    motif_adjacency_with_cap(g, spec, DEFAULT_INSTANCE_CAP)
}

pub fn motif_adjacency_with_cap(g: &Graph, spec: &MotifSpec, cap: u64) -> Result<MotifAdjacency> {
    let triangle = builtin_motif("m3_3").expect("catalog").canonical_key();
    let wedge = builtin_motif("m3_2").expect("catalog").canonical_key();
    let key = spec.canonical_key();
    let mut out = match (spec.p, spec.is_simple()) {
        (2, _) => {
            let count = g.num_edges() as u64;
            if count > cap {
                return Err(Error::InstanceCap { cap });
            }
            MotifAdjacency::new(spec.clone(), bidirectional_adjacency(g), count)
        }
        (3, true) if key == triangle => motif_adjacency_m33(g),
        (3, true) if key == wedge => motif_adjacency_m32(g),
        _ => return motif_adjacency_generic(g, spec, cap),
    };
    if out.instance_count > cap {
        return Err(Error::InstanceCap { cap });
    }
    out.spec = spec.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_is_dense() {
        for p in 2..=5 {
            let mut seen = vec![false; num_pairs(p)];
            for a in 0..p {
                for b in a + 1..p {
                    seen[pair_index(p, a, b)] = true;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn catalog_shapes() {
        let tri = builtin_motif("m3_3").unwrap();
        assert_eq!(tri.p(), 3);
        assert_eq!(tri.matrix(), vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        let edge = builtin_motif("edge").unwrap();
        assert_eq!(edge.p(), 2);
        assert_eq!(edge.edges(), vec![(0, 1)]);
        assert!(matches!(builtin_motif("m4_9999"), Err(Error::UnknownMotif(_))));
        for name in CATALOG {
            let m = builtin_motif(name).unwrap();
            assert!(m.is_simple());
            assert_eq!(m.name(), name);
        }
    }

    #[test]
    fn catalog_shapes_are_pairwise_non_isomorphic() {
        let keys: Vec<_> = CATALOG
            .iter()
            .map(|n| {
                let m = builtin_motif(n).unwrap();
                (m.p(), m.canonical_key())
            })
            .collect();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                assert_ne!(keys[i], keys[j], "{} vs {}", CATALOG[i], CATALOG[j]);
            }
        }
    }

    #[test]
    fn invalid_patterns_are_rejected() {
        assert!(MotifSpec::new("x", 4, &[(0, 1), (2, 3)], None).is_err());
        assert!(MotifSpec::new("x", 6, &[(0, 1)], None).is_err());
        assert!(MotifSpec::new("x", 3, &[(0, 1), (1, 2)], Some(vec![])).is_err());
        assert!(MotifSpec::new("x", 3, &[(0, 0), (1, 2)], None).is_err());
        assert!(MotifSpec::from_matrix("x", &[vec![0, 1], vec![0, 0]], None).is_err());
        assert!(MotifSpec::from_matrix("x", &[vec![1, 1], vec![1, 0]], None).is_err());
    }

    #[test]
    fn parse_pattern_tokens() {
        let c4 = MotifSpec::parse("pattern:4:0-1,1-2,2-3,3-0").unwrap();
        assert_eq!(c4.canonical_key(), builtin_motif("m4_2").unwrap().canonical_key());
        let anchored = MotifSpec::parse("pattern:3:0-1,1-2:0,2").unwrap();
        assert_eq!(anchored.anchors(), &[0, 2]);
        assert!(!anchored.is_simple());
        assert_eq!(MotifSpec::parse("m3_2").unwrap(), builtin_motif("m3_2").unwrap());
        assert!(MotifSpec::parse("pattern:3:0-1").is_err());
        assert!(MotifSpec::parse("pattern:x:0-1").is_err());
    }

    #[test]
    fn match_table_counts_labelings() {
        // 3 labeled wedges and 1 labeled triangle on three nodes
        let wedge = builtin_motif("m3_2").unwrap().match_table();
        assert_eq!((0..8u16).filter(|&m| wedge.matches(m)).count(), 3);
        let tri = builtin_motif("m3_3").unwrap().match_table();
        assert_eq!((0..8u16).filter(|&m| tri.matches(m)).count(), 1);
        // 4-cycle has 3 labelings, 4-path has 12
        let c4 = builtin_motif("m4_2").unwrap().match_table();
        assert_eq!((0..64u16).filter(|&m| c4.matches(m)).count(), 3);
        let p4 = builtin_motif("m4_1").unwrap().match_table();
        assert_eq!((0..64u16).filter(|&m| p4.matches(m)).count(), 12);
    }

    #[test]
    fn bidirectional_adjacency_binarizes() {
        let g = Graph::from_weighted_edges(3, &[(0, 1, 3.5), (1, 2, 1.0)]).unwrap();
        let b = bidirectional_adjacency(&g);
        assert_eq!(b.entries(), &[(0, 1, 1.0), (1, 2, 1.0)]);
    }
}
