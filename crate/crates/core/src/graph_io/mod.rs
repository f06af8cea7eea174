//! Graph loading, label handling and sparse-matrix persistence.
//!
//! Graphs are undirected and simple. Whatever the input format, node ids are
//! remapped to `0..n` in order of first appearance, duplicate edges are merged
//! (weights summed) and self-loops are dropped.

mod cache;
mod gml;
mod sparse;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use cache::MotifCache;
pub use gml::{load_gml, parse_gml};
pub use sparse::{load_sparse, save_sparse, SparseSymMatrix, SymCsr};

/// Undirected simple graph with contiguous ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    /// Sorted `(u, v, w)` with `u < v` and `w > 0`.
    edges: Vec<(usize, usize, f64)>,
    /// Original id of every internal node.
    ids: Vec<String>,
}

impl Graph {
    /// Builds a graph over nodes `0..n` named by their index.
    ///
    /// Pairs are normalized to `u < v`; duplicates are merged by summing
    /// weights and self-loops are dropped.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut b = GraphBuilder::default();
        for i in 0..n {
            b.intern(&i.to_string());
        }
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Data(format!("edge ({u},{v}) out of range for n={n}")));
            }
            b.push_internal(u, v, w)?;
        }
        Ok(b.finish())
    }

    /// Unit-weight convenience constructor.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn original_id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn original_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn internal_id(&self, original: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == original)
    }

    /// Sorted neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Weighted adjacency as an upper-triangular sparse matrix.
    pub fn adjacency(&self) -> SparseSymMatrix {
        SparseSymMatrix::from_triplets(self.n, self.edges.iter().copied())
    }

    /// Stable content hash (hex, 16 chars) used to key the motif cache.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{}\n", self.n).as_bytes());
        for &(u, v, w) in &self.edges {
            h.update(format!("{u} {v} {w}\n").as_bytes());
        }
        hex::encode(h.finalize())[..16].to_string()
    }
}

/// Accumulates edges while interning original ids in first-appearance order.
#[derive(Default)]
pub(crate) struct GraphBuilder {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
    weights: HashMap<(usize, usize), f64>,
    pub(crate) self_loops: usize,
}

impl GraphBuilder {
    pub(crate) fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.lookup.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.lookup.insert(id.to_string(), i);
        i
    }

    pub(crate) fn lookup(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub(crate) fn push_internal(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Data(format!("edge ({u},{v}) has non-positive weight {w}")));
        }
        if u == v {
            self.self_loops += 1;
            return Ok(());
        }
        let key = (u.min(v), u.max(v));
        *self.weights.entry(key).or_insert(0.0) += w;
        Ok(())
    }

    pub(crate) fn finish(self) -> Graph {
        let mut edges: Vec<_> = self.weights.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        edges.sort_by_key(|a| (a.0, a.1));
        Graph {
            n: self.ids.len(),
            edges,
            ids: self.ids,
        }
    }
}

/// Ground-truth (or predicted) cluster assignment, one id per node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    /// Maps arbitrary label tokens to `0..k` in order of first appearance.
    pub fn densify<S: AsRef<str>>(raw: &[S]) -> Self {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|s| {
                let next = seen.len();
                *seen.entry(s.as_ref()).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct labels.
    pub fn num_classes(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Loads a whitespace-separated edge list (`u v` or `u v w` per line).
pub fn load_edge_list(path: &Path, weighted: bool) -> Result<Graph> {
    let text = read_to_string(path)?;
    parse_edge_list(&text, weighted, path)
}

pub(crate) fn parse_edge_list(text: &str, weighted: bool, path: &Path) -> Result<Graph> {
    let mut b = GraphBuilder::default();
    for (lineno, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = strip_comment(line).split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(Error::parse(path, lineno + 1, format!("expected `u v [w]`, got {} fields", tokens.len())));
        }
        let w = if weighted && tokens.len() == 3 {
            let w: f64 = tokens[2]
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad weight `{}`", tokens[2])))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::parse(path, lineno + 1, format!("weight must be positive, got {w}")));
            }
            w
        } else {
            1.0
        };
        let u = b.intern(tokens[0]);
        let v = b.intern(tokens[1]);
        b.push_internal(u, v, w)?;
    }
    if b.self_loops > 0 {
        warn!("{}: dropped {} self-loop(s)", path.display(), b.self_loops);
    }
    Ok(b.finish())
}

/// Loads a `node_id label_id` file and aligns it with `graph`'s internal ids.
pub fn load_labels(path: &Path, graph: &Graph) -> Result<LabelVector> {
    let text = read_to_string(path)?;
    let mut raw: Vec<Option<String>> = vec![None; graph.n()];
    let lookup: HashMap<&str, usize> = graph
        .original_ids()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    for (lineno, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = strip_comment(line).split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(Error::parse(path, lineno + 1, "expected `node_id label_id`"));
        }
        // Labels for nodes absent from the graph (e.g. isolated in an edge list) are ignored.
        if let Some(&i) = lookup.get(tokens[0]) {
            raw[i] = Some(tokens[1].to_string());
        }
    }
    let raw: Vec<String> = raw
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Data(format!("node `{}` has no label", graph.original_id(i)))))
        .collect::<Result<_>>()?;
    Ok(LabelVector::densify(&raw))
}

/// Writes `original_id label` lines.
pub fn save_labels(path: &Path, graph: &Graph, labels: &LabelVector) -> Result<()> {
    let mut out = String::new();
    for (i, l) in labels.as_slice().iter().enumerate() {
        out.push_str(&format!("{} {}\n", graph.original_id(i), l));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str) -> Graph {
        parse_edge_list(text, false, &PathBuf::from("mem")).unwrap()
    }

    #[test]
    fn duplicate_edges_are_summed() {
        let g = parse("0 1\n1 2\n0 1");
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1, 2.0), (1, 2, 1.0)]);
    }

    #[test]
    fn ids_remapped_in_first_appearance_order() {
        let g = parse("5 9\n9 7");
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(g.original_ids(), &["5", "9", "7"]);
        assert_eq!(g.internal_id("7"), Some(2));
    }

    #[test]
    fn self_loops_and_comments_are_dropped() {
        let g = parse("# header\n0 0\n0 1 # trailing\n\n");
        assert_eq!(g.n(), 2);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn reversed_pairs_collapse() {
        let g = parse("a b\nb a");
        assert_eq!(g.edges(), &[(0, 1, 2.0)]);
    }

    #[test]
    fn negative_weight_is_rejected_with_line_number() {
        let err = parse_edge_list("0 1 1.0\n1 2 -3", true, &PathBuf::from("f.txt")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_line_is_a_parse_error() {
        let err = parse_edge_list("0 1\n7\n", false, &PathBuf::from("f.txt")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn weights_read_only_when_requested() {
        let g = parse_edge_list("0 1 3.5", true, &PathBuf::from("m")).unwrap();
        assert_eq!(g.edges()[0].2, 3.5);
        let g = parse_edge_list("0 1 3.5", false, &PathBuf::from("m")).unwrap();
        assert_eq!(g.edges()[0].2, 1.0);
    }

    #[test]
    fn loading_is_deterministic() {
        let text = "3 1\n1 4\n4 3\n9 2\n2 3\n";
        let a = parse(text);
        let b = parse(text);
        assert_eq!(a, b);
        assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn densify_uses_first_appearance() {
        let l = LabelVector::densify(&["c", "a", "c", "b"]);
        assert_eq!(l.as_slice(), &[0, 1, 0, 2]);
        assert_eq!(l.num_classes(), 3);
    }

    #[test]
    fn label_file_aligns_with_original_ids() {
        let dir = tempfile::tempdir().unwrap();
        let g = parse("10 20\n20 30");
        let p = dir.path().join("labels.txt");
        fs::write(&p, "30 x\n10 y\n20 y\n").unwrap();
        let l = load_labels(&p, &g).unwrap();
        assert_eq!(l.as_slice(), &[0, 0, 1]);

        fs::write(&p, "30 x\n10 y\n").unwrap();
        assert!(matches!(load_labels(&p, &g), Err(Error::Data(_))));
    }
}
