use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored as its upper triangle.
///
/// Entries are sorted by `(i, j)`, unique, satisfy `i <= j` and are nonzero.
/// The lower triangle is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSymMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    /// Normalizes arbitrary triplets: pairs are folded to `i <= j`,
    /// duplicates summed, zeros dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut raw: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(i, j, v)| if i <= j { (i, j, v) } else { (j, i, v) })
            .collect();
        raw.sort_by_key(|a| (a.0, a.1));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.len());
        for (i, j, v) in raw {
            assert!(j < n, "triplet ({i},{j}) out of range for n={n}");
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => entries.push((i, j, v)),
            }
        }
        entries.retain(|e| e.2 != 0.0);
        Self { n, entries }
    }

    /// Takes already-normalized entries, checking the storage invariants.
    pub fn from_sorted_upper(n: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) >= (w[1].0, w[1].1) {
                return Err(Error::Data("entries not strictly sorted".into()));
            }
        }
        for &(i, j, v) in &entries {
            if i > j || j >= n || v == 0.0 {
                return Err(Error::Data(format!("invalid entry ({i},{j},{v}) for n={n}")));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored (upper-triangle) entry count.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    /// Row sums of the full symmetric matrix.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            d[i] += v;
            if i != j {
                d[j] += v;
            }
        }
        d
    }

    /// Sum of the stored upper-triangle values.
    pub fn upper_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { n, entries }
    }

    /// Principal submatrix on `keep` (sorted, unique), reindexed to `0..keep.len()`.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let entries = self
            .entries
            .iter()
            .filter(|e| map[e.0] != usize::MAX && map[e.1] != usize::MAX)
            .map(|&(i, j, v)| (map[i], map[j], v));
        Self::from_triplets(keep.len(), entries)
    }

    pub fn to_csr(&self) -> SymCsr {
        SymCsr::from_sym(self)
    }
}

/// Full (both triangles) CSR expansion used for matrix-vector products.
#[derive(Clone, Debug)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymCsr {
    pub fn from_sym(a: &SparseSymMatrix) -> Self {
        let n = a.n();
        let mut counts = vec![0usize; n];
        for &(i, j, _) in a.entries() {
            counts[i] += 1;
            if i != j {
                counts[j] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[n];
        let mut cols = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = row_ptr.clone();
        for &(i, j, v) in a.entries() {
            if i != j {
                let k = fill[j];
                cols[k] = i;
                vals[k] = v;
                fill[j] += 1;
            }
        }
        for &(i, j, v) in a.entries() {
            let k = fill[i];
            cols[k] = j;
            vals[k] = v;
            fill[i] += 1;
        }
        let mut csr = Self {
            n,
            row_ptr,
            cols,
            vals,
        };
        csr.sort_rows();
        csr
    }

    fn sort_rows(&mut self) {
        for i in 0..self.n {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut row: Vec<(usize, f64)> = (s..e).map(|k| (self.cols[k], self.vals[k])).collect();
            row.sort_by_key(|r| r.0);
            for (off, (c, v)) in row.into_iter().enumerate() {
                self.cols[s + off] = c;
                self.vals[s + off] = v;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }
}

/// Writes the `n nnz` header followed by one `i j value` line per stored entry.
pub fn save_sparse(path: &Path, m: &SparseSymMatrix) -> Result<()> {
    let mut out = String::with_capacity(16 * (m.nnz() + 1));
    writeln!(out, "{} {}", m.n(), m.nnz()).unwrap();
    for &(i, j, v) in m.entries() {
        // `{}` on f64 prints the shortest string that parses back to the same bits.
        writeln!(out, "{i} {j} {v}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_sparse(path: &Path) -> Result<SparseSymMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sparse(&text, path)
}

pub(crate) fn parse_sparse(text: &str, path: &Path) -> Result<SparseSymMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "missing `n nnz` header"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::parse(path, line, format!("expected an integer, got `{s}`")))
    };
    if head.len() != 2 {
        return Err(Error::parse(path, 1, "header must be `n nnz`"));
    }
    let n = parse_usize(head[0], 1)?;
    let nnz = parse_usize(head[1], 1)?;
    let mut entries = Vec::with_capacity(nnz);
    for (lineno, line) in lines {
        let ln = lineno + 1;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::parse(path, ln, "expected `i j value`"));
        }
        let i = parse_usize(t[0], ln)?;
        let j = parse_usize(t[1], ln)?;
        let v: f64 = t[2]
            .parse()
            .map_err(|_| Error::parse(path, ln, format!("bad value `{}`", t[2])))?;
        if i > j {
            return Err(Error::parse(path, ln, format!("entry ({i},{j}) is below the diagonal")));
        }
        if j >= n {
            return Err(Error::parse(path, ln, format!("index {j} out of range for n={n}")));
        }
        entries.push((i, j, v));
    }
    if entries.len() != nnz {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {nnz} entries, found {}", entries.len()),
        ));
    }
    SparseSymMatrix::from_sorted_upper(n, entries).map_err(|e| Error::parse(path, 1, e.to_string()))
}
