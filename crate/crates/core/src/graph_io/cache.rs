//! On-disk cache of motif adjacency matrices keyed by graph hash and motif name.

use std::fs;
use std::path::{Path, PathBuf};

use log::debug;
use sha2::{Digest, Sha256};

use super::{load_sparse, save_sparse, Graph, SparseSymMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MotifCache {
    dir: PathBuf,
}

impl MotifCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn stem(&self, graph_hash: &str, motif: &str) -> PathBuf {
        // Custom pattern names contain ':' and ','; keep the file name portable
        // and disambiguate with a digest of the raw name.
        let safe: String = motif
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' })
            .take(40)
            .collect();
        let tag = hex::encode(Sha256::digest(motif.as_bytes()));
        self.dir.join(format!("{graph_hash}_{safe}_{}", &tag[..8]))
    }

    /// Returns the cached adjacency and instance count, if present and readable.
    pub fn get(&self, graph: &Graph, motif: &str) -> Option<(SparseSymMatrix, u64)> {
        let stem = self.stem(&graph.content_hash(), motif);
        let mtx = stem.with_extension("mtx");
        let meta = stem.with_extension("count");
        let count: u64 = fs::read_to_string(&meta).ok()?.trim().parse().ok()?;
        match load_sparse(&mtx) {
            Ok(m) if m.n() == graph.n() => {
                debug!("motif cache hit: {}", mtx.display());
                Some((m, count))
            }
            Ok(_) => None,
            Err(e) => {
                debug!("ignoring unreadable cache entry: {e}");
                None
            }
        }
    }

    pub fn put(&self, graph: &Graph, motif: &str, adjacency: &SparseSymMatrix, instances: u64) -> Result<()> {
        let stem = self.stem(&graph.content_hash(), motif);
        let mtx = stem.with_extension("mtx");
        let meta = stem.with_extension("count");
        save_sparse(&mtx, adjacency)?;
        fs::write(&meta, format!("{instances}\n")).map_err(|e| Error::io(&meta, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_key_separation() {
        let dir = tempfile::tempdir().unwrap();
        let cache = MotifCache::new(dir.path()).unwrap();
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let h = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let a = g.adjacency();

        assert!(cache.get(&g, "m3_3").is_none());
        cache.put(&g, "m3_3", &a, 1).unwrap();
        assert_eq!(cache.get(&g, "m3_3"), Some((a.clone(), 1)));
        assert!(cache.get(&g, "m3_2").is_none());
        assert!(cache.get(&h, "m3_3").is_none());

        cache.put(&g, "pattern:3:0-1,1-2", &a, 7).unwrap();
        assert_eq!(cache.get(&g, "pattern:3:0-1,1-2").unwrap().1, 7);
    }
}
