//! Multi-order graph clustering.
//!
//! Builds motif adjacency matrices from an undirected graph, fuses them with
//! learned per-node weights and clusters the fused graph spectrally, solving
//! the joint problem by alternating minimization.
//!
//! ```
//! use mogc::graph_io::Graph;
//! use mogc::motif::{builtin_motif, motif_adjacency};
//! use mogc::solver::{mogc_cluster, MOGCConfig, MotifBundle};
//!
//! let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
//! let motifs = ["edge", "m3_3"]
//!     .iter()
//!     .map(|name| motif_adjacency(&g, &builtin_motif(name).unwrap()).unwrap())
//!     .collect();
//! let bundle = MotifBundle::new(motifs).unwrap();
//! let (state, labels) = mogc_cluster(&bundle, &MOGCConfig::new(1.0, 2)).unwrap();
//! assert!(state.converged);
//! assert_eq!(labels.as_slice()[0], labels.as_slice()[2]);
//! assert_ne!(labels.as_slice()[0], labels.as_slice()[3]);
//! ```

pub mod error;
pub mod experiment;
pub mod graph_io;
pub mod linalg;
pub mod metrics;
pub mod motif;
pub mod solver;

pub use error::{Error, Result};
