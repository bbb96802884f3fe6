//! Multiclass active learning from pairwise label comparisons.
//!
//! A teacher answers two kinds of queries about an input: which class scores
//! highest (argmax), and whether one named class outscores another
//! (comparison). The crate simulates learners that only use comparisons and
//! counts every query they spend.

pub mod aggregation;
pub mod algd;
pub mod baselines;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod one_dim;
pub mod rng;
pub mod teacher;
pub mod theory;

pub use error::{Error, Result};
