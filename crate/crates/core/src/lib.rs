//! Lexical semantic change detection between two corpora.
//!
//! Train skip-gram embeddings with negative sampling on each corpus, bring
//! the two spaces into correspondence (vector initialisation, orthogonal
//! Procrustes, or word injection), then score target words by how far their
//! vectors or neighbourhoods moved.
//!
//! With the default `parallel` feature the trainer runs lock-free across a
//! rayon pool when `threads > 1`, and scoring and sweeps use rayon too.
//! Without it every path is sequential.

pub mod align;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod io;
pub mod measures;
pub mod sgns;

pub use align::{AlignedSpaces, Method, Order};
pub use corpus::{Corpus, Target, TargetSet, Vocabulary};
pub use error::{Error, Result};
pub use measures::{BinaryLabels, ChangeScores, Measure};
pub use sgns::{EmbeddingModel, TrainingConfig};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
