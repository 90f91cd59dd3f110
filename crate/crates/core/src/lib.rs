//! Toolkit for Arabic grammatical error correction work: M² and parallel
//! corpora, MaxMatch scoring, edit-tag extraction, normalization regimes,
//! error-type classification, seeded corruption and LLM prompt building.

pub mod align;
pub mod corpus;
pub mod corrupt;
pub mod normalize;
pub mod par;
pub mod prompt;
pub mod scorer;
pub mod seq2edit;
pub mod taxonomy;

pub use corpus::{AnnotatedExample, Edit, EditSet, ParallelExample, Sentence, Token};

/// Crate version, reported by `agec --version`.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
