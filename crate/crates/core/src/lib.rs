//! Word embedding training (CBOW, Skip-gram, subword-enriched variants) and
//! evaluation on analogy and word-similarity benchmarks.
//!
//! The pipeline is preprocess → [`corpus::build_vocabulary`] →
//! [`trainer::train`] → [`eval::evaluate_analogies`] /
//! [`eval::evaluate_similarity`]. The `embedkit` binary wires these
//! together; see [`cli`].

pub mod cli;
pub mod corpus;
pub mod corpus_tools;
pub mod error;
pub mod eval;
pub mod store;
pub mod trainer;

pub use crate::error::{Error, Result};
pub use crate::store::VectorStore;
