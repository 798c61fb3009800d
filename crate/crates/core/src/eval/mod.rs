//! Analogy accuracy and word-similarity rank correlation.
//!
//! Analogy questions containing a word outside the searched vocabulary are
//! discarded and counted separately; the report carries both the accuracy
//! over answered questions and the accuracy with discarded questions
//! counted as wrong. Similarity evaluation instead substitutes a stand-in
//! vector for unknown words.

mod analogy;
mod similarity;

pub use self::analogy::{
    evaluate_analogies, expand_pairs, matches_expected, read_groups, resolve, solve_analogy,
    AnalogyCorpus, AnalogyQuestion, Category, CategoryResult, EvalReport, Group, Prediction, Tally,
};
pub use self::similarity::{
    average_ranks, evaluate_similarity, oov_fallback_vector, read_similarity_pairs, spearman,
    PairScore, SimilarityPair, SimilarityReport, OOV_FALLBACK_WORDS,
};

/// Default number of most frequent words searched during evaluation.
pub const DEFAULT_SEARCH_LIMIT: usize = 300_000;
