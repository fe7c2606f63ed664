//! Oracles standing in for the human reviewer, detection metrics and
//! single-word baselines.

pub mod baselines;
pub mod metrics;
pub mod oracle;

pub use baselines::{sample_candidate_words, score_single_word_baselines, WordScore};
pub use metrics::DetectionCounts;
pub use oracle::{KeywordOracle, Oracle};
