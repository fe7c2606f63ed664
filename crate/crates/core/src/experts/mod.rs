//! Expert constructions for both case studies.

pub mod text;
pub mod tree;

pub use text::{
    build_vocabulary, sample_projection_experts, tokenize, BowVocabulary, ProjectionConfig, ProjectionExpert,
    ProjectionPool, SparseBow, WordDetector,
};
pub use tree::{sample_tree_experts, AttributePredicate, Branch, TreeExpert, TreeSamplingConfig};
