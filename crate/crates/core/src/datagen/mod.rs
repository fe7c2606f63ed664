//! Seeded synthetic data: the payments population and stream, and short
//! text messages.

pub mod fintech;
pub mod text;

pub use fintech::{
    default_rules, generate_population, generate_stream, rule_coverage, FintechConfig, PlantedRule, TransactionStream,
};
pub use text::{truncate_chars, MessageCorpusConfig, MessageGenerator, MAX_MESSAGE_CHARS};
