//! Streaming detection with a shrinking active set of experts.
//!
//! The crate is `no_std` and only needs an allocator. It contains the
//! active-set state machine with threshold voting and probabilistic
//! eviction, the risk-factor auction, the expert constructions used by the
//! text and transaction case studies, seeded synthetic data generators, the
//! oracles and metrics, and an [`Engine`](engine::Engine) that ties them
//! together. File formats, timing, the review service and the CLI live in
//! the `halfado` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod active_set;
pub mod auction;
pub mod datagen;
pub mod engine;
mod error;
pub mod eval;
pub mod event;
pub mod experts;
pub mod rng;
pub mod transaction;

pub use active_set::{
    expected_tolerated_mistakes, mistake_bound, ActiveSet, ActiveSetState, EvictionReport, Implication, Verdict,
    VoteConfig,
};
pub use auction::{AuctionLedger, AuctionOutcome, LedgerEntry, RiskAuction, SettlementReport};
pub use engine::{Engine, EngineConfig, EngineState, ExpertPool, Mode, Review};
pub use error::Error;
pub use event::{Event, ExpertId, Judgement, JudgementSource, Payload};
pub use transaction::{AgeGroup, Country, Customer, Party, Transaction};

pub type Result<T, E = Error> = core::result::Result<T, E>;
