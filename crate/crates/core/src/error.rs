use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expert pool must contain at least one expert")]
    EmptyPool,
    #[error("theta must lie in (0, 0.5], got {0}")]
    InvalidTheta(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("auction constant c must be positive, got {0}")]
    InvalidAuctionConstant(f64),
    #[error("expected one flag per active expert ({expected}), got {got}")]
    FlagCountMismatch { expected: usize, got: usize },
    #[error("active set is exhausted")]
    PoolExhausted,
    #[error("judgement for event {judged} does not match the verdict for event {verdict}")]
    EventMismatch { verdict: u64, judged: u64 },
    #[error("event {0} raised no alert and cannot be judged suspicious")]
    UnalertedJudgement(u64),
    #[error("expert {0} is not a member of the pool")]
    UnknownExpert(u32),
    #[error("bids must cover the active set ({expected} experts), got {got}")]
    BidCountMismatch { expected: usize, got: usize },
    #[error("bid {0} is outside [0, 1]")]
    InvalidBid(f64),
    #[error("auction outcome did not request an inspection")]
    NotInspected,
    #[error("corpus sample is empty")]
    EmptyCorpus,
    #[error("vocabulary of {requested} tokens requested but the corpus has {available} distinct tokens")]
    VocabularyTooSmall { requested: usize, available: usize },
    #[error("{planted} planted experts do not fit in a pool of {count}")]
    TooManyPlanted { planted: usize, count: usize },
    #[error("fraud rate must lie in (0, 1], got {0}")]
    InvalidFraudRate(f64),
    #[error("population needs at least two customers, got {0}")]
    PopulationTooSmall(usize),
    #[error("unknown country code {0:?}")]
    UnknownCountry([u8; 2]),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("payload does not match: expected {expected}")]
    PayloadMismatch { expected: &'static str },
    #[error("{pool} experts cannot run in {mode} mode")]
    UnsupportedPool { pool: &'static str, mode: &'static str },
    #[error("state does not match the engine: {0}")]
    StateMismatch(&'static str),
}
