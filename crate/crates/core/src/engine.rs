//! One engine over the three operating modes.
//!
//! `Halving` and `Agnostic` run the voting active set (`alpha = 1` and
//! `alpha < 1`), `Auction` runs the risk-factor auction. The engine owns
//! its state; the expert pool is shared and immutable.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::active_set::{ActiveSet, ActiveSetState, EvictionReport, Implication, Verdict, VoteConfig};
use crate::auction::{AuctionOutcome, RiskAuction, RiskAuctionState, SettlementReport};
use crate::event::{Event, ExpertId, Judgement, Payload};
use crate::experts::text::ProjectionPool;
use crate::experts::tree::TreeExpert;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Halving,
    Agnostic,
    Auction,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Halving => "halving",
            Mode::Agnostic => "agnostic",
            Mode::Auction => "auction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub mode: Mode,
    pub theta: f64,
    /// Eviction probability; forced to 1 in halving mode.
    pub alpha: f64,
    /// Auction solvency constant.
    pub c: f64,
    pub seed: u64,
    #[serde(default)]
    pub implication: Implication,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Halving,
            theta: 0.5,
            alpha: 1.0,
            c: 0.2,
            seed: 42,
            implication: Implication::default(),
        }
    }
}

impl EngineConfig {
    pub fn vote_config(&self) -> VoteConfig {
        let alpha = if self.mode == Mode::Halving { 1.0 } else { self.alpha };
        VoteConfig { theta: self.theta, alpha, seed: self.seed, implication: self.implication }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpertPool {
    Projection(ProjectionPool),
    Trees { experts: Vec<TreeExpert> },
}

impl ExpertPool {
    pub fn len(&self) -> usize {
        match self {
            ExpertPool::Projection(pool) => pool.experts.len(),
            ExpertPool::Trees { experts } => experts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExpertPool::Projection(_) => "projection",
            ExpertPool::Trees { .. } => "tree",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExpertPool::Projection(pool) => pool.validate(),
            ExpertPool::Trees { experts } => {
                for (i, expert) in experts.iter().enumerate() {
                    if expert.id.index() != i {
                        return Err(Error::InvalidConfig("tree expert ids must equal their positions"));
                    }
                    expert.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn describe(&self, id: ExpertId) -> String {
        match self {
            ExpertPool::Projection(_) => format!("projection {id}"),
            ExpertPool::Trees { experts } => match experts.get(id.index()) {
                Some(tree) => format!("tree {id}: {}", tree.describe()),
                None => format!("tree {id}"),
            },
        }
    }
}

/// An alert waiting for its judgement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Review {
    Vote(Verdict),
    Auction(AuctionOutcome),
}

impl Review {
    pub fn event_id(&self) -> u64 {
        match self {
            Review::Vote(v) => v.event_id,
            Review::Auction(o) => o.event_id,
        }
    }
}

/// What a judgement changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JudgementEffect {
    Vote(EvictionReport),
    Auction(SettlementReport),
}

impl JudgementEffect {
    pub fn evicted(&self) -> Vec<ExpertId> {
        match self {
            JudgementEffect::Vote(r) => r.evicted.clone(),
            JudgementEffect::Auction(r) if r.evicted => alloc::vec![r.winner],
            JudgementEffect::Auction(_) => Vec::new(),
        }
    }

    pub fn exhausted(&self) -> bool {
        match self {
            JudgementEffect::Vote(r) => r.exhausted,
            JudgementEffect::Auction(r) => r.exhausted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreState {
    Vote(ActiveSetState),
    Auction(RiskAuctionState),
}

/// Everything needed to resume an engine, given the same expert pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub config: EngineConfig,
    pub pool_size: usize,
    pub processed: u64,
    pub core: CoreState,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum Core {
    Vote(ActiveSet),
    Auction(RiskAuction),
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    pool: Arc<ExpertPool>,
    core: Core,
    processed: u64,
}

impl Engine {
    pub fn new(config: EngineConfig, pool: Arc<ExpertPool>) -> Result<Self> {
        pool.validate()?;
        let core = match (config.mode, pool.as_ref()) {
            (Mode::Auction, ExpertPool::Trees { experts }) => Core::Auction(RiskAuction::new(experts.len(), config.c)?),
            (Mode::Auction, other) => return Err(Error::UnsupportedPool { pool: other.kind(), mode: "auction" }),
            (_, pool) => Core::Vote(ActiveSet::new(pool.len(), config.vote_config())?),
        };
        Ok(Engine { config, pool, core, processed: 0 })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn pool(&self) -> &Arc<ExpertPool> {
        &self.pool
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn members(&self) -> &[ExpertId] {
        match &self.core {
            Core::Vote(set) => set.members(),
            Core::Auction(auction) => auction.members(),
        }
    }

    pub fn active_size(&self) -> usize {
        self.members().len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.members().is_empty()
    }

    /// Wrong votes so far; always zero in auction mode.
    pub fn mistakes(&self) -> u64 {
        match &self.core {
            Core::Vote(set) => set.mistakes(),
            Core::Auction(_) => 0,
        }
    }

    pub fn auction(&self) -> Option<&RiskAuction> {
        match &self.core {
            Core::Auction(auction) => Some(auction),
            Core::Vote(_) => None,
        }
    }

    pub fn active_set(&self) -> Option<&ActiveSet> {
        match &self.core {
            Core::Vote(set) => Some(set),
            Core::Auction(_) => None,
        }
    }

    /// Evaluates one event. Returns the review to hand to an inspector when
    /// the event raises an alert.
    pub fn observe(&mut self, event: &Event) -> Result<Option<Review>> {
        let review = match (&self.core, self.pool.as_ref()) {
            (Core::Vote(set), ExpertPool::Projection(pool)) => {
                let text = event.payload.as_text().ok_or(Error::PayloadMismatch { expected: "text message" })?;
                let bow = pool.vocabulary.sparse_bow(text);
                let verdict = set.evaluate_with(event.id, |id| pool.experts[id.index()].flags(&bow))?;
                verdict.alert.then_some(Review::Vote(verdict))
            }
            (Core::Vote(set), ExpertPool::Trees { experts }) => {
                let tx = transaction(&event.payload)?;
                let verdict = set.evaluate_with(event.id, |id| experts[id.index()].bid(tx) > 0.0)?;
                verdict.alert.then_some(Review::Vote(verdict))
            }
            (Core::Auction(auction), ExpertPool::Trees { experts }) => {
                let outcome = auction.process_transaction(experts, transaction(&event.payload)?)?;
                outcome.inspect.then_some(Review::Auction(outcome))
            }
            (Core::Auction(_), pool) => return Err(Error::UnsupportedPool { pool: pool.kind(), mode: "auction" }),
        };
        self.processed += 1;
        Ok(review)
    }

    /// Applies an inspection result to the current state.
    pub fn judge(&mut self, review: &Review, judgement: &Judgement) -> Result<JudgementEffect> {
        if review.event_id() != judgement.event_id {
            return Err(Error::EventMismatch { verdict: review.event_id(), judged: judgement.event_id });
        }
        match (&mut self.core, review) {
            (Core::Vote(set), Review::Vote(verdict)) => {
                set.apply_judgement(verdict, judgement).map(JudgementEffect::Vote)
            }
            (Core::Auction(auction), Review::Auction(outcome)) => {
                auction.settle(outcome, judgement.suspicious).map(JudgementEffect::Auction)
            }
            _ => Err(Error::StateMismatch("review was produced in another mode")),
        }
    }

    pub fn state(&self) -> EngineState {
        let core = match &self.core {
            Core::Vote(set) => CoreState::Vote(set.state()),
            Core::Auction(auction) => CoreState::Auction(auction.state()),
        };
        EngineState { config: self.config, pool_size: self.pool.len(), processed: self.processed, core }
    }

    pub fn restore(state: EngineState, pool: Arc<ExpertPool>) -> Result<Self> {
        if state.pool_size != pool.len() {
            return Err(Error::StateMismatch("state was taken with a different pool size"));
        }
        let core = match (state.config.mode, state.core) {
            (Mode::Auction, CoreState::Auction(auction)) => {
                if auction.ledger.pool_size != pool.len() {
                    return Err(Error::StateMismatch("ledger size differs from the pool"));
                }
                Core::Auction(RiskAuction::from_state(auction)?)
            }
            (Mode::Halving | Mode::Agnostic, CoreState::Vote(set)) => {
                if set.initial_size != pool.len() || set.config != state.config.vote_config() {
                    return Err(Error::StateMismatch("active set does not match the engine configuration"));
                }
                Core::Vote(ActiveSet::from_state(set)?)
            }
            _ => return Err(Error::StateMismatch("state core does not match the mode")),
        };
        let mut engine = Engine::new(state.config, pool)?;
        engine.core = core;
        engine.processed = state.processed;
        Ok(engine)
    }
}

fn transaction(payload: &Payload) -> Result<&crate::transaction::Transaction> {
    payload.as_transaction().ok_or(Error::PayloadMismatch { expected: "transaction" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::fintech::{default_rules, generate_population, generate_stream, FintechConfig};
    use crate::event::JudgementSource;
    use crate::experts::text::{build_vocabulary, ProjectionConfig, ProjectionPool};
    use crate::experts::tree::{sample_tree_experts, TreeSamplingConfig};

    fn tree_pool(count: usize) -> Arc<ExpertPool> {
        let planted: Vec<TreeExpert> = default_rules().iter().map(|r| TreeExpert::planted(ExpertId(0), r)).collect();
        let experts = sample_tree_experts(count, &planted, &TreeSamplingConfig::default(), 5).unwrap();
        Arc::new(ExpertPool::Trees { experts })
    }

    fn events(count: u64) -> Vec<Event> {
        let config = FintechConfig::default();
        let population = generate_population(2000, &config, 1).unwrap();
        generate_stream(count, &population, &default_rules(), &config, 2).unwrap().map(Event::transaction).collect()
    }

    fn replay(engine: &mut Engine, events: &[Event]) -> Vec<JudgementEffect> {
        let mut effects = Vec::new();
        for event in events {
            if let Some(review) = engine.observe(event).unwrap() {
                let judgement =
                    Judgement { event_id: event.id, suspicious: event.truth.unwrap(), source: JudgementSource::Oracle };
                effects.push(engine.judge(&review, &judgement).unwrap());
            }
        }
        effects
    }

    #[test]
    fn projection_pool_cannot_bid() {
        let vocabulary = build_vocabulary(["a b c"], 3).unwrap();
        let pool = Arc::new(ExpertPool::Projection(
            ProjectionPool::sample(vocabulary, 4, &ProjectionConfig::dense(), 0).unwrap(),
        ));
        let config = EngineConfig { mode: Mode::Auction, ..EngineConfig::default() };
        assert_eq!(
            Engine::new(config, pool).unwrap_err(),
            Error::UnsupportedPool { pool: "projection", mode: "auction" }
        );
    }

    #[test]
    fn payload_must_match_the_pool() {
        let mut engine = Engine::new(EngineConfig::default(), tree_pool(10)).unwrap();
        assert!(engine.observe(&Event::text(0, "hello")).is_err());
        assert_eq!(engine.processed(), 0);
    }

    #[test]
    fn auction_mode_shrinks_the_pool() {
        let config = EngineConfig { mode: Mode::Auction, ..EngineConfig::default() };
        let mut engine = Engine::new(config, tree_pool(200)).unwrap();
        let effects = replay(&mut engine, &events(20_000));
        assert!(!effects.is_empty());
        assert!(engine.active_size() < 200);
        assert_eq!(engine.processed(), 20_000);
        assert_eq!(engine.mistakes(), 0);
    }

    #[test]
    fn halving_mode_on_trees_flags_positive_bids() {
        let mut engine = Engine::new(EngineConfig::default(), tree_pool(50)).unwrap();
        let effects = replay(&mut engine, &events(2000));
        assert!(effects.iter().any(|e| !e.evicted().is_empty()));
    }

    #[test]
    fn restore_continues_identically_in_every_mode() {
        let stream = events(6000);
        for mode in [Mode::Halving, Mode::Agnostic, Mode::Auction] {
            let config = EngineConfig { mode, alpha: 0.3, ..EngineConfig::default() };
            let pool = tree_pool(120);
            let mut whole = Engine::new(config, pool.clone()).unwrap();
            let full = replay(&mut whole, &stream);

            let mut first = Engine::new(config, pool.clone()).unwrap();
            let mut effects = replay(&mut first, &stream[..3000]);
            let mut resumed = Engine::restore(first.state(), pool).unwrap();
            effects.extend(replay(&mut resumed, &stream[3000..]));
            assert_eq!(effects, full, "{mode:?}");
            assert_eq!(resumed.state(), whole.state());
        }
    }

    #[test]
    fn restore_rejects_foreign_state() {
        let engine = Engine::new(EngineConfig::default(), tree_pool(10)).unwrap();
        assert!(Engine::restore(engine.state(), tree_pool(11)).is_err());
        let mut state = engine.state();
        state.config.mode = Mode::Auction;
        assert!(Engine::restore(state, tree_pool(10)).is_err());
    }
}
