//! The active set of experts: alerting, threshold voting and eviction.
//!
//! An event raises an *alert* when at least one active expert flags it. Only
//! alerted events are inspected, and an inspection implicates experts
//! whose flag disagrees with the judgement according to an [`Implication`]
//! rule. Implicated experts are evicted with probability `alpha`
//! (`alpha = 1` is plain halving). The `theta`-fraction vote is the set's prediction; when a
//! perfect expert is present and `alpha = 1` the number of wrong votes is at
//! most `floor(log_{1/(1-theta)} m)`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::event::{ExpertId, Judgement};
use crate::rng::SeededRng;
use crate::{Error, Result};

/// Slack on the vote threshold so that `theta * n` landing a rounding error
/// above an integer still counts as reached.
const VOTE_TOLERANCE: f64 = 1e-9;

/// Which experts a judgement implicates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    /// Only a wrong vote implicates, and only the experts that sided with it.
    #[default]
    Mistake,
    /// Flaggers are implicated by every normal judgement; silent experts
    /// only by a wrong vote.
    FalseAlarm,
    /// Every expert whose flag disagrees with the judgement.
    Disagreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteConfig {
    pub theta: f64,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub implication: Implication,
}

impl VoteConfig {
    /// Majority vote with deterministic halving.
    pub fn halving(seed: u64) -> Self {
        VoteConfig { theta: 0.5, alpha: 1.0, seed, implication: Implication::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 0.5) {
            return Err(Error::InvalidTheta(self.theta));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.alpha >= 1.0
    }
}

/// Outcome of evaluating one event against the current members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub event_id: u64,
    /// At least one active expert flagged the event.
    pub alert: bool,
    /// At least `theta` of the active experts flagged the event.
    pub vote_suspicious: bool,
    /// Sorted ids of the flagging experts.
    pub flaggers: Vec<ExpertId>,
    pub active_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvictionReport {
    pub event_id: u64,
    pub implicated: usize,
    pub evicted: Vec<ExpertId>,
    /// The vote disagreed with the judgement.
    pub mistake: bool,
    pub mistakes: u64,
    pub active_size: usize,
    /// The active set is empty after this judgement.
    pub exhausted: bool,
    /// Judgement of a non-alerted event as normal; nothing was learned.
    pub ignored: bool,
}

/// Serializable form of an [`ActiveSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetState {
    pub config: VoteConfig,
    pub initial_size: usize,
    pub members: Vec<ExpertId>,
    pub mistakes: u64,
    #[serde(with = "crate::rng::position_serde")]
    pub rng_position: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    config: VoteConfig,
    initial_size: usize,
    members: Vec<ExpertId>,
    mistakes: u64,
    rng: SeededRng,
}

impl ActiveSet {
    pub fn new(expert_count: usize, config: VoteConfig) -> Result<Self> {
        if expert_count == 0 {
            return Err(Error::EmptyPool);
        }
        config.validate()?;
        let count = u32::try_from(expert_count).map_err(|_| Error::InvalidConfig("too many experts"))?;
        Ok(ActiveSet {
            config,
            initial_size: expert_count,
            members: (0..count).map(ExpertId).collect(),
            mistakes: 0,
            rng: SeededRng::new(config.seed),
        })
    }

    pub fn config(&self) -> &VoteConfig {
        &self.config
    }

    pub fn initial_size(&self) -> usize {
        self.initial_size
    }

    /// Active experts in ascending id order.
    pub fn members(&self) -> &[ExpertId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: ExpertId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn mistakes(&self) -> u64 {
        self.mistakes
    }

    /// Evaluates flags given in the order of [`members`](Self::members).
    pub fn evaluate(&self, event_id: u64, flags: &[bool]) -> Result<Verdict> {
        if flags.len() != self.members.len() {
            return Err(Error::FlagCountMismatch { expected: self.members.len(), got: flags.len() });
        }
        let mut flags = flags.iter();
        self.evaluate_with(event_id, |_| *flags.next().unwrap_or(&false))
    }

    /// Evaluates by asking `flag` once per active expert, in id order.
    pub fn evaluate_with(&self, event_id: u64, mut flag: impl FnMut(ExpertId) -> bool) -> Result<Verdict> {
        if self.members.is_empty() {
            return Err(Error::PoolExhausted);
        }
        let flaggers: Vec<ExpertId> = self.members.iter().copied().filter(|&id| flag(id)).collect();
        let active_size = self.members.len();
        let vote_suspicious = flaggers.len() as f64 + VOTE_TOLERANCE >= self.config.theta * active_size as f64;
        Ok(Verdict { event_id, alert: !flaggers.is_empty(), vote_suspicious, flaggers, active_size })
    }

    /// Learns from an inspection of an alerted event.
    ///
    /// Members implicated under the configured rule are evicted with
    /// probability `alpha`. Members evicted since
    /// the verdict was produced are skipped.
    pub fn apply_judgement(&mut self, verdict: &Verdict, judgement: &Judgement) -> Result<EvictionReport> {
        if verdict.event_id != judgement.event_id {
            return Err(Error::EventMismatch { verdict: verdict.event_id, judged: judgement.event_id });
        }
        if self.members.is_empty() {
            return Err(Error::PoolExhausted);
        }
        if !verdict.alert {
            if judgement.suspicious {
                return Err(Error::UnalertedJudgement(verdict.event_id));
            }
            return Ok(self.report(verdict.event_id, 0, Vec::new(), false, true));
        }

        let mistake = verdict.vote_suspicious != judgement.suspicious;
        if mistake {
            self.mistakes += 1;
        }

        let (blame_flaggers, blame_silent) = match self.config.implication {
            Implication::Mistake => (mistake && !judgement.suspicious, mistake && judgement.suspicious),
            Implication::FalseAlarm => (!judgement.suspicious, mistake && judgement.suspicious),
            Implication::Disagreement => (!judgement.suspicious, judgement.suspicious),
        };
        let alpha = self.config.alpha;
        let deterministic = self.config.is_deterministic();
        let mut implicated = 0;
        let mut evicted = Vec::new();
        let mut flaggers = verdict.flaggers.iter().peekable();
        let rng = &mut self.rng;
        self.members.retain(|&id| {
            while flaggers.next_if(|&&f| f < id).is_some() {}
            let flagged = flaggers.peek().is_some_and(|&&f| f == id);
            if !(if flagged { blame_flaggers } else { blame_silent }) {
                return true;
            }
            implicated += 1;
            if deterministic || rng.random::<f64>() < alpha {
                evicted.push(id);
                false
            } else {
                true
            }
        });
        Ok(self.report(verdict.event_id, implicated, evicted, mistake, false))
    }

    fn report(
        &self,
        event_id: u64,
        implicated: usize,
        evicted: Vec<ExpertId>,
        mistake: bool,
        ignored: bool,
    ) -> EvictionReport {
        EvictionReport {
            event_id,
            implicated,
            evicted,
            mistake,
            mistakes: self.mistakes,
            active_size: self.members.len(),
            exhausted: self.members.is_empty(),
            ignored,
        }
    }

    pub fn state(&self) -> ActiveSetState {
        ActiveSetState {
            config: self.config,
            initial_size: self.initial_size,
            members: self.members.clone(),
            mistakes: self.mistakes,
            rng_position: self.rng.position(),
        }
    }

    pub fn from_state(state: ActiveSetState) -> Result<Self> {
        state.config.validate()?;
        if state.initial_size == 0 {
            return Err(Error::EmptyPool);
        }
        let sorted = state.members.windows(2).all(|w| w[0] < w[1]);
        let in_range = state.members.last().is_none_or(|id| id.index() < state.initial_size);
        if !sorted || !in_range {
            return Err(Error::StateMismatch("members must be sorted, unique ids below the initial size"));
        }
        Ok(ActiveSet {
            rng: SeededRng::at_position(state.config.seed, state.rng_position),
            config: state.config,
            initial_size: state.initial_size,
            members: state.members,
            mistakes: state.mistakes,
        })
    }
}

/// `floor(log_{1/(1-theta)} m)`: the most wrong votes a deterministic active
/// set containing a perfect expert can make.
pub fn mistake_bound(expert_count: u64, theta: f64) -> Result<u64> {
    if expert_count == 0 {
        return Err(Error::EmptyPool);
    }
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::InvalidTheta(theta));
    }
    let m = expert_count as f64;
    let base = 1.0 / (1.0 - theta);
    let mut k = libm::floor(libm::log(m) / libm::log(base)) as u64;
    // Correct rounding at exact powers of the base.
    while libm::pow(base, (k + 1) as f64) <= m {
        k += 1;
    }
    while k > 0 && libm::pow(base, k as f64) > m {
        k -= 1;
    }
    Ok(k)
}

/// Expected number of implications an expert survives under eviction
/// probability `alpha`, counting the one that evicts it: `1 / alpha`.
pub fn expected_tolerated_mistakes(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(1.0 / alpha)
}
