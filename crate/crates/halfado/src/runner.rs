//! Drives an engine over a stream, judges alerts and accounts for the run.

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use halfado_core::datagen::PlantedRule;
use halfado_core::engine::JudgementEffect;
use halfado_core::eval::{DetectionCounts, Oracle};
use halfado_core::experts::TreeExpert;
use halfado_core::{
    mistake_bound, Engine, EngineConfig, Event, ExpertId, ExpertPool, Implication, Judgement, JudgementSource, Mode,
    Review,
};
use serde::{Deserialize, Serialize};

use crate::documents::{pool_digest, DocumentError, StateDocument};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] halfado_core::Error),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("no oracle configured; alerts need a human judgement")]
    NoOracle,
}

/// Counters carried across snapshots.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Positives count only events whose label was known on arrival.
    pub counts: DetectionCounts,
    /// Events whose label was known on arrival.
    pub labelled: u64,
    pub judged_suspicious: u64,
    /// Id of the event whose judgement emptied the active set.
    pub exhausted_at: Option<u64>,
    /// Transactions matching a planted rule.
    pub rule_matches: u64,
    /// Frauds matching a planted rule whose expert was still active.
    pub covered_frauds: u64,
    pub covered_frauds_alerted: u64,
}

/// One event as the audit trail sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub event_id: u64,
    pub alert: bool,
    pub label: Option<bool>,
    pub vote_suspicious: Option<bool>,
    pub flaggers: usize,
    pub winner: Option<u32>,
    pub bid: Option<f64>,
    pub judged_suspicious: Option<bool>,
    pub evicted: usize,
    pub active_size: usize,
}

/// An observed event and, when it alerted, the review awaiting judgement.
#[derive(Debug, Clone)]
pub struct Observation {
    pub review: Option<Review>,
    pub decision: Decision,
}

/// Where each planted rule's expert sits in a tree pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedExpert {
    pub rule: PlantedRule,
    pub expert: ExpertId,
}

pub fn locate_planted(pool: &ExpertPool, rules: &[PlantedRule]) -> Vec<PlantedExpert> {
    let ExpertPool::Trees { experts } = pool else { return Vec::new() };
    rules
        .iter()
        .filter_map(|rule| {
            let probe = TreeExpert::planted(ExpertId(0), rule);
            experts.iter().find(|e| e.same_rule(&probe)).map(|e| PlantedExpert { rule: *rule, expert: e.id })
        })
        .collect()
}

pub struct Runner {
    engine: Engine,
    oracle: Option<Oracle>,
    rules: Vec<PlantedRule>,
    planted: Vec<PlantedExpert>,
    metrics: RunMetrics,
    digest: OnceLock<String>,
}

impl Runner {
    /// `oracle = None` leaves judging to the caller.
    pub fn new(
        config: EngineConfig,
        pool: Arc<ExpertPool>,
        oracle: Option<Oracle>,
        rules: Vec<PlantedRule>,
    ) -> Result<Self, RunError> {
        let engine = Engine::new(config, pool)?;
        Ok(Self::assemble(engine, oracle, rules, RunMetrics::default()))
    }

    fn assemble(engine: Engine, oracle: Option<Oracle>, rules: Vec<PlantedRule>, metrics: RunMetrics) -> Self {
        let planted = locate_planted(engine.pool(), &rules);
        Runner { engine, oracle, rules, planted, metrics, digest: OnceLock::new() }
    }

    pub fn restore(
        doc: StateDocument,
        pool: Arc<ExpertPool>,
        oracle: Option<Oracle>,
        rules: Vec<PlantedRule>,
    ) -> Result<Self, RunError> {
        doc.check_pool(&pool)?;
        let engine = Engine::restore(doc.engine, pool)?;
        let runner = Self::assemble(engine, oracle, rules, doc.metrics);
        let _ = runner.digest.set(doc.pool_sha256);
        Ok(runner)
    }

    pub fn snapshot(&self) -> StateDocument {
        let digest = self.digest.get_or_init(|| pool_digest(self.engine.pool())).clone();
        StateDocument::new(self.engine.state(), self.metrics.clone(), digest)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn oracle(&self) -> Option<&Oracle> {
        self.oracle.as_ref()
    }

    pub fn planted(&self) -> &[PlantedExpert] {
        &self.planted
    }

    /// Observes and, on an alert, judges with the oracle at once.
    pub fn step(&mut self, event: &Event) -> Result<Decision, RunError> {
        let Observation { review, mut decision } = self.observe(event)?;
        if let Some(review) = review {
            let suspicious = match decision.label {
                Some(label) => label,
                None => self.oracle.as_ref().ok_or(RunError::NoOracle)?.label(event)?,
            };
            let judgement = Judgement { event_id: event.id, suspicious, source: JudgementSource::Oracle };
            let effect = self.apply(&review, &judgement)?;
            decision.judged_suspicious = Some(suspicious);
            decision.evicted = effect.evicted().len();
            decision.active_size = self.engine.active_size();
        }
        Ok(decision)
    }

    fn label(&self, event: &Event) -> Result<Option<bool>, RunError> {
        match &self.oracle {
            Some(oracle) => Ok(Some(oracle.label(event)?)),
            None => Ok(event.truth),
        }
    }

    /// Evaluates one event without judging it. Once the active set is
    /// exhausted, events are counted but raise no alerts.
    pub fn observe(&mut self, event: &Event) -> Result<Observation, RunError> {
        let label = self.label(event)?;
        let review = if self.engine.is_exhausted() { None } else { self.engine.observe(event)? };
        let alert = review.is_some();
        self.metrics.counts.record(alert, label == Some(true));
        self.metrics.labelled += u64::from(label.is_some());
        self.account_rules(event, alert);

        let mut decision = Decision {
            event_id: event.id,
            alert,
            label,
            vote_suspicious: None,
            flaggers: 0,
            winner: None,
            bid: None,
            judged_suspicious: None,
            evicted: 0,
            active_size: self.engine.active_size(),
        };
        match &review {
            Some(Review::Vote(v)) => {
                decision.vote_suspicious = Some(v.vote_suspicious);
                decision.flaggers = v.flaggers.len();
            }
            Some(Review::Auction(o)) => {
                decision.winner = o.winner.map(|w| w.0);
                decision.bid = Some(o.winning_bid);
            }
            None => {}
        }
        Ok(Observation { review, decision })
    }

    fn account_rules(&mut self, event: &Event, alert: bool) {
        let Some(tx) = event.payload.as_transaction() else { return };
        if !self.rules.iter().any(|r| r.matches(&tx.sender, &tx.receiver)) {
            return;
        }
        self.metrics.rule_matches += 1;
        if !tx.fraud {
            return;
        }
        let members = self.engine.members();
        let covered = self
            .planted
            .iter()
            .any(|p| p.rule.matches(&tx.sender, &tx.receiver) && members.binary_search(&p.expert).is_ok());
        if covered {
            self.metrics.covered_frauds += 1;
            self.metrics.covered_frauds_alerted += u64::from(alert);
        }
    }

    /// Applies a judgement to a review produced by [`observe`](Self::observe).
    pub fn apply(&mut self, review: &Review, judgement: &Judgement) -> Result<JudgementEffect, RunError> {
        let effect = self.engine.judge(review, judgement)?;
        self.metrics.counts.inspections += 1;
        self.metrics.judged_suspicious += u64::from(judgement.suspicious);
        if effect.exhausted() && self.metrics.exhausted_at.is_none() {
            self.metrics.exhausted_at = Some(judgement.event_id);
        }
        Ok(effect)
    }

    pub fn report(&self, elapsed: Duration) -> RunReport {
        let config = *self.engine.config();
        let counts = self.metrics.counts;
        let fully_labelled = self.metrics.labelled == counts.events;
        let precision = if fully_labelled {
            counts.precision()
        } else {
            (counts.inspections > 0).then(|| self.metrics.judged_suspicious as f64 / counts.inspections as f64)
        };
        let recall = if fully_labelled { counts.recall() } else { None };
        let m = self.engine.pool().len();
        let vote = config.vote_config();
        let bound = (config.mode != Mode::Auction && vote.alpha >= 1.0)
            .then(|| mistake_bound(m as u64, config.theta).ok())
            .flatten();
        let seconds = elapsed.as_secs_f64();
        let ledger = self.engine.auction().map(|a| a.ledger());
        let members = self.engine.members();
        RunReport {
            mode: config.mode,
            m,
            theta: config.theta,
            alpha: vote.alpha,
            c: config.c,
            seed: config.seed,
            implication: config.implication,
            events_processed: counts.events,
            alerts: counts.alerts,
            inspections: counts.inspections,
            inspection_fraction: counts.inspection_fraction(),
            mistakes: self.engine.mistakes(),
            final_active_size: members.len(),
            positives: fully_labelled.then_some(counts.positives),
            true_alerts: fully_labelled.then_some(counts.true_alerts),
            precision,
            recall,
            throughput_events_per_second: if seconds > 0.0 { counts.events as f64 / seconds } else { 0.0 },
            elapsed_seconds: seconds,
            exhausted: self.engine.is_exhausted(),
            exhausted_at: self.metrics.exhausted_at,
            surviving_experts: members.iter().map(|&id| self.engine.pool().describe(id)).collect(),
            mistake_bound: bound,
            within_mistake_bound: bound.map(|b| self.engine.mistakes() <= b),
            total_recall: recall.map(|r| r == 1.0),
            optimal_inspection_fraction: (!self.rules.is_empty() && counts.events > 0)
                .then(|| self.metrics.rule_matches as f64 / counts.events as f64),
            covered_frauds: self.metrics.covered_frauds,
            covered_frauds_alerted: self.metrics.covered_frauds_alerted,
            planted: self
                .planted
                .iter()
                .map(|p| {
                    let entry = ledger.and_then(|l| l.entry(p.expert)).copied();
                    PlantedReport {
                        rule: format!("{}->{}", p.rule.sender_country.as_str(), p.rule.receiver_country.as_str()),
                        fraud_rate: p.rule.fraud_rate,
                        expert: p.expert.0,
                        active: members.binary_search(&p.expert).is_ok(),
                        wins: entry.map(|e| e.wins),
                        profit: entry.map(|e| e.profit),
                        investment: entry.map(|e| e.investment),
                    }
                })
                .collect(),
            input_skipped: 0,
            baselines: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedReport {
    pub rule: String,
    pub fraud_rate: f64,
    pub expert: u32,
    pub active: bool,
    pub wins: Option<u64>,
    pub profit: Option<u64>,
    pub investment: Option<f64>,
}

/// Best single-word detector at comparable precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub candidates: usize,
    /// Baselines count as comparable when their precision is at least
    /// this run's precision minus `precision_band`.
    pub precision_band: f64,
    pub best_word: Option<String>,
    pub best_recall: f64,
    pub best_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub m: usize,
    pub theta: f64,
    /// Effective eviction probability (1 in halving mode).
    pub alpha: f64,
    pub c: f64,
    pub seed: u64,
    pub implication: Implication,
    pub events_processed: u64,
    pub alerts: u64,
    pub inspections: u64,
    pub inspection_fraction: f64,
    pub mistakes: u64,
    pub final_active_size: usize,
    /// `None` when some events arrived without a label.
    pub positives: Option<u64>,
    pub true_alerts: Option<u64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub throughput_events_per_second: f64,
    pub elapsed_seconds: f64,
    pub exhausted: bool,
    pub exhausted_at: Option<u64>,
    pub surviving_experts: Vec<String>,
    /// Deterministic bound on wrong votes; guaranteed only when the pool
    /// holds a perfect expert.
    pub mistake_bound: Option<u64>,
    pub within_mistake_bound: Option<bool>,
    pub total_recall: Option<bool>,
    /// Share of transactions matching a planted rule.
    pub optimal_inspection_fraction: Option<f64>,
    pub covered_frauds: u64,
    pub covered_frauds_alerted: u64,
    pub planted: Vec<PlantedReport>,
    /// Input records skipped as unreadable.
    pub input_skipped: u64,
    pub baselines: Option<BaselineSummary>,
}

impl RunReport {
    /// The report with wall-clock fields cleared, for equality checks.
    pub fn without_timing(&self) -> RunReport {
        RunReport { throughput_events_per_second: 0.0, elapsed_seconds: 0.0, ..self.clone() }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}
