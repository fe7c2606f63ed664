//! Live review service: one task owns the runner and applies commands in
//! arrival order; producers and API handlers talk to it over channels.

use std::collections::BTreeMap;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use halfado_core::datagen::truncate_chars;
use halfado_core::{Event, Judgement, JudgementSource, Mode, Payload, Review};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot, watch};

use crate::documents::StateDocument;
use crate::runner::{RunReport, Runner};

pub const DEFAULT_QUEUE_CAPACITY: usize = 10_000;
const EXCERPT_CHARS: usize = 140;
const STATS_INTERVAL: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("review queue is full")]
    QueueFull,
    #[error("ingestion is paused")]
    Paused,
    #[error("no pending alert {0}")]
    UnknownAlert(u64),
    #[error("alert {0} was already judged")]
    AlreadyJudged(u64),
    #[error("engine: {0}")]
    Engine(String),
    #[error("service has stopped")]
    Stopped,
}

/// An alert waiting for a human judgement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingAlert {
    pub alert_id: u64,
    pub event_id: u64,
    pub excerpt: String,
    /// Flagging experts in vote modes.
    pub flaggers: Option<Vec<u32>>,
    pub winner: Option<u32>,
    pub bid: Option<f64>,
    pub enqueued_at_ms: u64,
}

/// Engine summary served by `GET /state`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub human: bool,
    pub paused: bool,
    pub stream_finished: bool,
    pub events_processed: u64,
    pub alerts: u64,
    pub inspections: u64,
    pub inspection_fraction: f64,
    pub pending: usize,
    pub queue_capacity: usize,
    pub initial_size: usize,
    pub active_size: usize,
    pub mistakes: u64,
    pub exhausted: bool,
    pub event_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedJudgement {
    pub alert_id: Option<u64>,
    pub event_id: u64,
    pub suspicious: bool,
    pub source: JudgementSource,
    pub evicted: Vec<u32>,
    pub active_size: usize,
    pub mistakes: u64,
}

/// Messages pushed on `WS /live`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LiveMessage {
    Stats { event_rate: f64, active_size: usize, pending: usize, events_processed: u64, mistakes: u64 },
    Alert(PendingAlert),
    Judgement(AppliedJudgement),
}

/// Ledger line of one auction expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub expert: u32,
    pub active: bool,
    pub wins: u64,
    pub profit: u64,
    pub investment: f64,
    pub limit: f64,
    pub description: String,
}

enum Command {
    Ingest(Event, oneshot::Sender<Result<Option<PendingAlert>, ServiceError>>),
    Judge { alert_id: u64, suspicious: bool, reply: oneshot::Sender<Result<Summary, ServiceError>> },
    Pending(oneshot::Sender<Vec<PendingAlert>>),
    Pause(oneshot::Sender<Summary>),
    Resume(oneshot::Sender<Summary>),
    Snapshot(oneshot::Sender<StateDocument>),
    Restore(Box<StateDocument>, oneshot::Sender<Result<Summary, ServiceError>>),
    Report(oneshot::Sender<RunReport>),
    Ledger(oneshot::Sender<Option<Vec<LedgerRow>>>),
    StreamFinished,
}

struct Pending {
    alert: PendingAlert,
    review: Review,
}

struct Owner {
    runner: Runner,
    human: bool,
    capacity: usize,
    paused: bool,
    stream_finished: bool,
    pending: BTreeMap<u64, Pending>,
    next_alert_id: u64,
    started: Instant,
    busy: Duration,
    last_tick: (Instant, u64),
    event_rate: f64,
    summary: watch::Sender<Summary>,
    live: broadcast::Sender<LiveMessage>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn excerpt(event: &Event) -> String {
    match &event.payload {
        Payload::Text(text) => truncate_chars(text, EXCERPT_CHARS).to_owned(),
        Payload::Transaction(tx) => {
            format!("{} -> {} amount {:.2}", tx.sender.country.as_str(), tx.receiver.country.as_str(), tx.amount)
        }
    }
}

impl Owner {
    fn summary(&self) -> Summary {
        let engine = self.runner.engine();
        let counts = self.runner.metrics().counts;
        Summary {
            mode: engine.config().mode.name().into(),
            human: self.human,
            paused: self.paused,
            stream_finished: self.stream_finished,
            events_processed: counts.events,
            alerts: counts.alerts,
            inspections: counts.inspections,
            inspection_fraction: counts.inspection_fraction(),
            pending: self.pending.len(),
            queue_capacity: self.capacity,
            initial_size: engine.pool().len(),
            active_size: engine.active_size(),
            mistakes: engine.mistakes(),
            exhausted: engine.is_exhausted(),
            event_rate: self.event_rate,
        }
    }

    fn publish(&self) -> Summary {
        let summary = self.summary();
        self.summary.send_replace(summary.clone());
        summary
    }

    fn ingest(&mut self, event: Event) -> Result<Option<PendingAlert>, ServiceError> {
        if self.paused {
            return Err(ServiceError::Paused);
        }
        if self.human && self.pending.len() >= self.capacity {
            return Err(ServiceError::QueueFull);
        }
        let started = Instant::now();
        let engine_err = |e: crate::runner::RunError| ServiceError::Engine(e.to_string());
        if !self.human {
            let decision = self.runner.step(&event).map_err(engine_err)?;
            self.busy += started.elapsed();
            if let Some(suspicious) = decision.judged_suspicious {
                let _ = self.live.send(LiveMessage::Judgement(AppliedJudgement {
                    alert_id: None,
                    event_id: event.id,
                    suspicious,
                    source: JudgementSource::Oracle,
                    evicted: Vec::new(),
                    active_size: decision.active_size,
                    mistakes: self.runner.engine().mistakes(),
                }));
            }
            return Ok(None);
        }
        let observation = self.runner.observe(&event).map_err(engine_err)?;
        self.busy += started.elapsed();
        let Some(review) = observation.review else { return Ok(None) };
        let alert_id = self.next_alert_id;
        self.next_alert_id += 1;
        let (flaggers, winner, bid) = match &review {
            Review::Vote(v) => (Some(v.flaggers.iter().map(|f| f.0).collect()), None, None),
            Review::Auction(o) => (None, o.winner.map(|w| w.0), Some(o.winning_bid)),
        };
        let alert = PendingAlert {
            alert_id,
            event_id: event.id,
            excerpt: excerpt(&event),
            flaggers,
            winner,
            bid,
            enqueued_at_ms: now_ms(),
        };
        self.pending.insert(alert_id, Pending { alert: alert.clone(), review });
        let _ = self.live.send(LiveMessage::Alert(alert.clone()));
        Ok(Some(alert))
    }

    fn judge(&mut self, alert_id: u64, suspicious: bool) -> Result<Summary, ServiceError> {
        let Some(pending) = self.pending.remove(&alert_id) else {
            return Err(if alert_id < self.next_alert_id {
                ServiceError::AlreadyJudged(alert_id)
            } else {
                ServiceError::UnknownAlert(alert_id)
            });
        };
        let event_id = pending.alert.event_id;
        let judgement = Judgement { event_id, suspicious, source: JudgementSource::Human };
        let evicted = match self.runner.apply(&pending.review, &judgement) {
            Ok(effect) => effect.evicted().iter().map(|id| id.0).collect(),
            Err(_) if self.runner.engine().is_exhausted() => Vec::new(),
            Err(e) => {
                self.pending.insert(alert_id, pending);
                return Err(ServiceError::Engine(e.to_string()));
            }
        };
        let _ = self.live.send(LiveMessage::Judgement(AppliedJudgement {
            alert_id: Some(alert_id),
            event_id,
            suspicious,
            source: JudgementSource::Human,
            evicted,
            active_size: self.runner.engine().active_size(),
            mistakes: self.runner.engine().mistakes(),
        }));
        Ok(self.publish())
    }

    fn ledger(&self) -> Option<Vec<LedgerRow>> {
        let engine = self.runner.engine();
        let ledger = engine.auction()?.ledger();
        let members = engine.members();
        Some(
            ledger
                .entries
                .iter()
                .enumerate()
                .filter_map(|(i, entry)| {
                    let id = halfado_core::ExpertId(i as u32);
                    let active = members.binary_search(&id).is_ok();
                    (active || entry.wins > 0).then(|| LedgerRow {
                        expert: id.0,
                        active,
                        wins: entry.wins,
                        profit: entry.profit,
                        investment: entry.investment,
                        limit: ledger.limit(entry),
                        description: engine.pool().describe(id),
                    })
                })
                .collect(),
        )
    }

    fn tick(&mut self) {
        let (at, events) = self.last_tick;
        let now = Instant::now();
        let processed = self.runner.metrics().counts.events;
        let seconds = now.duration_since(at).as_secs_f64();
        if seconds > 0.0 {
            self.event_rate = (processed - events) as f64 / seconds;
        }
        self.last_tick = (now, processed);
        let summary = self.publish();
        let _ = self.live.send(LiveMessage::Stats {
            event_rate: summary.event_rate,
            active_size: summary.active_size,
            pending: summary.pending,
            events_processed: summary.events_processed,
            mistakes: summary.mistakes,
        });
    }

    fn handle(&mut self, command: Command) {
        match command {
            Command::Ingest(event, reply) => {
                let result = self.ingest(event);
                self.publish();
                let _ = reply.send(result);
            }
            Command::Judge { alert_id, suspicious, reply } => {
                let _ = reply.send(self.judge(alert_id, suspicious));
            }
            Command::Pending(reply) => {
                let _ = reply.send(self.pending.values().map(|p| p.alert.clone()).collect());
            }
            Command::Pause(reply) => {
                self.paused = true;
                let _ = reply.send(self.publish());
            }
            Command::Resume(reply) => {
                self.paused = false;
                let _ = reply.send(self.publish());
            }
            Command::Snapshot(reply) => {
                let _ = reply.send(self.runner.snapshot());
            }
            Command::Restore(doc, reply) => {
                let pool = self.runner.engine().pool().clone();
                let oracle = self.runner.oracle().cloned();
                let rules = self.runner.planted().iter().map(|p| p.rule).collect();
                let result = match Runner::restore(*doc, pool, oracle, rules) {
                    Ok(runner) => {
                        self.runner = runner;
                        self.pending.clear();
                        Ok(self.publish())
                    }
                    Err(e) => Err(ServiceError::Engine(e.to_string())),
                };
                let _ = reply.send(result);
            }
            Command::Report(reply) => {
                let busy = if self.busy.is_zero() { self.started.elapsed() } else { self.busy };
                let _ = reply.send(self.runner.report(busy));
            }
            Command::Ledger(reply) => {
                let _ = reply.send(self.ledger());
            }
            Command::StreamFinished => {
                self.stream_finished = true;
                self.publish();
            }
        }
    }
}

/// Cloneable access to a running service.
#[derive(Clone)]
pub struct ServiceHandle {
    commands: mpsc::Sender<Command>,
    summary: watch::Receiver<Summary>,
    live: broadcast::Sender<LiveMessage>,
}

/// Starts the owner task. With an oracle on the runner alerts are judged
/// at once; without one they wait in the review queue.
pub fn spawn(runner: Runner, queue_capacity: usize) -> ServiceHandle {
    let human = runner.oracle().is_none();
    let (commands, mut inbox) = mpsc::channel(1024);
    let (live, _) = broadcast::channel(4096);
    let (summary_tx, summary) = watch::channel(Summary::default());
    let mut owner = Owner {
        runner,
        human,
        capacity: queue_capacity.max(1),
        paused: false,
        stream_finished: false,
        pending: BTreeMap::new(),
        next_alert_id: 0,
        started: Instant::now(),
        busy: Duration::ZERO,
        last_tick: (Instant::now(), 0),
        event_rate: 0.0,
        summary: summary_tx,
        live: live.clone(),
    };
    owner.publish();
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(STATS_INTERVAL);
        ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            tokio::select! {
                command = inbox.recv() => match command {
                    Some(command) => owner.handle(command),
                    None => break,
                },
                _ = ticker.tick() => owner.tick(),
            }
        }
    });
    ServiceHandle { commands, summary, live }
}

impl ServiceHandle {
    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, ServiceError> {
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).await.map_err(|_| ServiceError::Stopped)?;
        rx.await.map_err(|_| ServiceError::Stopped)
    }

    pub fn summary(&self) -> Summary {
        self.summary.borrow().clone()
    }

    /// Receiver that sees every published summary.
    pub fn watch(&self) -> watch::Receiver<Summary> {
        self.summary.clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<LiveMessage> {
        self.live.subscribe()
    }

    /// One attempt; `QueueFull` and `Paused` ask the producer to wait.
    pub async fn ingest(&self, event: Event) -> Result<Option<PendingAlert>, ServiceError> {
        self.ask(|tx| Command::Ingest(event, tx)).await?
    }

    /// Ingests, waiting out backpressure and pauses.
    pub async fn ingest_waiting(&self, event: Event) -> Result<Option<PendingAlert>, ServiceError> {
        let mut summary = self.summary.clone();
        loop {
            match self.ingest(event.clone()).await {
                Err(ServiceError::QueueFull | ServiceError::Paused) => {}
                other => return other,
            }
            loop {
                let ready = {
                    let s = summary.borrow_and_update();
                    !s.paused && (!s.human || s.pending < s.queue_capacity)
                };
                if ready {
                    break;
                }
                summary.changed().await.map_err(|_| ServiceError::Stopped)?;
            }
        }
    }

    /// Feeds a whole stream, then marks it finished.
    pub async fn feed<I, E>(&self, events: I) -> Result<u64, ServiceError>
    where
        I: IntoIterator<Item = Result<Event, E>>,
        E: std::fmt::Display,
    {
        let mut count = 0;
        for event in events {
            let event = event.map_err(|e| ServiceError::Engine(e.to_string()))?;
            self.ingest_waiting(event).await?;
            count += 1;
        }
        let _ = self.commands.send(Command::StreamFinished).await;
        Ok(count)
    }

    pub async fn submit_judgement(&self, alert_id: u64, suspicious: bool) -> Result<Summary, ServiceError> {
        self.ask(|reply| Command::Judge { alert_id, suspicious, reply }).await?
    }

    pub async fn pending(&self) -> Result<Vec<PendingAlert>, ServiceError> {
        self.ask(Command::Pending).await
    }

    pub async fn pause(&self) -> Result<Summary, ServiceError> {
        self.ask(Command::Pause).await
    }

    pub async fn resume(&self) -> Result<Summary, ServiceError> {
        self.ask(Command::Resume).await
    }

    pub async fn snapshot(&self) -> Result<StateDocument, ServiceError> {
        self.ask(Command::Snapshot).await
    }

    /// Replaces the engine state; pending alerts of the old state are dropped.
    pub async fn restore(&self, doc: StateDocument) -> Result<Summary, ServiceError> {
        self.ask(|tx| Command::Restore(Box::new(doc), tx)).await?
    }

    pub async fn report(&self) -> Result<RunReport, ServiceError> {
        self.ask(Command::Report).await
    }

    pub async fn ledger(&self) -> Result<Option<Vec<LedgerRow>>, ServiceError> {
        self.ask(Command::Ledger).await
    }

    pub fn mode(&self) -> Mode {
        match self.summary.borrow().mode.as_str() {
            "auction" => Mode::Auction,
            "agnostic" => Mode::Agnostic,
            _ => Mode::Halving,
        }
    }
}
