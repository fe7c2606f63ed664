use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::transaction::Transaction;

/// Index of an expert in the initial pool, stable for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpertId(pub u32);

impl ExpertId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ExpertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Text(String),
    Transaction(Transaction),
}

impl Payload {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Payload::Text(text) => Some(text),
            Payload::Transaction(_) => None,
        }
    }

    pub fn as_transaction(&self) -> Option<&Transaction> {
        match self {
            Payload::Transaction(tx) => Some(tx),
            Payload::Text(_) => None,
        }
    }
}

/// One stream item. `truth` is only present when replaying labelled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: u64,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<bool>,
}

impl Event {
    pub fn text(id: u64, text: impl Into<String>) -> Self {
        Event { id, payload: Payload::Text(text.into()), truth: None }
    }

    pub fn transaction(tx: Transaction) -> Self {
        Event { id: tx.id, truth: Some(tx.fraud), payload: Payload::Transaction(tx) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgementSource {
    Human,
    Oracle,
}

/// Verdict of an inspection. This is the only label signal the engine sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgement {
    pub event_id: u64,
    pub suspicious: bool,
    pub source: JudgementSource,
}
