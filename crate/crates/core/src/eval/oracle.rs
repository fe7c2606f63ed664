use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::event::{Event, Judgement, JudgementSource, Payload};
use crate::experts::text::tokenize;
use crate::{Error, Result};

/// Judges a message suspicious iff one of its tokens is a keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordOracle {
    keywords: BTreeSet<String>,
}

impl Default for KeywordOracle {
    fn default() -> Self {
        KeywordOracle::new(["hate", "kill"])
    }
}

impl KeywordOracle {
    /// Keywords are lowercased to match the tokenizer.
    pub fn new<I, S>(keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        KeywordOracle { keywords: keywords.into_iter().map(|k| k.as_ref().to_lowercase()).collect() }
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }

    pub fn is_suspicious(&self, message: &str) -> bool {
        tokenize(message).any(|token| self.keywords.contains(&token))
    }
}

/// Source of automatic judgements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Oracle {
    Keyword {
        keywords: Vec<String>,
    },
    /// Reads the ground-truth label carried by the event.
    Truth,
}

impl Oracle {
    pub fn keyword(oracle: &KeywordOracle) -> Self {
        Oracle::Keyword { keywords: oracle.keywords().map(String::from).collect() }
    }

    pub fn label(&self, event: &Event) -> Result<bool> {
        match self {
            Oracle::Keyword { keywords } => match &event.payload {
                Payload::Text(text) => {
                    Ok(tokenize(text).any(|token| keywords.iter().any(|k| k.eq_ignore_ascii_case(&token))))
                }
                Payload::Transaction(_) => Err(Error::PayloadMismatch { expected: "text message" }),
            },
            Oracle::Truth => event.truth.ok_or(Error::PayloadMismatch { expected: "ground-truth label" }),
        }
    }

    pub fn judge(&self, event: &Event) -> Result<Judgement> {
        Ok(Judgement { event_id: event.id, suspicious: self.label(event)?, source: JudgementSource::Oracle })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transaction::{AgeGroup, Country, Customer, Transaction};

    fn judge(text: &str) -> bool {
        Oracle::keyword(&KeywordOracle::default()).judge(&Event::text(1, text)).unwrap().suspicious
    }

    #[test]
    fn keyword_rule() {
        assert!(judge("I hate mondays"));
        assert!(!judge("lovely day"));
        assert!(!judge("KILLER deal"));
        assert!(judge("KILL the lights"));
        assert!(KeywordOracle::default().is_suspicious("so much Hate."));
    }

    #[test]
    fn payload_mismatch() {
        let customer = Customer {
            country: Country::from_code(b"DE"),
            pep: false,
            legal: false,
            age_group: AgeGroup::new(0).unwrap(),
            children: false,
            employed: false,
        };
        let tx = Transaction { id: 3, sender: customer, receiver: customer, amount: 1.0, fraud: true };
        let event = Event::transaction(tx);
        assert!(Oracle::keyword(&KeywordOracle::default()).judge(&event).is_err());
        let judgement = Oracle::Truth.judge(&event).unwrap();
        assert!(judgement.suspicious);
        assert_eq!(judgement.source, JudgementSource::Oracle);
        assert!(Oracle::Truth.judge(&Event::text(1, "hate")).is_err());
    }
}
