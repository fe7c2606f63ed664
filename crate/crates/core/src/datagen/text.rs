//! Short-message helpers and a seeded topic-mixture message generator.
//!
//! The generator stands in for a social-media sample when no real corpus
//! is at hand: messages mix common function words with words from one or
//! two latent topics. One topic is hostile and uses `hate` and `kill`
//! often, other topics use them rarely.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::{Error, Result};

pub const MAX_MESSAGE_CHARS: usize = 140;

/// Prefix of `text` holding at most `max_chars` characters.
pub fn truncate_chars(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((end, _)) => &text[..end],
        None => text,
    }
}

const FUNCTION_WORDS: [&str; 48] = [
    "i", "the", "to", "a", "you", "and", "is", "it", "my", "of", "in", "for", "me", "that", "on", "so", "this", "be",
    "just", "with", "at", "not", "are", "all", "have", "we", "but", "was", "like", "your", "get", "now", "up", "out",
    "what", "do", "one", "day", "no", "they", "go", "love", "know", "good", "can", "time", "new", "lol",
];

const HOSTILE_WORDS: [&str; 24] = [
    "hate",
    "kill",
    "die",
    "destroy",
    "enemy",
    "stupid",
    "idiots",
    "burn",
    "rage",
    "fight",
    "war",
    "traitors",
    "scum",
    "attack",
    "blood",
    "revenge",
    "crush",
    "trash",
    "angry",
    "disgusting",
    "worst",
    "shoot",
    "weapon",
    "threat",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageCorpusConfig {
    /// Number of generated content words shared by the topics.
    pub content_words: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    /// Share of messages whose main topic is the hostile one.
    pub hostile_share: f64,
    /// Chance per content slot of a normal message to draw `hate` or `kill`.
    pub stray_keyword_rate: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Chance that a token slot holds a function word.
    pub function_word_rate: f64,
    /// Chance that a content slot is drawn from a second topic.
    pub second_topic_rate: f64,
}

impl Default for MessageCorpusConfig {
    fn default() -> Self {
        MessageCorpusConfig {
            content_words: 3000,
            topics: 40,
            words_per_topic: 120,
            hostile_share: 0.08,
            stray_keyword_rate: 0.002,
            min_tokens: 5,
            max_tokens: 22,
            function_word_rate: 0.45,
            second_topic_rate: 0.25,
        }
    }
}

impl MessageCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.topics < 2 || self.words_per_topic == 0 || self.content_words < self.words_per_topic {
            return Err(Error::InvalidConfig("corpus needs two topics and enough content words"));
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(Error::InvalidConfig("token range must be non-empty and start above zero"));
        }
        let rates = [self.hostile_share, self.stray_keyword_rate, self.function_word_rate, self.second_topic_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidConfig("corpus rates must lie in [0, 1]"));
        }
        Ok(())
    }
}

struct Topic {
    words: Vec<usize>,
    weights: WeightedIndex<f64>,
}

/// Endless seeded source of messages of at most 140 characters.
pub struct MessageGenerator {
    config: MessageCorpusConfig,
    lexicon: Vec<String>,
    topics: Vec<Topic>,
    function_weights: WeightedIndex<f64>,
    hostile_keywords: [usize; 2],
    rng: SeededRng,
}

fn zipf_weights(n: usize) -> Vec<f64> {
    (1..=n).map(|rank| 1.0 / rank as f64).collect()
}

fn pseudo_word(rng: &mut SeededRng) -> String {
    const ONSETS: [&str; 20] =
        ["b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "st", "br"];
    const VOWELS: [&str; 7] = ["a", "e", "i", "o", "u", "ai", "ou"];
    let syllables = rng.random_range(2..=3);
    let mut word = String::new();
    for _ in 0..syllables {
        word.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
        word.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
    }
    if rng.random_bool(0.4) {
        word.push_str(ONSETS[rng.random_range(0..12)]);
    }
    word
}

impl MessageGenerator {
    pub fn new(config: MessageCorpusConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(seed);

        let reserved: BTreeSet<&str> = FUNCTION_WORDS.iter().chain(HOSTILE_WORDS.iter()).copied().collect();
        let mut seen = BTreeSet::new();
        let mut lexicon: Vec<String> = HOSTILE_WORDS.iter().map(|w| String::from(*w)).collect();
        while lexicon.len() < HOSTILE_WORDS.len() + config.content_words {
            let word = pseudo_word(&mut rng);
            if !reserved.contains(word.as_str()) && seen.insert(word.clone()) {
                lexicon.push(word);
            }
        }

        let invalid = |_| Error::InvalidConfig("topic weights");
        let mut topics = Vec::with_capacity(config.topics);
        // topic 0 is hostile: its own words first, then shared content
        let mut hostile: Vec<usize> = (0..HOSTILE_WORDS.len()).collect();
        let shared = HOSTILE_WORDS.len()..lexicon.len();
        while hostile.len() < config.words_per_topic {
            hostile.push(rng.random_range(shared.clone()));
        }
        let weights = WeightedIndex::new(zipf_weights(hostile.len())).map_err(invalid)?;
        topics.push(Topic { words: hostile, weights });
        for _ in 1..config.topics {
            let words: Vec<usize> = rand::seq::index::sample(&mut rng, config.content_words, config.words_per_topic)
                .into_iter()
                .map(|i| i + HOSTILE_WORDS.len())
                .collect();
            let weights = WeightedIndex::new(zipf_weights(words.len())).map_err(invalid)?;
            topics.push(Topic { words, weights });
        }

        Ok(MessageGenerator {
            function_weights: WeightedIndex::new(zipf_weights(FUNCTION_WORDS.len())).map_err(invalid)?,
            hostile_keywords: [0, 1],
            config,
            lexicon,
            topics,
            rng,
        })
    }

    fn content_word(&mut self, topic: usize) -> usize {
        let topic = &self.topics[topic];
        topic.words[topic.weights.sample(&mut self.rng)]
    }

    pub fn next_message(&mut self) -> String {
        let rng = &mut self.rng;
        let hostile = rng.random_bool(self.config.hostile_share);
        let main = if hostile { 0 } else { rng.random_range(1..self.config.topics) };
        let second = rng.random_range(1..self.config.topics);
        let len = rng.random_range(self.config.min_tokens..=self.config.max_tokens);

        let mut message = String::new();
        for slot in 0..len {
            let word: &str = if self.rng.random_bool(self.config.function_word_rate) {
                FUNCTION_WORDS[self.function_weights.sample(&mut self.rng)]
            } else if !hostile && self.rng.random_bool(self.config.stray_keyword_rate) {
                let k = self.hostile_keywords[self.rng.random_range(0..2)];
                &self.lexicon[k]
            } else {
                let topic = if self.rng.random_bool(self.config.second_topic_rate) { second } else { main };
                let w = self.content_word(topic);
                &self.lexicon[w]
            };
            if slot > 0 {
                message.push(' ');
            }
            message.push_str(word);
        }
        if self.rng.random_bool(0.3) {
            message.push(if self.rng.random_bool(0.5) { '!' } else { '?' });
        }
        String::from(truncate_chars(&message, MAX_MESSAGE_CHARS))
    }
}

impl Iterator for MessageGenerator {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        Some(self.next_message())
    }
}
