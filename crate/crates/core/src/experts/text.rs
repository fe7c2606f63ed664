//! Bag-of-words text experts: random-projection sign detectors and
//! single-word baselines.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::event::ExpertId;
use crate::rng::SeededRng;
use crate::{Error, Result};

/// Lowercased tokens of `message`, split on every non-alphanumeric char.
pub fn tokenize(message: &str) -> impl Iterator<Item = String> + '_ {
    message.split(|c: char| !c.is_alphanumeric()).filter(|token| !token.is_empty()).map(|token| token.to_lowercase())
}

/// Ordered token list; position `i` is component `i` of a bag-of-words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct BowVocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl BowVocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig("vocabulary tokens must be distinct"));
            }
        }
        Ok(BowVocabulary { tokens, index })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| i as usize)
    }

    /// Dense count vector of `message` over this vocabulary.
    pub fn bow(&self, message: &str) -> Vec<u32> {
        let mut counts = alloc::vec![0; self.tokens.len()];
        for token in tokenize(message) {
            if let Some(i) = self.position(&token) {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Non-zero components of [`bow`](Self::bow), ordered by position.
    pub fn sparse_bow(&self, message: &str) -> SparseBow {
        let mut hits: Vec<u32> = tokenize(message).filter_map(|t| self.index.get(&t).copied()).collect();
        hits.sort_unstable();
        let mut entries: Vec<(u32, u32)> = Vec::with_capacity(hits.len());
        for i in hits {
            match entries.last_mut() {
                Some((last, count)) if *last == i => *count += 1,
                _ => entries.push((i, 1)),
            }
        }
        SparseBow(entries)
    }
}

impl TryFrom<Vec<String>> for BowVocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        BowVocabulary::new(tokens)
    }
}

impl From<BowVocabulary> for Vec<String> {
    fn from(vocab: BowVocabulary) -> Vec<String> {
        vocab.tokens
    }
}

/// `(component, count)` pairs of a bag-of-words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseBow(pub Vec<(u32, u32)>);

impl SparseBow {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The `size` most frequent tokens of the sample, ties broken
/// lexicographically.
pub fn build_vocabulary<I, S>(corpus_sample: I, size: usize) -> Result<BowVocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut messages = 0usize;
    for message in corpus_sample {
        messages += 1;
        for token in tokenize(message.as_ref()) {
            *counts.entry(token).or_default() += 1;
        }
    }
    if messages == 0 {
        return Err(Error::EmptyCorpus);
    }
    if counts.len() < size {
        return Err(Error::VocabularyTooSmall { requested: size, available: counts.len() });
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic and the sort is stable.
    ranked.sort_by_key(|&(_, count)| core::cmp::Reverse(count));
    ranked.truncate(size);
    BowVocabulary::new(ranked.into_iter().map(|(token, _)| token).collect())
}

/// Flags a message iff `weights · bow + bias > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionExpert {
    pub id: ExpertId,
    pub weights: Vec<f32>,
    pub bias: f32,
}

impl ProjectionExpert {
    pub fn score(&self, bow: &SparseBow) -> f64 {
        bow.0
            .iter()
            .fold(f64::from(self.bias), |acc, &(i, count)| acc + f64::from(self.weights[i as usize]) * f64::from(count))
    }

    pub fn flags(&self, bow: &SparseBow) -> bool {
        self.score(bow) > 0.0
    }
}

/// Shape of sampled projection experts.
///
/// Each weight is standard normal with probability `density` and zero
/// otherwise; the bias is normal with the given mean and deviation. A
/// negative mean bias makes an expert fire only when words it weighs
/// positively are present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub density: f64,
    pub bias_mean: f64,
    pub bias_sd: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig { density: 0.02, bias_mean: -0.75, bias_sd: 0.25 }
    }
}

impl ProjectionConfig {
    /// Dense weights and a standard normal bias.
    pub fn dense() -> Self {
        ProjectionConfig { density: 1.0, bias_mean: 0.0, bias_sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidConfig("projection density must lie in (0, 1]"));
        }
        if !(self.bias_mean.is_finite() && self.bias_sd >= 0.0 && self.bias_sd.is_finite()) {
            return Err(Error::InvalidConfig("projection bias must be finite with non-negative deviation"));
        }
        Ok(())
    }
}

/// `count` seeded experts over `vocab`.
pub fn sample_projection_experts(
    count: usize,
    vocab: &BowVocabulary,
    config: &ProjectionConfig,
    seed: u64,
) -> Result<Vec<ProjectionExpert>> {
    config.validate()?;
    let mut rng = SeededRng::new(seed);
    let dense = config.density >= 1.0;
    Ok((0..count)
        .map(|i| {
            let weights = (0..vocab.len())
                .map(|_| {
                    if dense || rng.random_bool(config.density) {
                        let w: f64 = StandardNormal.sample(&mut rng);
                        w as f32
                    } else {
                        0.0
                    }
                })
                .collect();
            let z: f64 = StandardNormal.sample(&mut rng);
            let bias = config.bias_mean + config.bias_sd * z;
            ProjectionExpert { id: ExpertId(i as u32), weights, bias: bias as f32 }
        })
        .collect())
}

/// Projection experts together with the vocabulary they read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPool {
    pub vocabulary: BowVocabulary,
    pub experts: Vec<ProjectionExpert>,
}

impl ProjectionPool {
    pub fn sample(vocabulary: BowVocabulary, count: usize, config: &ProjectionConfig, seed: u64) -> Result<Self> {
        let experts = sample_projection_experts(count, &vocabulary, config, seed)?;
        Ok(ProjectionPool { vocabulary, experts })
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.vocabulary.len();
        for (i, expert) in self.experts.iter().enumerate() {
            if expert.id.index() != i {
                return Err(Error::InvalidConfig("projection expert ids must equal their positions"));
            }
            if expert.weights.len() != dims {
                return Err(Error::InvalidConfig("projection weights must match the vocabulary size"));
            }
        }
        Ok(())
    }
}

/// Baseline detector: "this message contains `word`".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordDetector {
    pub word: String,
}

impl WordDetector {
    pub fn new(word: impl Into<String>) -> Self {
        WordDetector { word: word.into() }
    }

    pub fn flags(&self, message: &str) -> bool {
        tokenize(message).any(|token| token == self.word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn vocab(tokens: &[&str]) -> BowVocabulary {
        BowVocabulary::new(tokens.iter().map(|t| t.to_string()).collect()).unwrap()
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        let tokens: Vec<String> = tokenize("KILLER deal!! don't-stop 42x").collect();
        assert_eq!(tokens, ["killer", "deal", "don", "t", "stop", "42x"]);
        assert_eq!(tokenize("  ...  ").count(), 0);
    }

    #[test]
    fn vocabulary_by_frequency() {
        let corpus = ["a a b c", "a b a", "b a"];
        let v = build_vocabulary(corpus, 2).unwrap();
        assert_eq!(v.tokens(), ["a", "b"]);
    }

    #[test]
    fn vocabulary_ties_are_lexicographic() {
        let v = build_vocabulary(["zeta alpha mid", "mid"], 3).unwrap();
        assert_eq!(v.tokens(), ["mid", "alpha", "zeta"]);
    }

    #[test]
    fn vocabulary_errors() {
        assert_eq!(build_vocabulary(["a b"], 3), Err(Error::VocabularyTooSmall { requested: 3, available: 2 }));
        assert_eq!(build_vocabulary(Vec::<&str>::new(), 1), Err(Error::EmptyCorpus));
        assert!(BowVocabulary::new(vec!["x".into(), "x".into()]).is_err());
    }

    #[test]
    fn bag_of_words_counts() {
        let v = vocab(&["hate", "you", "day"]);
        assert_eq!(v.bow("hate hate you"), [2, 1, 0]);
        assert_eq!(v.bow(""), [0, 0, 0]);
        assert_eq!(v.bow("entirely unknown words"), [0, 0, 0]);
        assert_eq!(v.sparse_bow("you HATE hate"), SparseBow(vec![(0, 2), (1, 1)]));
        assert!(v.sparse_bow("nothing here").is_empty());
    }

    #[test]
    fn projection_sign() {
        let expert = ProjectionExpert { id: ExpertId(0), weights: vec![1.0, -2.0, 0.5], bias: -0.25 };
        let v = vocab(&["a", "b", "c"]);
        assert!(expert.flags(&v.sparse_bow("a")));
        assert!(!expert.flags(&v.sparse_bow("a b")));
        assert!(!expert.flags(&v.sparse_bow("")));
        assert_eq!(expert.score(&v.sparse_bow("c c")), 0.75);
    }

    #[test]
    fn projection_sampling_is_seeded() {
        let v = vocab(&["a", "b", "c", "d"]);
        let config = ProjectionConfig::dense();
        let a = sample_projection_experts(20, &v, &config, 7).unwrap();
        assert_eq!(a, sample_projection_experts(20, &v, &config, 7).unwrap());
        assert_ne!(a, sample_projection_experts(20, &v, &config, 8).unwrap());
        assert_eq!(a.len(), 20);
        assert!(a.iter().enumerate().all(|(i, e)| e.id == ExpertId(i as u32) && e.weights.len() == 4));
        assert!(a.iter().all(|e| e.weights.iter().all(|&w| w != 0.0)));
    }

    #[test]
    fn sparse_projections_zero_most_weights() {
        let tokens: Vec<String> = (0..200).map(|i| alloc::format!("w{i}")).collect();
        let v = BowVocabulary::new(tokens).unwrap();
        let config = ProjectionConfig { density: 0.05, bias_mean: -1.0, bias_sd: 0.0 };
        let experts = sample_projection_experts(100, &v, &config, 3).unwrap();
        let nonzero: usize = experts.iter().map(|e| e.weights.iter().filter(|&&w| w != 0.0).count()).sum();
        let share = nonzero as f64 / 20_000.0;
        assert!((share - 0.05).abs() < 0.01, "{share}");
        assert!(experts.iter().all(|e| e.bias == -1.0));
        assert!(experts.iter().all(|e| !e.flags(&v.sparse_bow(""))));
        let bad = ProjectionConfig { density: 0.0, ..config };
        assert!(sample_projection_experts(1, &v, &bad, 3).is_err());
    }

    #[test]
    fn word_detector_matches_whole_tokens() {
        let d = WordDetector::new("kill");
        assert!(d.flags("Kill it"));
        assert!(!d.flags("KILLER deal"));
    }
}
