use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::eval::oracle::KeywordOracle;
use crate::experts::text::{tokenize, BowVocabulary};
use crate::rng::SeededRng;
use crate::{Error, Result};

/// Precision and recall of the detector "message contains `word`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word: String,
    pub alerts: u64,
    pub true_positives: u64,
    pub positives: u64,
    /// `None` when the word never occurs.
    pub precision: Option<f64>,
    pub recall: f64,
}

pub fn score_single_word_baselines<S: AsRef<str>>(
    corpus: &[S],
    oracle: &KeywordOracle,
    candidate_words: &[String],
) -> Result<Vec<WordScore>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let words: Vec<String> = candidate_words.iter().map(|w| w.to_lowercase()).collect();
    let mut alerts = alloc::vec![0u64; words.len()];
    let mut hits = alloc::vec![0u64; words.len()];
    let mut positives = 0u64;
    for message in corpus {
        let tokens: BTreeSet<String> = tokenize(message.as_ref()).collect();
        let positive = oracle.keywords().any(|k| tokens.contains(k));
        positives += u64::from(positive);
        for (i, word) in words.iter().enumerate() {
            if tokens.contains(word) {
                alerts[i] += 1;
                hits[i] += u64::from(positive);
            }
        }
    }
    Ok(candidate_words
        .iter()
        .enumerate()
        .map(|(i, word)| WordScore {
            word: word.clone(),
            alerts: alerts[i],
            true_positives: hits[i],
            positives,
            precision: (alerts[i] > 0).then(|| hits[i] as f64 / alerts[i] as f64),
            recall: if positives == 0 { 0.0 } else { hits[i] as f64 / positives as f64 },
        })
        .collect())
}

/// `count` distinct vocabulary words drawn uniformly, skipping `exclude`.
pub fn sample_candidate_words(vocab: &BowVocabulary, count: usize, exclude: &[&str], seed: u64) -> Vec<String> {
    let eligible: Vec<&String> = vocab.tokens().iter().filter(|t| !exclude.contains(&t.as_str())).collect();
    let count = count.min(eligible.len());
    let mut rng = SeededRng::new(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, eligible.len(), count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| eligible[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn corpus() -> Vec<&'static str> {
        vec!["i hate this", "kill it now", "hate and kill", "a quiet day", "this day is fine", "no hate here"]
    }

    #[test]
    fn oracle_keywords_are_perfectly_precise() {
        let words = vec!["hate".to_string(), "kill".to_string()];
        let scores = score_single_word_baselines(&corpus(), &KeywordOracle::default(), &words).unwrap();
        // 4 positives: "hate" hits 3, "kill" hits 2
        assert_eq!(scores[0].positives, 4);
        assert_eq!(scores[0].precision, Some(1.0));
        assert_eq!(scores[0].recall, 0.75);
        assert_eq!(scores[1].precision, Some(1.0));
        assert!(scores[1].recall < 1.0);
    }

    #[test]
    fn absent_and_mixed_words() {
        let words = vec!["molotov".to_string(), "this".to_string()];
        let scores = score_single_word_baselines(&corpus(), &KeywordOracle::default(), &words).unwrap();
        assert_eq!(scores[0].alerts, 0);
        assert_eq!(scores[0].precision, None);
        assert_eq!(scores[0].recall, 0.0);
        assert_eq!(scores[1].precision, Some(0.5));
    }

    #[test]
    fn empty_corpus() {
        let empty: [&str; 0] = [];
        assert_eq!(score_single_word_baselines(&empty, &KeywordOracle::default(), &[]), Err(Error::EmptyCorpus));
    }

    #[test]
    fn candidates_skip_excluded_words() {
        let vocab =
            BowVocabulary::new(["a", "hate", "b", "kill", "c"].iter().map(|s| s.to_string()).collect()).unwrap();
        let words = sample_candidate_words(&vocab, 10, &["hate", "kill"], 1);
        assert_eq!(words, ["a", "b", "c"]);
        assert_eq!(sample_candidate_words(&vocab, 2, &[], 5), sample_candidate_words(&vocab, 2, &[], 5));
    }
}
