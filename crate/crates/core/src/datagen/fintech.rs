//! Synthetic retail-banking population and transaction stream with planted
//! fraud rules.

use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::transaction::{AgeGroup, Country, Customer, Transaction};
use crate::{Error, Result};

/// Residence countries and their population shares.
///
/// LV, DE, BE and IT are sized so that LV→DE and BE→IT transfers occur
/// about 49 and 506 times per million transactions. With the default rules
/// that is about 5 + 25 = 30 frauds per million.
pub const DEFAULT_COUNTRIES: [([u8; 2], f64); 20] = [
    (*b"GB", 0.120),
    (*b"FR", 0.110),
    (*b"ES", 0.090),
    (*b"NL", 0.080),
    (*b"PL", 0.075),
    (*b"SE", 0.065),
    (*b"US", 0.060),
    (*b"CH", 0.055),
    (*b"AT", 0.050),
    (*b"DK", 0.045),
    (*b"NO", 0.040),
    (*b"FI", 0.035),
    (*b"IE", 0.030),
    (*b"PT", 0.030),
    (*b"RO", 0.030),
    (*b"DZ", 0.026),
    (*b"IT", 0.023),
    (*b"BE", 0.022),
    (*b"LV", 0.007),
    (*b"DE", 0.007),
];

/// A country pair whose transfers are fraudulent at `fraud_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedRule {
    pub sender_country: Country,
    pub receiver_country: Country,
    pub fraud_rate: f64,
}

impl PlantedRule {
    pub fn new(sender: &str, receiver: &str, fraud_rate: f64) -> Result<Self> {
        let rule = PlantedRule {
            sender_country: Country::parse(sender)?,
            receiver_country: Country::parse(receiver)?,
            fraud_rate,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fraud_rate > 0.0 && self.fraud_rate <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidFraudRate(self.fraud_rate))
        }
    }

    pub fn matches(&self, sender: &Customer, receiver: &Customer) -> bool {
        sender.country == self.sender_country && receiver.country == self.receiver_country
    }
}

/// LV→DE at 10% and BE→IT at 5%.
pub fn default_rules() -> Vec<PlantedRule> {
    alloc::vec![
        PlantedRule {
            sender_country: Country::from_code(b"LV"),
            receiver_country: Country::from_code(b"DE"),
            fraud_rate: 0.10
        },
        PlantedRule {
            sender_country: Country::from_code(b"BE"),
            receiver_country: Country::from_code(b"IT"),
            fraud_rate: 0.05
        },
    ]
}

/// Marginal distributions of the customer population and the amount law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FintechConfig {
    pub countries: Vec<(Country, f64)>,
    pub pep_rate: f64,
    pub legal_rate: f64,
    pub age_weights: [f64; AgeGroup::COUNT],
    pub children_rate: f64,
    pub employed_rate: f64,
    pub amount_median: f64,
    /// Standard deviation of the log-amount.
    pub amount_sigma: f64,
}

impl Default for FintechConfig {
    fn default() -> Self {
        FintechConfig {
            countries: DEFAULT_COUNTRIES.iter().map(|(code, w)| (Country::from_code(code), *w)).collect(),
            pep_rate: 0.5,
            legal_rate: 0.5,
            age_weights: [1.0; AgeGroup::COUNT],
            children_rate: 0.5,
            employed_rate: 0.5,
            amount_median: 100.0,
            amount_sigma: 0.8,
        }
    }
}

impl FintechConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.pep_rate, self.legal_rate, self.children_rate, self.employed_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidConfig("customer rates must lie in [0, 1]"));
        }
        if !(self.amount_median > 0.0 && self.amount_sigma >= 0.0) {
            return Err(Error::InvalidConfig("amount median must be positive and sigma non-negative"));
        }
        Ok(())
    }

    pub fn country_codes(&self) -> Vec<Country> {
        self.countries.iter().map(|(c, _)| *c).collect()
    }
}

pub fn generate_population(count: usize, config: &FintechConfig, seed: u64) -> Result<Vec<Customer>> {
    if count < 2 {
        return Err(Error::PopulationTooSmall(count));
    }
    config.validate()?;
    let invalid = |_| Error::InvalidConfig("weights must be non-negative with a positive sum");
    let countries = WeightedIndex::new(config.countries.iter().map(|(_, w)| *w)).map_err(invalid)?;
    let ages = WeightedIndex::new(config.age_weights).map_err(invalid)?;
    let mut rng = SeededRng::new(seed);
    Ok((0..count)
        .map(|_| Customer {
            country: config.countries[countries.sample(&mut rng)].0,
            pep: rng.random_bool(config.pep_rate),
            legal: rng.random_bool(config.legal_rate),
            age_group: AgeGroup::new(ages.sample(&mut rng) as u8).expect("five age weights"),
            children: rng.random_bool(config.children_rate),
            employed: rng.random_bool(config.employed_rate),
        })
        .collect())
}

/// Lazily generated transactions; ids count up from zero.
pub struct TransactionStream<'a> {
    population: &'a [Customer],
    rules: Vec<PlantedRule>,
    amounts: LogNormal<f64>,
    rng: SeededRng,
    next_id: u64,
    remaining: u64,
}

impl Iterator for TransactionStream<'_> {
    type Item = Transaction;

    fn next(&mut self) -> Option<Transaction> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let n = self.population.len();
        let s = self.rng.random_range(0..n);
        // distinct receiver: draw from the other n - 1 customers
        let mut r = self.rng.random_range(0..n - 1);
        if r >= s {
            r += 1;
        }
        let (sender, receiver) = (self.population[s], self.population[r]);
        let amount = self.amounts.sample(&mut self.rng);
        let fraud = match self.rules.iter().find(|rule| rule.matches(&sender, &receiver)) {
            Some(rule) => self.rng.random_bool(rule.fraud_rate),
            None => false,
        };
        let id = self.next_id;
        self.next_id += 1;
        Some(Transaction { id, sender, receiver, amount, fraud })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Stream of `tx_count` transfers between distinct population members.
/// A transfer matching a rule is fraudulent with the rule's rate; nothing
/// else is ever fraudulent.
pub fn generate_stream<'a>(
    tx_count: u64,
    population: &'a [Customer],
    rules: &[PlantedRule],
    config: &FintechConfig,
    seed: u64,
) -> Result<TransactionStream<'a>> {
    if population.len() < 2 {
        return Err(Error::PopulationTooSmall(population.len()));
    }
    config.validate()?;
    for rule in rules {
        rule.validate()?;
    }
    let amounts = LogNormal::new(libm::log(config.amount_median), config.amount_sigma)
        .map_err(|_| Error::InvalidConfig("amount law"))?;
    Ok(TransactionStream {
        population,
        rules: rules.to_vec(),
        amounts,
        rng: SeededRng::new(seed),
        next_id: 0,
        remaining: tx_count,
    })
}

/// Fraction of transactions matching any rule: the inspection load of an
/// operator who knows the rules in advance.
pub fn rule_coverage<'t>(transactions: impl IntoIterator<Item = &'t Transaction>, rules: &[PlantedRule]) -> f64 {
    let (mut total, mut covered) = (0u64, 0u64);
    for tx in transactions {
        total += 1;
        if rules.iter().any(|r| r.matches(&tx.sender, &tx.receiver)) {
            covered += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn country_shares_sum_to_one() {
        let total: f64 = DEFAULT_COUNTRIES.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut codes: Vec<_> = DEFAULT_COUNTRIES.iter().map(|(c, _)| *c).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), 20);
    }

    #[test]
    fn population_is_seeded_and_covers_age_bands() {
        let config = FintechConfig::default();
        let a = generate_population(10_000, &config, 4).unwrap();
        assert_eq!(a, generate_population(10_000, &config, 4).unwrap());
        for band in 0..5 {
            assert!(a.iter().any(|c| c.age_group.index() == band));
        }
        let countries: alloc::collections::BTreeSet<_> = a.iter().map(|c| c.country).collect();
        assert_eq!(countries.len(), 20);
        assert_eq!(generate_population(1, &config, 0), Err(Error::PopulationTooSmall(1)));
    }

    #[test]
    fn no_rules_means_no_fraud() {
        let config = FintechConfig::default();
        let population = generate_population(1000, &config, 1).unwrap();
        let stream = generate_stream(20_000, &population, &[], &config, 2).unwrap();
        assert!(stream.into_iter().all(|tx| !tx.fraud));
    }

    #[test]
    fn fraud_only_on_rule_pairs() {
        let config = FintechConfig::default();
        let population = generate_population(5000, &config, 1).unwrap();
        let rules = [PlantedRule::new("GB", "FR", 0.5).unwrap()];
        let txs: Vec<_> = generate_stream(50_000, &population, &rules, &config, 9).unwrap().collect();
        assert!(txs.iter().all(|tx| !tx.fraud || rules[0].matches(&tx.sender, &tx.receiver)));
        assert!(txs.iter().any(|tx| tx.fraud));
        assert!(txs.iter().all(|tx| tx.amount > 0.0));
        assert!(txs.iter().enumerate().all(|(i, tx)| tx.id == i as u64));
    }

    #[test]
    fn rule_validation() {
        assert_eq!(PlantedRule::new("LV", "DE", 0.0), Err(Error::InvalidFraudRate(0.0)));
        assert!(PlantedRule::new("LV", "DE", 1.0).is_ok());
        assert!(PlantedRule::new("lv", "DE", 0.1).is_err());
    }
}
