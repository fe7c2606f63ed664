//! Depth-2 decision trees that bid a fraud probability on transactions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::fintech::{PlantedRule, DEFAULT_COUNTRIES};
use crate::event::ExpertId;
use crate::rng::SeededRng;
use crate::transaction::{AgeGroup, Country, Party, Transaction};
use crate::{Error, Result};

/// A yes/no test on one transaction attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attribute", rename_all = "snake_case")]
pub enum AttributePredicate {
    Country { party: Party, code: Country },
    Pep { party: Party },
    Legal { party: Party },
    AgeGroup { party: Party, band: AgeGroup },
    Children { party: Party },
    Employed { party: Party },
    AmountAtLeast { threshold: f64 },
}

impl AttributePredicate {
    /// Both predicates read the same attribute of the same party.
    pub fn same_attribute(&self, other: &AttributePredicate) -> bool {
        use AttributePredicate as P;
        match (self, other) {
            (P::Country { party: a, .. }, P::Country { party: b, .. })
            | (P::Pep { party: a }, P::Pep { party: b })
            | (P::Legal { party: a }, P::Legal { party: b })
            | (P::AgeGroup { party: a, .. }, P::AgeGroup { party: b, .. })
            | (P::Children { party: a }, P::Children { party: b })
            | (P::Employed { party: a }, P::Employed { party: b }) => a == b,
            (P::AmountAtLeast { .. }, P::AmountAtLeast { .. }) => true,
            _ => false,
        }
    }

    pub fn test(&self, tx: &Transaction) -> bool {
        match *self {
            AttributePredicate::Country { party, code } => tx.party(party).country == code,
            AttributePredicate::Pep { party } => tx.party(party).pep,
            AttributePredicate::Legal { party } => tx.party(party).legal,
            AttributePredicate::AgeGroup { party, band } => tx.party(party).age_group == band,
            AttributePredicate::Children { party } => tx.party(party).children,
            AttributePredicate::Employed { party } => tx.party(party).employed,
            AttributePredicate::AmountAtLeast { threshold } => tx.amount >= threshold,
        }
    }
}

impl fmt::Display for AttributePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AttributePredicate::Country { party, code } => write!(f, "{}.country={}", party.name(), code),
            AttributePredicate::Pep { party } => write!(f, "{}.pep", party.name()),
            AttributePredicate::Legal { party } => write!(f, "{}.legal", party.name()),
            AttributePredicate::AgeGroup { party, band } => write!(f, "{}.age={}", party.name(), band.label()),
            AttributePredicate::Children { party } => write!(f, "{}.children", party.name()),
            AttributePredicate::Employed { party } => write!(f, "{}.employed", party.name()),
            AttributePredicate::AmountAtLeast { threshold } => write!(f, "amount>={threshold}"),
        }
    }
}

/// Second-level split with the risk of its two leaves, indexed by the
/// outcome of `test` (`[false, true]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub test: AttributePredicate,
    pub risk: [f64; 2],
}

impl Branch {
    fn risk_for(&self, tx: &Transaction) -> f64 {
        self.risk[usize::from(self.test.test(tx))]
    }
}

/// Risk-factor expert: routes a transaction through two tests to one of
/// four leaves and bids that leaf's fraud probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeExpert {
    pub id: ExpertId,
    pub root: AttributePredicate,
    /// Subtrees taken when `root` is `[false, true]`.
    pub branches: [Branch; 2],
}

impl TreeExpert {
    /// Encodes `rule`: the matching country pair bids the rule's rate,
    /// every other leaf bids zero.
    pub fn planted(id: ExpertId, rule: &PlantedRule) -> Self {
        let receiver = AttributePredicate::Country { party: Party::Receiver, code: rule.receiver_country };
        TreeExpert {
            id,
            root: AttributePredicate::Country { party: Party::Sender, code: rule.sender_country },
            branches: [
                Branch { test: receiver, risk: [0.0, 0.0] },
                Branch { test: receiver, risk: [0.0, rule.fraud_rate] },
            ],
        }
    }

    pub fn bid(&self, tx: &Transaction) -> f64 {
        self.branches[usize::from(self.root.test(tx))].risk_for(tx)
    }

    pub fn leaf_risks(&self) -> impl Iterator<Item = f64> + '_ {
        self.branches.iter().flat_map(|b| b.risk)
    }

    pub fn is_silent(&self) -> bool {
        self.leaf_risks().all(|r| r == 0.0)
    }

    /// Same tests and leaf risks, ignoring the id.
    pub fn same_rule(&self, other: &TreeExpert) -> bool {
        self.root == other.root && self.branches == other.branches
    }

    pub fn validate(&self) -> Result<()> {
        match self.leaf_risks().find(|r| !(0.0..=1.0).contains(r)) {
            Some(bad) => Err(Error::InvalidBid(bad)),
            None => Ok(()),
        }
    }

    pub fn describe(&self) -> String {
        let side = |b: &Branch| format!("({} ? {} : {})", b.test, b.risk[1], b.risk[0]);
        format!("{} ? {} : {}", self.root, side(&self.branches[1]), side(&self.branches[0]))
    }
}

/// How random trees are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSamplingConfig {
    /// Countries available to country predicates.
    pub countries: Vec<Country>,
    pub amount_thresholds: Vec<f64>,
    pub risk_values: Vec<f64>,
    /// Relative weight of each entry of `risk_values`. By default half the
    /// leaves are zero and the rest are weighted by squared risk: an
    /// overbidding leaf at risk `r` needs about `1 / r^2` wins to go
    /// bankrupt, so each risk level then costs about the same number of
    /// inspections.
    pub risk_weights: Vec<f64>,
    /// Redraw trees whose four leaves are all zero; such experts never bid.
    pub reject_silent: bool,
}

impl Default for TreeSamplingConfig {
    fn default() -> Self {
        TreeSamplingConfig {
            countries: DEFAULT_COUNTRIES.iter().map(|(code, _)| Country::from_code(code)).collect(),
            amount_thresholds: vec![50.0, 100.0, 200.0, 500.0, 1000.0],
            risk_values: vec![0.0, 0.01, 0.02, 0.03, 0.05, 0.1],
            risk_weights: vec![0.5, 0.0036, 0.0144, 0.0324, 0.09, 0.3596],
            reject_silent: true,
        }
    }
}

impl TreeSamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.countries.is_empty() || self.amount_thresholds.is_empty() {
            return Err(Error::InvalidConfig("tree sampling needs countries and amount thresholds"));
        }
        if self.risk_values.len() != self.risk_weights.len() || self.risk_values.is_empty() {
            return Err(Error::InvalidConfig("risk values and weights must pair up"));
        }
        if let Some(&bad) = self.risk_values.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidBid(bad));
        }
        if self.reject_silent && self.risk_values.iter().zip(&self.risk_weights).all(|(&r, &w)| r == 0.0 || w == 0.0) {
            return Err(Error::InvalidConfig("every tree would be silent"));
        }
        Ok(())
    }
}

struct TreeSampler<'a> {
    config: &'a TreeSamplingConfig,
    risk: WeightedIndex<f64>,
}

impl TreeSampler<'_> {
    const PREDICATE_KINDS: u32 = 13;

    fn predicate(&self, rng: &mut SeededRng) -> AttributePredicate {
        let kind = rng.random_range(0..Self::PREDICATE_KINDS);
        if kind == 12 {
            let thresholds = &self.config.amount_thresholds;
            return AttributePredicate::AmountAtLeast { threshold: thresholds[rng.random_range(0..thresholds.len())] };
        }
        let party = if kind % 2 == 0 { Party::Sender } else { Party::Receiver };
        match kind / 2 {
            0 => {
                let countries = &self.config.countries;
                AttributePredicate::Country { party, code: countries[rng.random_range(0..countries.len())] }
            }
            1 => AttributePredicate::Pep { party },
            2 => AttributePredicate::Legal { party },
            3 => {
                let band = AgeGroup::new(rng.random_range(0..AgeGroup::COUNT as u8)).expect("band in range");
                AttributePredicate::AgeGroup { party, band }
            }
            4 => AttributePredicate::Children { party },
            _ => AttributePredicate::Employed { party },
        }
    }

    fn branch(&self, root: &AttributePredicate, rng: &mut SeededRng) -> Branch {
        let test = loop {
            let candidate = self.predicate(rng);
            if !candidate.same_attribute(root) {
                break candidate;
            }
        };
        let mut leaf = || self.config.risk_values[self.risk.sample(rng)];
        let risk = [leaf(), leaf()];
        Branch { test, risk }
    }

    fn tree(&self, id: ExpertId, rng: &mut SeededRng) -> TreeExpert {
        loop {
            let root = self.predicate(rng);
            let branches = [self.branch(&root, rng), self.branch(&root, rng)];
            let tree = TreeExpert { id, root, branches };
            if !(self.config.reject_silent && tree.is_silent()) {
                return tree;
            }
        }
    }
}

/// `count` experts that include every planted one at a seeded position.
/// Ids equal positions in the returned list.
pub fn sample_tree_experts(
    count: usize,
    planted: &[TreeExpert],
    config: &TreeSamplingConfig,
    seed: u64,
) -> Result<Vec<TreeExpert>> {
    if planted.len() > count {
        return Err(Error::TooManyPlanted { planted: planted.len(), count });
    }
    config.validate()?;
    for expert in planted {
        expert.validate()?;
    }
    let risk = WeightedIndex::new(&config.risk_weights)
        .map_err(|_| Error::InvalidConfig("risk weights must be non-negative with a positive sum"))?;
    let sampler = TreeSampler { config, risk };
    let mut rng = SeededRng::new(seed);

    let positions = rand::seq::index::sample(&mut rng, count, planted.len());
    let mut slots: Vec<Option<&TreeExpert>> = vec![None; count];
    for (slot, expert) in positions.iter().zip(planted) {
        slots[slot] = Some(expert);
    }
    Ok(slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            let id = ExpertId(i as u32);
            match slot {
                Some(expert) => TreeExpert { id, ..expert.clone() },
                None => sampler.tree(id, &mut rng),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transaction::Customer;

    fn customer(code: &[u8; 2]) -> Customer {
        Customer {
            country: Country::from_code(code),
            pep: false,
            legal: false,
            age_group: AgeGroup::new(2).unwrap(),
            children: false,
            employed: true,
        }
    }

    fn tx(from: &[u8; 2], to: &[u8; 2]) -> Transaction {
        Transaction { id: 0, sender: customer(from), receiver: customer(to), amount: 100.0, fraud: false }
    }

    fn rule(from: &[u8; 2], to: &[u8; 2], rate: f64) -> PlantedRule {
        PlantedRule {
            sender_country: Country::from_code(from),
            receiver_country: Country::from_code(to),
            fraud_rate: rate,
        }
    }

    /// 3% of traffic from DZ to a non-legal receiver, 1% of traffic not
    /// from DZ to an unemployed receiver.
    fn example_tree() -> TreeExpert {
        TreeExpert {
            id: ExpertId(0),
            root: AttributePredicate::Country { party: Party::Sender, code: Country::from_code(b"DZ") },
            branches: [
                Branch { test: AttributePredicate::Employed { party: Party::Receiver }, risk: [0.01, 0.0] },
                Branch { test: AttributePredicate::Legal { party: Party::Receiver }, risk: [0.03, 0.0] },
            ],
        }
    }

    #[test]
    fn example_tree_routes_to_its_leaves() {
        let tree = example_tree();
        assert_eq!(tree.bid(&tx(b"DZ", b"FR")), 0.03);
        let mut legal = tx(b"DZ", b"FR");
        legal.receiver.legal = true;
        assert_eq!(tree.bid(&legal), 0.0);
        let mut unemployed = tx(b"DE", b"FR");
        unemployed.receiver.employed = false;
        assert_eq!(tree.bid(&unemployed), 0.01);
        assert_eq!(tree.bid(&tx(b"DE", b"FR")), 0.0);
    }

    #[test]
    fn planted_rule_bids_its_rate_only_on_the_pair() {
        let lv_de = TreeExpert::planted(ExpertId(0), &rule(b"LV", b"DE", 0.10));
        let be_it = TreeExpert::planted(ExpertId(1), &rule(b"BE", b"IT", 0.05));
        assert_eq!(lv_de.bid(&tx(b"LV", b"DE")), 0.10);
        assert_eq!(be_it.bid(&tx(b"BE", b"IT")), 0.05);
        for (from, to) in [(b"LV", b"IT"), (b"DE", b"LV"), (b"BE", b"DE"), (b"FR", b"IT")] {
            assert_eq!(lv_de.bid(&tx(from, to)), 0.0);
            assert_eq!(be_it.bid(&tx(from, to)), 0.0);
        }
    }

    #[test]
    fn amount_predicate_is_inclusive() {
        let p = AttributePredicate::AmountAtLeast { threshold: 100.0 };
        let mut t = tx(b"DE", b"FR");
        assert!(p.test(&t));
        t.amount = 99.99;
        assert!(!p.test(&t));
    }

    #[test]
    fn sampled_pool_contains_planted_rules() {
        let planted = [
            TreeExpert::planted(ExpertId(0), &rule(b"LV", b"DE", 0.10)),
            TreeExpert::planted(ExpertId(0), &rule(b"BE", b"IT", 0.05)),
        ];
        let config = TreeSamplingConfig::default();
        let pool = sample_tree_experts(1000, &planted, &config, 3).unwrap();
        assert_eq!(pool.len(), 1000);
        for p in &planted {
            assert_eq!(pool.iter().filter(|e| e.same_rule(p)).count(), 1);
        }
        assert!(pool.iter().enumerate().all(|(i, e)| e.id.index() == i));
        assert!(pool.iter().all(|e| !e.is_silent()));
        assert!(pool.iter().flat_map(|e| e.leaf_risks()).all(|r| config.risk_values.contains(&r)));
        assert_eq!(pool, sample_tree_experts(1000, &planted, &config, 3).unwrap());

        let two = sample_tree_experts(2, &planted, &config, 3).unwrap();
        assert!(two.iter().all(|e| planted.iter().any(|p| p.same_rule(e))));
        assert!(two[0].same_rule(&two[0].clone()) && !two[0].same_rule(&two[1]));
    }

    #[test]
    fn too_many_planted() {
        let planted = [TreeExpert::planted(ExpertId(0), &rule(b"LV", b"DE", 0.10))];
        let config = TreeSamplingConfig::default();
        assert_eq!(sample_tree_experts(0, &planted, &config, 0), Err(Error::TooManyPlanted { planted: 1, count: 0 }));
    }

    #[test]
    fn description_names_tests_and_risks() {
        let d = TreeExpert::planted(ExpertId(0), &rule(b"LV", b"DE", 0.1)).describe();
        assert_eq!(d, "sender.country=LV ? (receiver.country=DE ? 0.1 : 0) : (receiver.country=DE ? 0 : 0)");
    }
}
