//! Risk-factor auction.
//!
//! Every active expert bids a fraud probability on each transaction. The
//! highest bidder wins; a positive winning bid buys an inspection. On
//! settlement the winner pays its bid (investment `V`), collects one unit
//! (profit `P`) when the transaction was fraud, and goes bankrupt once
//! `V > P + c * sqrt(n * log2(m))` after `n` wins in a pool of `m`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::event::ExpertId;
use crate::experts::tree::TreeExpert;
use crate::transaction::Transaction;
use crate::{Error, Result};

/// Wins `n`, profit `P` and investment `V` of one expert.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub wins: u64,
    pub profit: u64,
    pub investment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionLedger {
    pub c: f64,
    pub pool_size: usize,
    pub entries: Vec<LedgerEntry>,
}

impl AuctionLedger {
    pub fn new(pool_size: usize, c: f64) -> Result<Self> {
        if pool_size == 0 {
            return Err(Error::EmptyPool);
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidAuctionConstant(c));
        }
        Ok(AuctionLedger { c, pool_size, entries: alloc::vec![LedgerEntry::default(); pool_size] })
    }

    pub fn entry(&self, id: ExpertId) -> Option<&LedgerEntry> {
        self.entries.get(id.index())
    }

    /// Largest investment `entry` may carry: `P + c * sqrt(n * log2(m))`.
    pub fn limit(&self, entry: &LedgerEntry) -> f64 {
        let slack = libm::sqrt(entry.wins as f64 * libm::log2(self.pool_size as f64));
        entry.profit as f64 + self.c * slack
    }

    pub fn is_solvent(&self, entry: &LedgerEntry) -> bool {
        entry.investment <= self.limit(entry)
    }

    /// Books the outcome on the winner's entry and reports whether the
    /// winner is still solvent.
    pub fn settle(&mut self, outcome: &AuctionOutcome, fraud: bool) -> Result<(LedgerEntry, f64, bool)> {
        let winner = match outcome.winner {
            Some(w) if outcome.inspect => w,
            _ => return Err(Error::NotInspected),
        };
        let entry = self.entries.get_mut(winner.index()).ok_or(Error::UnknownExpert(winner.0))?;
        entry.wins += 1;
        entry.investment += outcome.winning_bid;
        if fraud {
            entry.profit += 1;
        }
        let entry = *entry;
        let limit = self.limit(&entry);
        Ok((entry, limit, entry.investment <= limit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub event_id: u64,
    pub winner: Option<ExpertId>,
    pub winning_bid: f64,
    /// The winner staked a positive bid and the transaction goes to review.
    pub inspect: bool,
}

/// Highest bid wins; ties go to the lowest id.
pub fn run_auction(event_id: u64, bids: impl IntoIterator<Item = (ExpertId, f64)>) -> Result<AuctionOutcome> {
    let mut best: Option<(ExpertId, f64)> = None;
    for (id, bid) in bids {
        if !(0.0..=1.0).contains(&bid) {
            return Err(Error::InvalidBid(bid));
        }
        best = match best {
            Some((best_id, best_bid)) if best_bid > bid || (best_bid == bid && best_id < id) => best,
            _ => Some((id, bid)),
        };
    }
    let (winner, winning_bid) = best.ok_or(Error::PoolExhausted)?;
    Ok(AuctionOutcome { event_id, winner: Some(winner), winning_bid, inspect: winning_bid > 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub event_id: u64,
    pub winner: ExpertId,
    pub fraud: bool,
    pub entry: LedgerEntry,
    pub limit: f64,
    /// The winner went bankrupt and left the active set.
    pub evicted: bool,
    pub active_size: usize,
    pub exhausted: bool,
}

/// Serializable form of a [`RiskAuction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAuctionState {
    pub members: Vec<ExpertId>,
    pub ledger: AuctionLedger,
}

/// Active risk-factor experts and their ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskAuction {
    members: Vec<ExpertId>,
    ledger: AuctionLedger,
}

impl RiskAuction {
    pub fn new(pool_size: usize, c: f64) -> Result<Self> {
        let ledger = AuctionLedger::new(pool_size, c)?;
        let count = u32::try_from(pool_size).map_err(|_| Error::InvalidConfig("too many experts"))?;
        Ok(RiskAuction { members: (0..count).map(ExpertId).collect(), ledger })
    }

    pub fn members(&self) -> &[ExpertId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ledger(&self) -> &AuctionLedger {
        &self.ledger
    }

    /// Auction among the active experts of `experts` (indexed by id).
    /// Settlement waits for the inspection result.
    pub fn process_transaction(&self, experts: &[TreeExpert], tx: &Transaction) -> Result<AuctionOutcome> {
        if experts.len() != self.ledger.pool_size {
            return Err(Error::StateMismatch("expert pool size differs from the ledger"));
        }
        run_auction(tx.id, self.members.iter().map(|&id| (id, experts[id.index()].bid(tx))))
    }

    pub fn settle(&mut self, outcome: &AuctionOutcome, fraud: bool) -> Result<SettlementReport> {
        let winner = outcome.winner.ok_or(Error::NotInspected)?;
        let (entry, limit, solvent) = self.ledger.settle(outcome, fraud)?;
        let mut evicted = false;
        if !solvent {
            if let Ok(pos) = self.members.binary_search(&winner) {
                self.members.remove(pos);
                evicted = true;
            }
        }
        Ok(SettlementReport {
            event_id: outcome.event_id,
            winner,
            fraud,
            entry,
            limit,
            evicted,
            active_size: self.members.len(),
            exhausted: self.members.is_empty(),
        })
    }

    pub fn state(&self) -> RiskAuctionState {
        RiskAuctionState { members: self.members.clone(), ledger: self.ledger.clone() }
    }

    pub fn from_state(state: RiskAuctionState) -> Result<Self> {
        let ledger = state.ledger;
        if ledger.entries.len() != ledger.pool_size || ledger.pool_size == 0 {
            return Err(Error::StateMismatch("ledger must hold one entry per expert"));
        }
        if !(ledger.c > 0.0 && ledger.c.is_finite()) {
            return Err(Error::InvalidAuctionConstant(ledger.c));
        }
        let sorted = state.members.windows(2).all(|w| w[0] < w[1]);
        if !sorted || state.members.last().is_some_and(|id| id.index() >= ledger.pool_size) {
            return Err(Error::StateMismatch("members must be sorted, unique ids below the pool size"));
        }
        Ok(RiskAuction { members: state.members, ledger })
    }
}
