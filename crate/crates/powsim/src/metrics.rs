//! Post-run analysis: winning-chain selection, reward accounting,
//! normalized reward, orphan rates, the analytic orphan bound, and the
//! short-term summary-timing rates.

use crate::dag::{BlockId, DagStore, GENESIS};
use crate::protocol::Protocol;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("chain has zero progress; normalized reward undefined")]
    ZeroProgress,
    #[error("no proof-of-work confirmed; orphan rate undefined")]
    NoConfirmedPow,
}

/// Best block over the global view under the protocol's preference.
/// Iteration in id order makes remaining ties fall to the block reified
/// first.
pub fn winning_chain(proto: &dyn Protocol, store: &DagStore) -> BlockId {
    let view = store.global();
    let mut best = GENESIS;
    for b in view.iter() {
        if !store.block(b).fields.summary {
            continue;
        }
        if proto.prefer(&view, None, best, b) {
            best = b;
        }
    }
    best
}

/// Accumulated rewards per miner along the ancestry of `tip`.
#[derive(Clone, Debug)]
pub struct RewardLedger {
    pub per_miner: Vec<f64>,
    pub basis: BlockId,
    pub progress: u64,
}

impl RewardLedger {
    pub fn total(&self) -> f64 {
        self.per_miner.iter().sum()
    }
}

pub fn accumulate_rewards(proto: &dyn Protocol, store: &DagStore, tip: BlockId) -> RewardLedger {
    debug_assert!(store.block(tip).fields.summary, "rewards accumulate along the summary chain");
    let view = store.global();
    let mut per_miner = vec![0.0; store.node_count()];
    let mut cur = tip;
    loop {
        for (miner, amount) in proto.block_rewards(&view, cur) {
            per_miner[miner as usize] += amount;
        }
        match view.last_summary_before(cur) {
            Ok(prev) => cur = prev,
            Err(_) => break, // reached the genesis
        }
    }
    RewardLedger {
        per_miner,
        basis: tip,
        progress: proto.progress(&store.block(tip).fields),
    }
}

/// Attacker (or any miner's) reward divided by the chain progress at the
/// ledger basis.
pub fn normalized_reward(ledger: &RewardLedger, miner: u32) -> Result<f64, MetricsError> {
    if ledger.progress == 0 {
        return Err(MetricsError::ZeroProgress);
    }
    Ok(ledger.per_miner[miner as usize] / ledger.progress as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrphanStats {
    pub included_pow: u64,
    pub orphaned_pow: u64,
}

impl OrphanStats {
    /// PoW solutions orphaned for every PoW solution confirmed.
    pub fn rate(&self) -> Result<f64, MetricsError> {
        if self.included_pow == 0 {
            return Err(MetricsError::NoConfirmedPow);
        }
        Ok(self.orphaned_pow as f64 / self.included_pow as f64)
    }
}

pub fn orphan_stats(store: &DagStore, tip: BlockId) -> OrphanStats {
    let view = store.global();
    let mut ancestry = view.ancestors(tip).expect("tip is reified");
    ancestry.insert(tip);
    let included_pow = ancestry.iter().filter(|&&b| store.block(b).pow).count() as u64;
    let total_pow = view.iter().filter(|&b| store.block(b).pow).count() as u64;
    OrphanStats { included_pow, orphaned_pow: total_pow - included_pow }
}

pub fn measured_orphan_rate(store: &DagStore, tip: BlockId) -> Result<f64, MetricsError> {
    orphan_stats(store, tip).rate()
}

/// Inputs of the analytic orphan-rate bound. `transmit` is the full-block
/// transmission time in seconds (bandwidth times block size, resolved).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrphanBoundInputs {
    pub tau0: f64,
    pub transmit: f64,
    /// Expected summary (or block) interval in seconds.
    pub interval: f64,
    pub k: u32,
}

/// Upper bound on the expected orphan rate: latency plus amortized
/// transmission, both relative to the summary interval.
pub fn orphan_bound(inputs: &OrphanBoundInputs) -> f64 {
    assert!(inputs.tau0 >= 0.0 && inputs.transmit >= 0.0);
    assert!(inputs.interval > 0.0 && inputs.k >= 1);
    inputs.tau0 / inputs.interval + inputs.transmit / (inputs.k as f64 * inputs.interval)
}

/// Short-term reward rates around a full subblock quorum, in units of
/// reward per expected subblock time: summarize immediately vs. delay for
/// one more subblock hoping for a fully linear tree. The relative gain of
/// delaying is 1/(k^2 - 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShortTermRates {
    pub summarize_now: f64,
    pub delay_one: f64,
    pub relative_gain: f64,
}

pub fn short_term_rates(k: u32) -> ShortTermRates {
    assert!(k >= 2);
    let k = k as f64;
    let summarize_now = (k - 1.0) / k;
    let delay_one = k / (k + 1.0);
    ShortTermRates {
        summarize_now,
        delay_one,
        relative_gain: delay_one / summarize_now - 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcoin::Bitcoin;
    use crate::dag::{BlockTemplate, ProtocolFields};
    use crate::tailstorm::{RewardScheme, Tailstorm};

    fn f(summary: bool, height: u32, depth: u32) -> ProtocolFields {
        ProtocolFields { summary, height, depth }
    }

    fn add_pow(
        store: &mut DagStore,
        parents: Vec<BlockId>,
        fields: ProtocolFields,
        miner: u32,
        hash: u64,
        pow: bool,
    ) -> BlockId {
        let id = store
            .reify(BlockTemplate { parents, fields }, miner, pow, 0.0, hash)
            .unwrap();
        for node in 0..store.node_count() as u32 {
            store.set_visible(id, node);
        }
        id
    }

    /// Subblocks carry a PoW, summaries and the genesis do not; bitcoin
    /// chain tests pass pow explicitly via `add_pow`.
    fn add(store: &mut DagStore, parents: Vec<BlockId>, fields: ProtocolFields, miner: u32, hash: u64) -> BlockId {
        add_pow(store, parents, fields, miner, hash, !fields.summary)
    }

    #[test]
    fn bound_grid_values() {
        let b = |interval, k| {
            orphan_bound(&OrphanBoundInputs { tau0: 5.0, transmit: 2.56, interval, k })
        };
        assert!((b(600.0, 1) - 0.0126).abs() < 1e-10);
        assert!((b(600.0, 5) - 0.0091866666).abs() < 1e-8);
        assert!((orphan_bound(&OrphanBoundInputs {
            tau0: 0.0,
            transmit: 0.0,
            interval: 600.0,
            k: 1
        }))
        .abs()
            < 1e-15);
    }

    #[test]
    fn short_term_rates_values() {
        let r = short_term_rates(3);
        assert!((r.summarize_now - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.delay_one - 3.0 / 4.0).abs() < 1e-12);
        assert!((r.relative_gain - 1.0 / 8.0).abs() < 1e-12);
        assert!((short_term_rates(2).relative_gain - 1.0 / 3.0).abs() < 1e-12);
        assert!((short_term_rates(100).relative_gain - 1.0 / 9999.0).abs() < 1e-15);
    }

    #[test]
    fn bitcoin_chain_ledger() {
        let mut store = DagStore::new(1);
        let mut tip = add(&mut store, vec![], f(true, 0, 0), 0, 0);
        for i in 1..=10 {
            tip = add_pow(&mut store, vec![tip], f(true, i, 0), 0, i as u64, true);
        }
        let proto = Bitcoin;
        assert_eq!(winning_chain(&proto, &store), tip);
        let ledger = accumulate_rewards(&proto, &store, tip);
        assert_eq!(ledger.per_miner, vec![10.0]);
        assert_eq!(ledger.progress, 10);
        assert_eq!(normalized_reward(&ledger, 0).unwrap(), 1.0);
    }

    #[test]
    fn winning_chain_takes_higher_fork() {
        let mut store = DagStore::new(1);
        let g = add(&mut store, vec![], f(true, 0, 0), 0, 0);
        let mut a = g;
        for i in 1..=5 {
            a = add_pow(&mut store, vec![a], f(true, i, 0), 0, 10 + i as u64, true);
        }
        let mut b = g;
        for i in 1..=4 {
            b = add_pow(&mut store, vec![b], f(true, i, 0), 0, 20 + i as u64, true);
        }
        assert_eq!(winning_chain(&Bitcoin, &store), a);
    }

    // Four-tree chain with depths 2, 3, 1, 2 pays 2/3, 1, 1/3, 2/3 per
    // subblock under the discount scheme with c = 1, k = 3.
    #[test]
    fn discount_rewards_along_chain() {
        let mut store = DagStore::new(2);
        let g = add(&mut store, vec![], f(true, 0, 0), 0, 0);
        // tree 1: depths 1,1,2 -> d = 2
        let w0 = add(&mut store, vec![g], f(false, 0, 1), 0, 10);
        let w1 = add(&mut store, vec![g], f(false, 0, 1), 1, 11);
        let w2 = add(&mut store, vec![w1], f(false, 0, 2), 0, 12);
        let s1 = add(&mut store, vec![w0, w2], f(true, 1, 0), 0, 13);
        // tree 2: linear -> d = 3
        let w3 = add(&mut store, vec![s1], f(false, 1, 1), 1, 20);
        let w4 = add(&mut store, vec![w3], f(false, 1, 2), 1, 21);
        let w5 = add(&mut store, vec![w4], f(false, 1, 3), 0, 22);
        let s2 = add(&mut store, vec![w5], f(true, 2, 0), 0, 23);
        // tree 3: star -> d = 1
        let w6 = add(&mut store, vec![s2], f(false, 2, 1), 0, 30);
        let w7 = add(&mut store, vec![s2], f(false, 2, 1), 1, 31);
        let w8 = add(&mut store, vec![s2], f(false, 2, 1), 0, 32);
        let s3 = add(&mut store, vec![w6, w7, w8], f(true, 3, 0), 0, 33);
        // tree 4: depths 1,2,2 -> d = 2
        let w9 = add(&mut store, vec![s3], f(false, 3, 1), 1, 40);
        let w10 = add(&mut store, vec![w9], f(false, 3, 2), 0, 41);
        let w11 = add(&mut store, vec![w9], f(false, 3, 2), 1, 42);
        let s4 = add(&mut store, vec![w10, w11], f(true, 4, 0), 0, 43);

        let proto = Tailstorm::new(3, 1.0, RewardScheme::Discount);
        assert_eq!(winning_chain(&proto, &store), s4);
        let ledger = accumulate_rewards(&proto, &store, s4);
        // per-tree payouts: tree1 2/3 each (miner0 x2, miner1 x1),
        // tree2 1 each (miner0 x1, miner1 x2), tree3 1/3 each (0 x2, 1 x1),
        // tree4 2/3 each (0 x1, 1 x2)
        let m0 = 2.0 * (2.0 / 3.0) + 1.0 + 2.0 * (1.0 / 3.0) + 2.0 / 3.0;
        let m1 = 2.0 / 3.0 + 2.0 + 1.0 / 3.0 + 2.0 * (2.0 / 3.0);
        assert!((ledger.per_miner[0] - m0).abs() < 1e-12);
        assert!((ledger.per_miner[1] - m1).abs() < 1e-12);
        // conservation: each summary mints c * maxdepth
        assert!((ledger.total() - (2.0 + 3.0 + 1.0 + 2.0)).abs() < 1e-12);
        assert_eq!(ledger.progress, 12);

        // constant scheme pays c per included subblock
        let tsc = Tailstorm::new(3, 1.0, RewardScheme::Constant);
        let ledger_c = accumulate_rewards(&tsc, &store, s4);
        assert!((ledger_c.total() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn orphan_stats_count_excluded_pow() {
        let mut store = DagStore::new(1);
        let g = add(&mut store, vec![], f(true, 0, 0), 0, 0);
        let a = add_pow(&mut store, vec![g], f(true, 1, 0), 0, 1, true);
        let b = add_pow(&mut store, vec![a], f(true, 2, 0), 0, 2, true);
        let _orphan = add_pow(&mut store, vec![g], f(true, 1, 0), 0, 3, true);
        let stats = orphan_stats(&store, b);
        assert_eq!(stats, OrphanStats { included_pow: 2, orphaned_pow: 1 });
        assert!((stats.rate().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_progress_is_an_error() {
        let mut store = DagStore::new(1);
        let g = add(&mut store, vec![], f(true, 0, 0), 0, 0);
        let ledger = accumulate_rewards(&Bitcoin, &store, g);
        assert_eq!(normalized_reward(&ledger, 0), Err(MetricsError::ZeroProgress));
    }
}
