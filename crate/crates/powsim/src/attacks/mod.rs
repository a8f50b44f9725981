//! Protocol-generic attacker scaffolding: the restricted observation
//! space, the (withhold, extend) action pair, reference policies, and an
//! episode API for external policy search.

pub mod adapter;
pub mod episode;
pub mod policy;
pub mod search;

pub use adapter::AttackerState;
pub use episode::{Episode, StepOutcome};
pub use policy::{Action, ExtendMode, Policy, ReferencePolicy, ThresholdPolicy, Withhold};
pub use search::{threshold_search, SearchBudget, SearchResult};

use crate::dag::{BlockId, DagStore};
use crate::protocol::Protocol;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// What the attacker sees. Heights are relative to the best common
/// ancestor summary; counts and depths describe the confirming subblock
/// trees of the attacker's and the best defender's tip. The depth fields
/// stay 0 for protocols without subblock trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    /// Attacker's height advantage over the common ancestor.
    pub h_a: u32,
    /// Defenders' height advantage over the common ancestor.
    pub h_d: u32,
    /// Subblocks confirming the attacker's tip.
    pub s_a: u32,
    /// Largest attacker-only connected subset of those.
    pub s_a_excl: u32,
    /// Subblocks confirming the best defender tip.
    pub s_d: u32,
    pub d_a: u32,
    pub d_a_excl: u32,
    pub d_d: u32,
}

impl Observation {
    pub fn as_array(&self) -> [u32; 8] {
        [
            self.h_a,
            self.h_d,
            self.s_a,
            self.s_a_excl,
            self.s_d,
            self.d_a,
            self.d_a_excl,
            self.d_d,
        ]
    }
}

/// Best tip among the defenders (nodes 1..n) under the protocol's
/// objective preference. Equal-rank ties prefer a defender-mined block
/// over one the attacker minted (so a released attacker block racing a
/// defender block does not mask the defenders' own chain), then the
/// smallest id.
pub fn best_defender_tip(proto: &dyn Protocol, store: &DagStore, tips: &[BlockId]) -> BlockId {
    assert!(tips.len() >= 2, "no defenders");
    let view = store.global();
    let rank = |b: BlockId| (store.block(b).miner == 0, b);
    let mut best = tips[1];
    for &t in &tips[2..] {
        if proto.prefer(&view, None, best, t) {
            best = t;
        } else if !proto.prefer(&view, None, t, best) && rank(t) < rank(best) {
            best = t;
        }
    }
    best
}

fn chain_block_of(store: &DagStore, b: BlockId) -> BlockId {
    if store.block(b).fields.summary {
        b
    } else {
        store.global().last_summary_before(b).expect("subblocks have summary ancestors")
    }
}

/// Best summary among the common ancestors of `a` and `b`: the latest
/// block all nodes agree on.
pub fn common_summary(store: &DagStore, a: BlockId, b: BlockId) -> BlockId {
    let view = store.global();
    let mut x = chain_block_of(store, a);
    let mut y = chain_block_of(store, b);
    while store.block(x).fields.height > store.block(y).fields.height {
        x = view.last_summary_before(x).expect("summary chain reaches genesis");
    }
    while store.block(y).fields.height > store.block(x).fields.height {
        y = view.last_summary_before(y).expect("summary chain reaches genesis");
    }
    while x != y {
        x = view.last_summary_before(x).expect("summary chain reaches genesis");
        y = view.last_summary_before(y).expect("summary chain reaches genesis");
    }
    x
}

/// Full confirming subblock set of summary `b` in the global view.
pub fn confirming(store: &DagStore, b: BlockId) -> BTreeSet<BlockId> {
    store.global().confirming_subblocks(b).expect("block is reified")
}

/// Largest subset of `confirming(b)` that is attacker-mined and still
/// connected to `b`.
pub fn confirming_exclusive(store: &DagStore, b: BlockId, attacker: u32) -> BTreeSet<BlockId> {
    let view = store.global();
    let height = store.block(b).fields.height;
    let mut set = BTreeSet::new();
    let mut stack = vec![b];
    while let Some(x) = stack.pop() {
        for c in view.children(x) {
            let blk = store.block(c);
            if !blk.fields.summary
                && blk.fields.height == height
                && blk.miner == attacker
                && set.insert(c)
            {
                stack.push(c);
            }
        }
    }
    set
}

fn max_depth(store: &DagStore, set: &BTreeSet<BlockId>) -> u32 {
    set.iter().map(|&x| store.block(x).fields.depth).max().unwrap_or(0)
}

/// Pure function of the global view and the per-node tips; `b_a` is the
/// attacker's (possibly just-updated) preferred tip.
pub fn observe(
    proto: &dyn Protocol,
    store: &DagStore,
    tips: &[BlockId],
    b_a: BlockId,
) -> Observation {
    let b_d = best_defender_tip(proto, store, tips);
    let b_c = common_summary(store, b_a, b_d);
    let r_a = confirming(store, b_a);
    let r_a_excl = confirming_exclusive(store, b_a, 0);
    let r_d = confirming(store, b_d);
    let h_c = store.block(b_c).fields.height;
    Observation {
        h_a: store.block(b_a).fields.height - h_c,
        h_d: store.block(b_d).fields.height - h_c,
        s_a: r_a.len() as u32,
        s_a_excl: r_a_excl.len() as u32,
        s_d: r_d.len() as u32,
        d_a: max_depth(store, &r_a),
        d_a_excl: max_depth(store, &r_a_excl),
        d_d: max_depth(store, &r_d),
    }
}
