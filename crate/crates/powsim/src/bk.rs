//! The parallel proof-of-work protocol with leader election.
//!
//! Subblocks (votes) reference the current summary directly and never
//! chain, so depth stays 0 throughout. A summary is only valid when
//! appended by the miner of the lowest-hash subblock it references;
//! preference ties break toward the smaller minimum parent hash.

use crate::dag::{BlockId, BlockTemplate, DagView, ProtocolFields};
use crate::protocol::{Protocol, UpdateOutcome};
use std::collections::BTreeSet;

pub struct Bk {
    pub k: u32,
}

impl Bk {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1, "bk requires k >= 1");
        Bk { k }
    }

    fn summarized(&self, view: &DagView, s: BlockId) -> BTreeSet<BlockId> {
        match view.last_summary_before(s) {
            Ok(prev) => view.subblocks_between(s, prev).unwrap_or_default(),
            Err(_) => BTreeSet::new(),
        }
    }

    fn lowest_hash(view: &DagView, set: &BTreeSet<BlockId>) -> Option<BlockId> {
        set.iter().copied().min_by_key(|&x| (view.block(x).hash_value, x.0))
    }

    fn min_parent_hash(view: &DagView, s: BlockId) -> u64 {
        view.parents(s)
            .iter()
            .map(|&p| view.block(p).hash_value)
            .min()
            .unwrap_or(u64::MAX)
    }

    /// Pick k subblocks: own votes first (they carry the node's reward),
    /// then foreign votes hashing above the node's smallest own vote so
    /// the node stays the leader of its own proposal, then the smallest
    /// of the rest. Without any own vote no selection can validate for
    /// this node; fall back to the smallest hashes.
    fn select(&self, view: &DagView, node: u32, candidates: &BTreeSet<BlockId>) -> Vec<BlockId> {
        let k = self.k as usize;
        let mut own: Vec<BlockId> = candidates
            .iter()
            .copied()
            .filter(|&x| view.block(x).miner == node)
            .collect();
        own.sort_by_key(|&x| (view.block(x).hash_value, x.0));
        if own.len() >= k {
            own.truncate(k);
            return own;
        }
        let own_min = own.first().map(|&x| view.block(x).hash_value);
        let mut foreign: Vec<BlockId> = candidates
            .iter()
            .copied()
            .filter(|&x| view.block(x).miner != node)
            .collect();
        foreign.sort_by_key(|&x| {
            let blk = view.block(x);
            let forfeits_lead = match own_min {
                Some(m) => blk.hash_value < m,
                None => false,
            };
            (forfeits_lead, blk.hash_value, x.0)
        });
        own.extend(foreign.into_iter().take(k - own.len()));
        own
    }
}

impl Protocol for Bk {
    fn name(&self) -> &'static str {
        "bk"
    }

    fn k(&self) -> u32 {
        self.k
    }

    fn root(&self) -> BlockTemplate {
        BlockTemplate {
            parents: vec![],
            fields: ProtocolFields { summary: true, height: 0, depth: 0 },
        }
    }

    fn validate(&self, view: &DagView, b: BlockId) -> bool {
        let blk = view.block(b);
        if blk.fields.summary {
            let Ok(prev) = view.last_summary_before(b) else { return false };
            let Ok(set) = view.subblocks_between(b, prev) else { return false };
            let Some(leader) = Self::lowest_hash(view, &set) else { return false };
            set.len() == self.k as usize
                && blk.fields.height == view.block(prev).fields.height + 1
                && blk.miner == view.block(leader).miner
        } else {
            if !blk.pow || blk.parents.len() != 1 {
                return false;
            }
            let parent = view.block(blk.parents[0]);
            parent.fields.summary && blk.fields.height == parent.fields.height
        }
    }

    fn update(&self, view: &DagView, node: u32, tip: BlockId, b: BlockId) -> UpdateOutcome {
        let mut pref = tip;
        let share = vec![b];
        let mut append = vec![];
        if view.block(b).fields.summary {
            if self.prefer(view, Some(node), pref, b) {
                pref = b;
            }
        } else {
            let p = view.last_summary_before(b).expect("valid subblock references a summary");
            if self.prefer(view, Some(node), pref, p) {
                pref = p;
            }
            let set = view.confirming_subblocks(p).expect("b is visible, so p is too");
            if set.len() >= self.k as usize {
                // every node attempts the append; validation drops all but
                // the leader's
                append.push(BlockTemplate {
                    parents: self.select(view, node, &set),
                    fields: ProtocolFields {
                        summary: true,
                        height: view.block(p).fields.height + 1,
                        depth: 0,
                    },
                });
            }
        }
        UpdateOutcome { tip: Some(pref), share, append }
    }

    fn extend(&self, view: &DagView, _node: u32, tip: BlockId) -> BlockTemplate {
        BlockTemplate {
            parents: vec![tip],
            fields: ProtocolFields {
                summary: false,
                height: view.block(tip).fields.height,
                depth: 0,
            },
        }
    }

    fn progress(&self, fields: &ProtocolFields) -> u64 {
        self.k as u64 * fields.height as u64 + if fields.summary { 0 } else { 1 }
    }

    fn prefer(
        &self,
        view: &DagView,
        _observer: Option<u32>,
        incumbent: BlockId,
        candidate: BlockId,
    ) -> bool {
        let hs = view.block(incumbent).fields.height;
        let hb = view.block(candidate).fields.height;
        if hb != hs {
            return hb > hs;
        }
        let ns = view.confirming_subblocks(incumbent).map(|t| t.len()).unwrap_or(0);
        let nb = view.confirming_subblocks(candidate).map(|t| t.len()).unwrap_or(0);
        if nb != ns {
            return nb > ns;
        }
        Self::min_parent_hash(view, candidate) < Self::min_parent_hash(view, incumbent)
    }

    fn block_rewards(&self, view: &DagView, b: BlockId) -> Vec<(u32, f64)> {
        self.summarized(view, b)
            .iter()
            .map(|&x| (view.block(x).miner, 1.0))
            .collect()
    }

    fn summary_over(
        &self,
        view: &DagView,
        node: u32,
        base: BlockId,
        candidates: &BTreeSet<BlockId>,
    ) -> Option<BlockTemplate> {
        if candidates.len() < self.k as usize {
            return None;
        }
        Some(BlockTemplate {
            parents: self.select(view, node, candidates),
            fields: ProtocolFields {
                summary: true,
                height: view.block(base).fields.height + 1,
                depth: 0,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::DagStore;

    fn setup(n: usize) -> (DagStore, BlockId) {
        let mut store = DagStore::new(n);
        let g = store.reify(Bk::new(2).root(), 0, false, 0.0, 0).unwrap();
        for node in 0..n as u32 {
            store.set_visible(g, node);
        }
        (store, g)
    }

    fn vote(store: &mut DagStore, s: BlockId, miner: u32, hash: u64) -> BlockId {
        let h = store.block(s).fields.height;
        let id = store
            .reify(
                BlockTemplate {
                    parents: vec![s],
                    fields: ProtocolFields { summary: false, height: h, depth: 0 },
                },
                miner,
                true,
                0.0,
                hash,
            )
            .unwrap();
        for node in 0..store.node_count() as u32 {
            store.set_visible(id, node);
        }
        id
    }

    fn summary(store: &mut DagStore, parents: Vec<BlockId>, height: u32, miner: u32, hash: u64) -> BlockId {
        let id = store
            .reify(
                BlockTemplate {
                    parents,
                    fields: ProtocolFields { summary: true, height, depth: 0 },
                },
                miner,
                false,
                0.0,
                hash,
            )
            .unwrap();
        for node in 0..store.node_count() as u32 {
            store.set_visible(id, node);
        }
        id
    }

    #[test]
    fn leader_rule_gates_summaries() {
        let (mut store, g) = setup(3);
        let proto = Bk::new(2);
        let v0 = vote(&mut store, g, 1, 50); // lowest hash, miner 1 leads
        let v1 = vote(&mut store, g, 2, 90);
        let good = summary(&mut store, vec![v0, v1], 1, 1, 7);
        assert!(proto.validate(&store.global(), good));
        let bad = summary(&mut store, vec![v0, v1], 1, 2, 8);
        assert!(!proto.validate(&store.global(), bad));
    }

    #[test]
    fn subblock_must_reference_a_summary() {
        let (mut store, g) = setup(1);
        let proto = Bk::new(2);
        let v0 = vote(&mut store, g, 0, 50);
        assert!(proto.validate(&store.global(), v0));
        // subblock chained on a subblock: same height, but the parent is
        // not a summary
        let chained = store
            .reify(
                BlockTemplate {
                    parents: vec![v0],
                    fields: ProtocolFields { summary: false, height: 0, depth: 0 },
                },
                0,
                true,
                0.0,
                60,
            )
            .unwrap();
        assert!(!proto.validate(&store.global(), chained));
    }

    #[test]
    fn preference_clauses() {
        let (mut store, g) = setup(2);
        let proto = Bk::new(2);
        let v0 = vote(&mut store, g, 0, 3);
        let v1 = vote(&mut store, g, 1, 7);
        let v2 = vote(&mut store, g, 0, 5);
        let v3 = vote(&mut store, g, 1, 9);
        let sa = summary(&mut store, vec![v0, v1], 1, 0, 100); // min parent hash 3
        let sb = summary(&mut store, vec![v2, v3], 1, 0, 101); // min parent hash 5
        // heights differ: higher wins
        assert!(proto.prefer(&store.global(), None, g, sa));
        // equal height and count: smaller min parent hash wins
        assert!(proto.prefer(&store.global(), None, sb, sa));
        assert!(!proto.prefer(&store.global(), None, sa, sb));
        // more confirming subblocks win
        vote(&mut store, sb, 1, 200);
        assert!(proto.prefer(&store.global(), None, sa, sb));
    }

    #[test]
    fn update_appends_at_quorum_and_shares_below() {
        let (mut store, g) = setup(2);
        let proto = Bk::new(2);
        let v0 = vote(&mut store, g, 0, 50);
        let out = proto.update(&store.view(0), 0, g, v0);
        assert_eq!(out.share, vec![v0]);
        assert!(out.append.is_empty());
        let v1 = vote(&mut store, g, 1, 40);
        let out = proto.update(&store.view(0), 0, g, v1);
        assert_eq!(out.append.len(), 1);
        assert_eq!(out.append[0].parents.len(), 2);
        assert_eq!(out.append[0].fields.height, 1);
    }

    #[test]
    fn progress_counts_summary_votes() {
        let proto = Bk::new(8);
        let f = |summary, height| ProtocolFields { summary, height, depth: 0 };
        assert_eq!(proto.progress(&f(true, 2)), 16);
        assert_eq!(proto.progress(&f(false, 2)), 17);
    }
}
