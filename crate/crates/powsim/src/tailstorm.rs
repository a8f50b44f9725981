//! Tailstorm chain structure, honest node, greedy subblock selection,
//! and the depth-discounted reward scheme.
//!
//! Subblocks carry the proof-of-work and form a tree under each summary;
//! summaries are PoW-free, aggregate exactly k subblocks, and increment
//! the chain height. Rewards per included subblock scale with the depth
//! of the summarized tree, so withholding (which causes branching) costs
//! everyone in the tree. The `Constant` scheme pays exactly `c` per
//! subblock instead; selecting it gives the TS/const protocol variant.

use crate::dag::{BlockId, BlockTemplate, DagView, ProtocolFields};
use crate::protocol::{Protocol, UpdateOutcome};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardScheme {
    Discount,
    Constant,
}

pub struct Tailstorm {
    pub k: u32,
    pub c: f64,
    pub scheme: RewardScheme,
}

impl Tailstorm {
    pub fn new(k: u32, c: f64, scheme: RewardScheme) -> Self {
        assert!(k >= 2, "tailstorm requires k >= 2");
        assert!(c > 0.0, "reward cap must be positive");
        Tailstorm { k, c, scheme }
    }

    /// Subblocks summarized by `s` (the tree between `s` and the previous
    /// summary). Empty for the genesis.
    pub fn summarized_tree(&self, view: &DagView, s: BlockId) -> BTreeSet<BlockId> {
        match view.last_summary_before(s) {
            Ok(prev) => view.subblocks_between(s, prev).unwrap_or_default(),
            Err(_) => BTreeSet::new(),
        }
    }

    /// Reward paid to each subblock included in summary `s`.
    pub fn discount(&self, view: &DagView, s: BlockId) -> f64 {
        match self.scheme {
            RewardScheme::Constant => self.c,
            RewardScheme::Discount => {
                let tree = self.summarized_tree(view, s);
                let max_depth = tree.iter().map(|&x| view.block(x).fields.depth).max().unwrap_or(0);
                self.c / self.k as f64 * max_depth as f64
            }
        }
    }

    /// The node's own reward inside the tree summarized by `s`; the
    /// tie-break quantity of the preference order.
    fn own_reward(&self, view: &DagView, node: u32, s: BlockId) -> f64 {
        let tree = self.summarized_tree(view, s);
        if tree.is_empty() {
            return 0.0;
        }
        let per_block = self.discount(view, s);
        let own = tree.iter().filter(|&&x| view.block(x).miner == node).count();
        own as f64 * per_block
    }

    /// Greedy selection of k subblocks from candidate tree `s`,
    /// maximizing the selector's own subblock count. Returns the full
    /// selected set; `parents` of the summary template are its leaves.
    pub fn select_subblocks(
        &self,
        view: &DagView,
        node: u32,
        candidates: &BTreeSet<BlockId>,
    ) -> BTreeSet<BlockId> {
        let k = self.k as usize;
        assert!(candidates.len() >= k, "selection needs at least k candidates");
        let mut selected: BTreeSet<BlockId> = BTreeSet::new();
        while selected.len() < k {
            // B'_x: x plus its ancestors within the candidate set, minus
            // what is already selected.
            let mut best: Option<(u64, Reverse<usize>, u32, Reverse<u64>, Reverse<u32>)> = None;
            let mut best_add: Vec<BlockId> = Vec::new();
            for &x in candidates.iter() {
                if selected.contains(&x) {
                    continue;
                }
                let mut add = vec![x];
                let mut stack = vec![x];
                let mut seen = BTreeSet::from([x]);
                while let Some(y) = stack.pop() {
                    for &p in view.parents(y) {
                        if candidates.contains(&p) && !selected.contains(&p) && seen.insert(p) {
                            add.push(p);
                            stack.push(p);
                        }
                    }
                }
                if selected.len() + add.len() > k {
                    continue;
                }
                let reward = add.iter().filter(|&&y| view.block(y).miner == node).count() as u64;
                let blk = view.block(x);
                let key = (
                    reward,
                    Reverse(add.len()),
                    blk.fields.depth,
                    Reverse(blk.hash_value),
                    Reverse(x.0),
                );
                if best.map_or(true, |b| key > b) {
                    best = Some(key);
                    best_add = add;
                }
            }
            debug_assert!(!best_add.is_empty(), "candidate tree exhausted early");
            selected.extend(best_add);
        }
        selected
    }

    fn leaves(view: &DagView, selected: &BTreeSet<BlockId>) -> Vec<BlockId> {
        let mut has_child: BTreeSet<BlockId> = BTreeSet::new();
        for &x in selected {
            for &p in view.parents(x) {
                has_child.insert(p);
            }
        }
        selected.iter().copied().filter(|x| !has_child.contains(x)).collect()
    }

    fn summary_template(
        &self,
        view: &DagView,
        node: u32,
        base: BlockId,
        candidates: &BTreeSet<BlockId>,
    ) -> BlockTemplate {
        let selected = self.select_subblocks(view, node, candidates);
        let parents = Self::leaves(view, &selected);
        BlockTemplate {
            parents,
            fields: ProtocolFields {
                summary: true,
                height: view.block(base).fields.height + 1,
                depth: 0,
            },
        }
    }
}

impl Protocol for Tailstorm {
    fn name(&self) -> &'static str {
        match self.scheme {
            RewardScheme::Discount => "tailstorm",
            RewardScheme::Constant => "tsconst",
        }
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
            let Ok(tree) = view.subblocks_between(b, prev) else { return false };
            tree.len() == self.k as usize
                && blk.fields.depth == 0
                && blk.fields.height == view.block(prev).fields.height + 1
        } else {
            if !blk.pow || blk.parents.len() != 1 {
                return false;
            }
            let parent = view.block(blk.parents[0]);
            blk.fields.depth == parent.fields.depth + 1 && blk.fields.height == parent.fields.height
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
            let p = view.last_summary_before(b).expect("valid subblock has a summary ancestor");
            if self.prefer(view, Some(node), pref, p) {
                pref = p;
            }
            let tree = view.confirming_subblocks(p).expect("b is visible, so p is too");
            if tree.len() >= self.k as usize {
                append.push(self.summary_template(view, node, p, &tree));
            }
        }
        UpdateOutcome { tip: Some(pref), share, append }
    }

    fn extend(&self, view: &DagView, _node: u32, tip: BlockId) -> BlockTemplate {
        let tree = view.confirming_subblocks(tip).expect("tip is visible");
        // deepest subblock; ties break toward the smallest hash value
        let parent = tree
            .iter()
            .copied()
            .max_by_key(|&x| {
                let blk = view.block(x);
                (blk.fields.depth, Reverse(blk.hash_value), Reverse(x.0))
            })
            .unwrap_or(tip);
        let pf = view.block(parent).fields;
        BlockTemplate {
            parents: vec![parent],
            fields: ProtocolFields { summary: false, height: pf.height, depth: pf.depth + 1 },
        }
    }

    fn progress(&self, fields: &ProtocolFields) -> u64 {
        self.k as u64 * fields.height as u64 + fields.depth as u64
    }

    fn prefer(
        &self,
        view: &DagView,
        observer: Option<u32>,
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
        match observer {
            Some(node) => {
                self.own_reward(view, node, candidate) > self.own_reward(view, node, incumbent)
            }
            None => false,
        }
    }

    fn block_rewards(&self, view: &DagView, b: BlockId) -> Vec<(u32, f64)> {
        let tree = self.summarized_tree(view, b);
        if tree.is_empty() {
            return vec![];
        }
        let per_block = self.discount(view, b);
        tree.iter().map(|&x| (view.block(x).miner, per_block)).collect()
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
        Some(self.summary_template(view, node, base, candidates))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::DagStore;

    fn ts(k: u32) -> Tailstorm {
        Tailstorm::new(k, 1.0, RewardScheme::Discount)
    }

    fn setup(n: usize) -> (DagStore, BlockId) {
        let mut store = DagStore::new(n);
        let g = store.reify(ts(3).root(), 0, false, 0.0, 0).unwrap();
        for node in 0..n as u32 {
            store.set_visible(g, node);
        }
        (store, g)
    }

    fn sub(store: &mut DagStore, parent: BlockId, miner: u32, hash: u64) -> BlockId {
        let pf = store.block(parent).fields;
        let id = store
            .reify(
                BlockTemplate {
                    parents: vec![parent],
                    fields: ProtocolFields {
                        summary: false,
                        height: pf.height,
                        depth: pf.depth + 1,
                    },
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

    // Three-subblock tree (depths 1,1,2) under the genesis, like the
    // leftmost tree of a k=3 chain diagram.
    fn three_tree(store: &mut DagStore, g: BlockId) -> (BlockId, BlockId, BlockId) {
        let w0 = sub(store, g, 0, 10);
        let w1 = sub(store, g, 0, 11);
        let w2 = sub(store, w1, 0, 12);
        (w0, w1, w2)
    }

    #[test]
    fn validate_summary_over_three_tree() {
        let (mut store, g) = setup(1);
        let (w0, _w1, w2) = three_tree(&mut store, g);
        let s1 = summary(&mut store, vec![w0, w2], 1, 0, 20);
        assert!(ts(3).validate(&store.global(), s1));
    }

    #[test]
    fn validate_rejects_undersized_summary() {
        let (mut store, g) = setup(1);
        let w0 = sub(&mut store, g, 0, 10);
        let w1 = sub(&mut store, g, 0, 11);
        let s1 = summary(&mut store, vec![w0, w1], 1, 0, 20);
        assert!(!ts(3).validate(&store.global(), s1));
    }

    #[test]
    fn validate_subblock_height_and_depth() {
        let (mut store, g) = setup(1);
        let (w0, _w1, w2) = three_tree(&mut store, g);
        let s1 = summary(&mut store, vec![w0, w2], 1, 0, 20);
        // subblock on a height-1 summary is valid iff height 1, depth 1
        let good = sub(&mut store, s1, 0, 30);
        assert!(ts(3).validate(&store.global(), good));
        let bad = store
            .reify(
                BlockTemplate {
                    parents: vec![s1],
                    fields: ProtocolFields { summary: false, height: 2, depth: 1 },
                },
                0,
                true,
                0.0,
                31,
            )
            .unwrap();
        assert!(!ts(3).validate(&store.global(), bad));
    }

    #[test]
    fn preference_orders_by_height_then_count() {
        let (mut store, g) = setup(1);
        let proto = ts(3);
        let (w0, _w1, w2) = three_tree(&mut store, g);
        let s1 = summary(&mut store, vec![w0, w2], 1, 0, 20);
        // competing summary at the same height, over the same tree
        let s1b = summary(&mut store, vec![w0, w2], 1, 0, 21);
        // height decides
        assert!(proto.prefer(&store.global(), None, g, s1));
        assert!(!proto.prefer(&store.global(), None, s1, g));
        // equal height, equal confirming count: no strict preference
        assert!(!proto.prefer(&store.global(), None, s1, s1b));
        // give s1 a confirming subblock: more confirmations win
        sub(&mut store, s1, 0, 40);
        assert!(proto.prefer(&store.global(), None, s1b, s1));
    }

    // Two equal-height summaries over trees with equal size and depth but
    // different ownership; the observing node prefers the one paying it
    // more. Rewards cross-checked by brute force over the trees.
    #[test]
    fn preference_reward_clause() {
        let (mut store, g) = setup(2);
        let proto = ts(3);
        // tree A: two subblocks of node 0, one of node 1 (depths 1,1,2)
        let a0 = sub(&mut store, g, 0, 10);
        let a1 = sub(&mut store, g, 0, 11);
        let a2 = sub(&mut store, a1, 1, 12);
        // tree B: one subblock of node 0, two of node 1
        let b0 = sub(&mut store, g, 1, 13);
        let b1 = sub(&mut store, g, 1, 14);
        let b2 = sub(&mut store, b1, 0, 15);
        let sa = summary(&mut store, vec![a0, a2], 1, 0, 20);
        let sb = summary(&mut store, vec![b0, b2], 1, 1, 21);
        let view = store.global();
        // brute-force both sides: per-subblock reward is (c/k) * maxdepth
        let per = 1.0 / 3.0 * 2.0;
        let own0_a = view
            .subblocks_between(sa, g)
            .unwrap()
            .iter()
            .filter(|&&x| view.block(x).miner == 0)
            .count() as f64
            * per;
        let own0_b = view
            .subblocks_between(sb, g)
            .unwrap()
            .iter()
            .filter(|&&x| view.block(x).miner == 0)
            .count() as f64
            * per;
        assert!(own0_a > own0_b);
        assert!(proto.prefer(&view, Some(0), sb, sa));
        assert!(!proto.prefer(&view, Some(0), sa, sb));
        assert!(proto.prefer(&view, Some(1), sa, sb));
        // objective comparison is indifferent
        assert!(!proto.prefer(&view, None, sa, sb));
    }

    #[test]
    fn extend_on_empty_tree_starts_at_tip() {
        let (store, g) = setup(1);
        let t = ts(3).extend(&store.global(), 0, g);
        assert_eq!(t.parents, vec![g]);
        assert_eq!(t.fields.depth, 1);
        assert_eq!(t.fields.height, 0);
        assert!(!t.fields.summary);
    }

    #[test]
    fn extend_targets_maximum_depth() {
        let (mut store, g) = setup(1);
        let w0 = sub(&mut store, g, 0, 10);
        let w1 = sub(&mut store, w0, 0, 11);
        let w2 = sub(&mut store, w1, 0, 12); // depth 3
        let _stray = sub(&mut store, g, 0, 13); // depth 1 sibling
        let t = ts(4).extend(&store.global(), 0, g);
        assert_eq!(t.parents, vec![w2]);
        assert_eq!(t.fields.depth, 4);
    }

    // Two depth-2 leaves: the smaller hash wins, and either choice gives
    // the extender the same depth, checked both ways.
    #[test]
    fn extend_breaks_depth_ties_by_hash() {
        let (mut store, g) = setup(1);
        let w0 = sub(&mut store, g, 0, 10);
        let a = sub(&mut store, w0, 0, 77);
        let b = sub(&mut store, w0, 0, 33);
        let t = ts(4).extend(&store.global(), 0, g);
        assert_eq!(t.parents, vec![b]); // 33 < 77
        assert_eq!(t.fields.depth, 3);
        assert_eq!(store.block(a).fields.depth, store.block(b).fields.depth);
    }

    #[test]
    fn update_appends_summary_on_kth_subblock() {
        let (mut store, g) = setup(1);
        let proto = ts(3);
        let (_w0, _w1, w2) = three_tree(&mut store, g);
        let out = proto.update(&store.view(0), 0, g, w2);
        assert_eq!(out.share, vec![w2]);
        assert_eq!(out.append.len(), 1);
        let tmpl = &out.append[0];
        assert!(tmpl.fields.summary);
        assert_eq!(tmpl.fields.height, 1);
    }

    #[test]
    fn update_shares_subblock_without_tip_change() {
        let (mut store, g) = setup(1);
        let proto = ts(3);
        let (w0, _w1, w2) = three_tree(&mut store, g);
        let s1 = summary(&mut store, vec![w0, w2], 1, 0, 20);
        // a fresh subblock for the old (non-preferred) summary
        let stray = sub(&mut store, g, 0, 50);
        let out = proto.update(&store.view(0), 0, s1, stray);
        assert_eq!(out.tip, Some(s1));
        assert_eq!(out.share, vec![stray]);
    }

    #[test]
    fn update_keeps_tip_against_smaller_competitor() {
        let (mut store, g) = setup(1);
        let proto = ts(3);
        let (w0, _w1, w2) = three_tree(&mut store, g);
        let s1 = summary(&mut store, vec![w0, w2], 1, 0, 20);
        sub(&mut store, s1, 0, 40); // s1 now has one confirmation
        let s1b = summary(&mut store, vec![w0, w2], 1, 0, 21);
        let out = proto.update(&store.view(0), 0, s1, s1b);
        assert_eq!(out.tip, Some(s1));
    }

    #[test]
    fn selection_is_forced_when_tree_is_exact() {
        let (mut store, g) = setup(2);
        let proto = ts(3);
        let (w0, w1, w2) = three_tree(&mut store, g);
        let tree = store.global().confirming_subblocks(g).unwrap();
        let sel = proto.select_subblocks(&store.global(), 1, &tree);
        assert_eq!(sel, BTreeSet::from([w0, w1, w2]));
    }

    // Linear chain of four: only the first three form a feasible
    // connected subtree of size three containing the root child.
    #[test]
    fn selection_on_linear_chain_takes_prefix() {
        let (mut store, g) = setup(1);
        let proto = ts(3);
        let w0 = sub(&mut store, g, 0, 10);
        let w1 = sub(&mut store, w0, 0, 11);
        let w2 = sub(&mut store, w1, 0, 12);
        let _w3 = sub(&mut store, w2, 0, 13);
        let tree = store.global().confirming_subblocks(g).unwrap();
        let sel = proto.select_subblocks(&store.global(), 0, &tree);
        assert_eq!(sel, BTreeSet::from([w0, w1, w2]));
    }

    // Branches (own, own) and (foreign, foreign, foreign): the greedy
    // pick takes both own blocks plus one feasible foreign extension,
    // which matches the exhaustive own-count optimum.
    #[test]
    fn selection_prefers_own_blocks() {
        let (mut store, g) = setup(2);
        let proto = ts(3);
        let o0 = sub(&mut store, g, 0, 10);
        let o1 = sub(&mut store, o0, 0, 11);
        let f0 = sub(&mut store, g, 1, 12);
        let f1 = sub(&mut store, f0, 1, 13);
        let _f2 = sub(&mut store, f1, 1, 14);
        let tree = store.global().confirming_subblocks(g).unwrap();
        let sel = proto.select_subblocks(&store.global(), 0, &tree);
        assert!(sel.contains(&o0) && sel.contains(&o1));
        assert_eq!(sel.len(), 3);
        let own = sel.iter().filter(|&&x| store.block(x).miner == 0).count();
        assert_eq!(own, 2); // exhaustive optimum for this shape
    }

    #[test]
    fn discount_by_tree_depth() {
        let (mut store, g) = setup(1);
        let proto = ts(3);
        // depth-3 chain
        let w0 = sub(&mut store, g, 0, 10);
        let w1 = sub(&mut store, w0, 0, 11);
        let w2 = sub(&mut store, w1, 0, 12);
        let s_lin = summary(&mut store, vec![w2], 1, 0, 20);
        assert!((proto.discount(&store.global(), s_lin) - 1.0).abs() < 1e-12);
        // depth-1 star on s_lin
        let a = sub(&mut store, s_lin, 0, 30);
        let b = sub(&mut store, s_lin, 0, 31);
        let c = sub(&mut store, s_lin, 0, 32);
        let s_star = summary(&mut store, vec![a, b, c], 2, 0, 40);
        assert!((proto.discount(&store.global(), s_star) - 1.0 / 3.0).abs() < 1e-12);
        // depth-2 tree on s_star
        let x = sub(&mut store, s_star, 0, 50);
        let y = sub(&mut store, x, 0, 51);
        let z = sub(&mut store, s_star, 0, 52);
        let s_mid = summary(&mut store, vec![y, z], 3, 0, 60);
        assert!((proto.discount(&store.global(), s_mid) - 2.0 / 3.0).abs() < 1e-12);
        // constant scheme pays c regardless
        let tsc = Tailstorm::new(3, 1.0, RewardScheme::Constant);
        assert!((tsc.discount(&store.global(), s_star) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn progress_counts_pows() {
        let proto = Tailstorm::new(8, 1.0, RewardScheme::Discount);
        let f = |summary, height, depth| ProtocolFields { summary, height, depth };
        assert_eq!(proto.progress(&f(true, 0, 0)), 0);
        assert_eq!(proto.progress(&f(true, 2, 0)), 16);
        assert_eq!(proto.progress(&f(false, 2, 3)), 19);
    }
}
