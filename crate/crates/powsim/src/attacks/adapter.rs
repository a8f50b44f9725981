//! The attacker's update rule, shared across protocols.
//!
//! Wherever the honest node would share a block, the attacker consults
//! its policy instead: the withhold action decides which private blocks
//! to release (by chain progress relative to the best defender tip), the
//! extend action decides which subblocks feed its next summary.

use crate::attacks::policy::{Action, ExtendMode, Withhold};
use crate::attacks::{best_defender_tip, confirming, confirming_exclusive};
use crate::dag::{BlockId, DagStore};
use crate::protocol::{Protocol, UpdateOutcome};
use std::collections::BTreeSet;

/// Attacker bookkeeping: a block is withheld until first listed in a
/// share result. Owned by the single simulation thread.
#[derive(Default)]
pub struct AttackerState {
    pub withheld: BTreeSet<BlockId>,
}

/// The attacker prefers its own summaries the moment it sees them. For
/// linear chains every block is a summary, so this covers the "own block"
/// rule too.
pub fn preferred_after_own(store: &DagStore, node: u32, tip: BlockId, b: BlockId) -> BlockId {
    let blk = store.block(b);
    if blk.miner == node && blk.fields.summary {
        b
    } else {
        tip
    }
}

/// Progress of the defenders' public mining frontier: the best block on
/// their preferred chain that they can actually see, i.e. `b_d` itself or
/// a confirming subblock that is not withheld by the attacker. For linear
/// chains this is simply the height of `b_d`.
fn defender_frontier(
    proto: &dyn Protocol,
    state: &AttackerState,
    store: &DagStore,
    node: u32,
    b_d: BlockId,
) -> u64 {
    let mut progress = proto.progress(&store.block(b_d).fields);
    for x in confirming(store, b_d) {
        let blk = store.block(x);
        if blk.miner == node && state.withheld.contains(&x) {
            continue;
        }
        progress = progress.max(proto.progress(&blk.fields));
    }
    progress
}

pub fn attacker_update(
    proto: &dyn Protocol,
    state: &mut AttackerState,
    store: &DagStore,
    tips: &[BlockId],
    node: u32,
    pref: BlockId,
    b: BlockId,
    action: Action,
) -> UpdateOutcome {
    let mut pref = pref;
    if store.block(b).miner == node {
        state.withheld.insert(b);
    }
    let view = store.global();
    let b_d = best_defender_tip(proto, store, tips);
    let d_progress = defender_frontier(proto, state, store, node, b_d);

    let mut share: Vec<BlockId> = Vec::new();
    match action.withhold {
        Withhold::Wait => {}
        Withhold::Adopt => pref = b_d,
        Withhold::Match | Withhold::Override => {
            let cap = match action.withhold {
                Withhold::Match => d_progress,
                _ => d_progress + 1,
            };
            share = state
                .withheld
                .iter()
                .copied()
                .filter(|&x| proto.progress(&store.block(x).fields) <= cap)
                .collect();
            if share.is_empty() && !state.withheld.is_empty() {
                // infeasible: the private chain cannot reach the
                // defenders' tip, fall back to releasing everything
                share = state.withheld.iter().copied().collect();
            }
            for x in &share {
                state.withheld.remove(x);
            }
        }
    }

    // With nothing withheld the attacker has no private branch to
    // protect, so its tip follows the honest preference order. This is
    // what lets a fully-releasing policy track the defenders through
    // same-height summary races, which Adopt (gated on h_d > h_a) cannot
    // express.
    if state.withheld.is_empty() && action.withhold != Withhold::Adopt {
        let candidate = if store.block(b).fields.summary {
            b
        } else {
            view.last_summary_before(b).unwrap_or(pref)
        };
        if proto.prefer(&view, Some(node), pref, candidate) {
            pref = candidate;
        }
    }

    // the attacker never delays its next summary longer than necessary
    let candidates = match action.extend {
        ExtendMode::Inclusive => confirming(store, pref),
        ExtendMode::Exclusive => confirming_exclusive(store, pref, node),
    };
    let append = proto
        .summary_over(&view, node, pref, &candidates)
        .into_iter()
        .collect();

    UpdateOutcome { tip: Some(pref), share, append }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{BlockTemplate, ProtocolFields};
    use crate::tailstorm::{RewardScheme, Tailstorm};

    fn store_with_genesis(n: usize) -> (DagStore, BlockId) {
        let mut store = DagStore::new(n);
        let g = store
            .reify(
                BlockTemplate {
                    parents: vec![],
                    fields: ProtocolFields { summary: true, height: 0, depth: 0 },
                },
                0,
                false,
                0.0,
                0,
            )
            .unwrap();
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
        store.set_visible(id, 0);
        id
    }

    #[test]
    fn exclusive_below_quorum_appends_nothing() {
        let proto = Tailstorm::new(3, 1.0, RewardScheme::Discount);
        let (mut store, g) = store_with_genesis(2);
        let mut state = AttackerState::default();
        // two private attacker subblocks: one short of k
        let a0 = sub(&mut store, g, 0, 10);
        let a1 = sub(&mut store, a0, 0, 11);
        let tips = vec![g, g];
        for b in [a0, a1] {
            let action = Action { withhold: Withhold::Wait, extend: ExtendMode::Exclusive };
            let out = attacker_update(&proto, &mut state, &store, &tips, 0, g, b, action);
            assert!(out.append.is_empty());
            assert!(out.share.is_empty());
        }
        assert_eq!(state.withheld.len(), 2);
    }

    #[test]
    fn override_releases_up_to_defender_progress_plus_one() {
        let proto = Tailstorm::new(2, 1.0, RewardScheme::Discount);
        let (mut store, g) = store_with_genesis(2);
        let mut state = AttackerState::default();
        let tips = vec![g, g];
        // private chain: two subblocks (progress 1, 2), then a private
        // summary (progress 2*1 = 2) with another subblock on it (3)
        let a0 = sub(&mut store, g, 0, 10);
        let a1 = sub(&mut store, a0, 0, 11);
        for b in [a0, a1] {
            let action = Action { withhold: Withhold::Wait, extend: ExtendMode::Exclusive };
            attacker_update(&proto, &mut state, &store, &tips, 0, g, b, action);
        }
        let s = store
            .reify(
                BlockTemplate {
                    parents: vec![a1],
                    fields: ProtocolFields { summary: true, height: 1, depth: 0 },
                },
                0,
                false,
                0.0,
                20,
            )
            .unwrap();
        store.set_visible(s, 0);
        let a2 = sub(&mut store, s, 0, 30);
        for b in [s, a2] {
            let action = Action { withhold: Withhold::Wait, extend: ExtendMode::Exclusive };
            attacker_update(&proto, &mut state, &store, &tips, 0, s, b, action);
        }
        assert_eq!(state.withheld.len(), 4);
        // defenders still at genesis: progress 0, Override cap 1
        let action = Action { withhold: Withhold::Override, extend: ExtendMode::Exclusive };
        let out = attacker_update(&proto, &mut state, &store, &tips, 0, s, a2, action);
        assert_eq!(out.share, vec![a0]);
        assert!(!state.withheld.contains(&a0));
        assert_eq!(state.withheld.len(), 3);
    }

    #[test]
    fn adopt_moves_tip_and_keeps_withheld_set() {
        let proto = Tailstorm::new(3, 1.0, RewardScheme::Discount);
        let (mut store, g) = store_with_genesis(2);
        let mut state = AttackerState::default();
        let a0 = sub(&mut store, g, 0, 10);
        state.withheld.insert(a0);
        // defenders assembled a summary the attacker now adopts
        let d0 = sub(&mut store, g, 1, 11);
        let d1 = sub(&mut store, d0, 1, 12);
        let d2 = sub(&mut store, d1, 1, 13);
        let s_d = store
            .reify(
                BlockTemplate {
                    parents: vec![d2],
                    fields: ProtocolFields { summary: true, height: 1, depth: 0 },
                },
                1,
                false,
                0.0,
                40,
            )
            .unwrap();
        for node in 0..2 {
            store.set_visible(d0, node);
            store.set_visible(d1, node);
            store.set_visible(d2, node);
            store.set_visible(s_d, node);
        }
        let tips = vec![g, s_d];
        let action = Action { withhold: Withhold::Adopt, extend: ExtendMode::Inclusive };
        let out = attacker_update(&proto, &mut state, &store, &tips, 0, g, s_d, action);
        assert_eq!(out.tip, Some(s_d));
        assert!(out.share.is_empty());
        assert!(state.withheld.contains(&a0));
    }

    #[test]
    fn infeasible_match_releases_everything() {
        let proto = Tailstorm::new(2, 1.0, RewardScheme::Discount);
        let (mut store, g) = store_with_genesis(2);
        let mut state = AttackerState::default();
        let tips = vec![g, g];
        let a0 = sub(&mut store, g, 0, 10);
        let action = Action { withhold: Withhold::Wait, extend: ExtendMode::Exclusive };
        attacker_update(&proto, &mut state, &store, &tips, 0, g, a0, action);
        // defenders at progress 0; no withheld block has progress <= 0
        let action = Action { withhold: Withhold::Match, extend: ExtendMode::Exclusive };
        let out = attacker_update(&proto, &mut state, &store, &tips, 0, g, a0, action);
        assert_eq!(out.share, vec![a0]);
        assert!(state.withheld.is_empty());
    }
}
