//! Bitcoin chain structure and honest node.
//!
//! Blocks form a linear chain; each has a PoW and exactly one parent.
//! Honest nodes extend the highest block they know and share fresh blocks
//! immediately. Ties break in favour of the block first seen, which falls
//! out of the strict height comparison in `update`.

use crate::dag::{BlockId, BlockTemplate, DagView, ProtocolFields};
use crate::protocol::{Protocol, UpdateOutcome};

pub struct Bitcoin;

impl Protocol for Bitcoin {
    fn name(&self) -> &'static str {
        "bitcoin"
    }

    fn k(&self) -> u32 {
        1
    }

    fn root(&self) -> BlockTemplate {
        BlockTemplate {
            parents: vec![],
            fields: ProtocolFields { summary: true, height: 0, depth: 0 },
        }
    }

    fn validate(&self, view: &DagView, b: BlockId) -> bool {
        let blk = view.block(b);
        if !blk.pow || blk.parents.len() != 1 {
            return false;
        }
        let parent = view.block(blk.parents[0]);
        blk.fields.height == parent.fields.height + 1
    }

    fn update(&self, view: &DagView, _node: u32, tip: BlockId, b: BlockId) -> UpdateOutcome {
        if view.block(b).fields.height > view.block(tip).fields.height {
            UpdateOutcome::new(b, vec![b], vec![])
        } else {
            UpdateOutcome::new(tip, vec![], vec![])
        }
    }

    fn extend(&self, view: &DagView, _node: u32, tip: BlockId) -> BlockTemplate {
        let height = view.block(tip).fields.height + 1;
        BlockTemplate {
            parents: vec![tip],
            fields: ProtocolFields { summary: true, height, depth: 0 },
        }
    }

    fn progress(&self, fields: &ProtocolFields) -> u64 {
        fields.height as u64
    }

    fn prefer(
        &self,
        view: &DagView,
        _observer: Option<u32>,
        incumbent: BlockId,
        candidate: BlockId,
    ) -> bool {
        view.block(candidate).fields.height > view.block(incumbent).fields.height
    }

    fn block_rewards(&self, view: &DagView, b: BlockId) -> Vec<(u32, f64)> {
        let blk = view.block(b);
        if blk.pow {
            vec![(blk.miner, 1.0)]
        } else {
            vec![]
        }
    }
}
