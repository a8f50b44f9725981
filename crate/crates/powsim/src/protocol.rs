//! The four-function protocol interface shared by all consensus rules.

use crate::dag::{Block, BlockId, BlockTemplate, DagView, ProtocolFields};
use std::collections::BTreeSet;

/// What a node's `update` hands back to the environment: the new
/// preferred tip, blocks to broadcast, and templates to append without
/// proof-of-work.
#[derive(Clone, Debug, Default)]
pub struct UpdateOutcome {
    pub tip: Option<BlockId>,
    pub share: Vec<BlockId>,
    pub append: Vec<BlockTemplate>,
}

impl UpdateOutcome {
    pub fn new(tip: BlockId, share: Vec<BlockId>, append: Vec<BlockTemplate>) -> Self {
        UpdateOutcome { tip: Some(tip), share, append }
    }
}

/// A consensus protocol, fully specified through four functions: `root`
/// and `validate` define the chain structure, `update` and `extend` the
/// behaviour of honest nodes.
///
/// All functions are pure with respect to the provided view; the only
/// state a node carries between calls is its preferred tip.
pub trait Protocol: Send + Sync {
    fn name(&self) -> &'static str;

    /// Subblocks per summary; 1 for Bitcoin.
    fn k(&self) -> u32;

    /// Genesis block template.
    fn root(&self) -> BlockTemplate;

    /// Chain structure rule. The environment enforces this during
    /// reification; the genesis is exempt.
    fn validate(&self, view: &DagView, b: BlockId) -> bool;

    /// Reaction to a newly visible block.
    fn update(&self, view: &DagView, node: u32, tip: BlockId, b: BlockId) -> UpdateOutcome;

    /// Mining rule: the template the node wants to mine on top of `tip`.
    fn extend(&self, view: &DagView, node: u32, tip: BlockId) -> BlockTemplate;

    /// Number of proofs-of-work committed to by a chain ending in a block
    /// with these fields.
    fn progress(&self, fields: &ProtocolFields) -> u64;

    /// Strict preference between two chain tips. `observer` enables the
    /// node-specific clauses (own reward); pass `None` for an objective
    /// comparison.
    fn prefer(
        &self,
        view: &DagView,
        observer: Option<u32>,
        incumbent: BlockId,
        candidate: BlockId,
    ) -> bool;

    /// Reward payouts attached to one element of the summary chain.
    fn block_rewards(&self, view: &DagView, b: BlockId) -> Vec<(u32, f64)>;

    /// Assemble a summary over an explicit candidate set on behalf of
    /// `node`. Protocols without summaries return `None`.
    fn summary_over(
        &self,
        _view: &DagView,
        _node: u32,
        _base: BlockId,
        _candidates: &BTreeSet<BlockId>,
    ) -> Option<BlockTemplate> {
        None
    }
}

/// Candidate blocks for chain-tip comparisons: summaries carry the chain
/// in every protocol here (for Bitcoin every block is a summary).
pub fn is_chain_block(b: &Block) -> bool {
    b.fields.summary
}
