//! Append-only block DAG with per-node visibility.
//!
//! Every protocol in this crate works on the same substrate: blocks are
//! vertices, parent references are edges, and each simulated node sees a
//! visibility-filtered subset of the store. Blocks are never mutated or
//! removed once reified; visibility only ever grows.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Dense index of a block in reification order.
///
/// Ids are unique, never reused, and parents always have smaller ids, so
/// id order doubles as a topological order of the DAG.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct BlockId(pub u32);

/// The genesis block created by environment initialization.
pub const GENESIS: BlockId = BlockId(0);

impl BlockId {
    #[inline]
    fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Block properties assigned by the protocol as the chain unfolds.
///
/// Bitcoin leaves `summary` at true and `depth` at 0 for every block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProtocolFields {
    pub summary: bool,
    pub height: u32,
    pub depth: u32,
}

/// What a node hands back to the environment when it wants a block
/// appended. The environment reifies templates; nodes never touch the
/// store directly.
#[derive(Clone, Debug)]
pub struct BlockTemplate {
    pub parents: Vec<BlockId>,
    pub fields: ProtocolFields,
}

/// One vertex of the DAG. Immutable after reification.
#[derive(Clone, Debug)]
pub struct Block {
    pub id: BlockId,
    pub parents: Vec<BlockId>,
    pub pow: bool,
    /// Node that mined the block, or requested the append for blocks
    /// without proof-of-work.
    pub miner: u32,
    /// Uniform 64-bit value drawn at reification. Stands in for the PoW
    /// hash; used for leader election and deterministic tie-breaks.
    pub hash_value: u64,
    pub reified_at: f64,
    pub fields: ProtocolFields,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("unknown parent id {0:?}")]
    UnknownParent(BlockId),
    #[error("block {0:?} not visible in this view")]
    NotVisible(BlockId),
    #[error("block {0:?} has no summary ancestor")]
    NoSummaryAncestor(BlockId),
}

/// Global append-only store plus the visibility matrix.
///
/// Single-writer: only the simulation engine mutates the store. Views are
/// read-only snapshots.
pub struct DagStore {
    n: usize,
    blocks: Vec<Block>,
    children: Vec<Vec<BlockId>>,
    visible: Vec<Vec<bool>>,
}

impl DagStore {
    pub fn new(n: usize) -> Self {
        DagStore {
            n,
            blocks: Vec::new(),
            children: Vec::new(),
            visible: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Append a block built from `template`. The caller supplies the hash
    /// value; the engine draws it from the run's seeded RNG.
    pub fn reify(
        &mut self,
        template: BlockTemplate,
        miner: u32,
        pow: bool,
        now: f64,
        hash_value: u64,
    ) -> Result<BlockId, DagError> {
        for &p in &template.parents {
            if p.idx() >= self.blocks.len() {
                return Err(DagError::UnknownParent(p));
            }
        }
        let id = BlockId(self.blocks.len() as u32);
        for &p in &template.parents {
            self.children[p.idx()].push(id);
        }
        self.blocks.push(Block {
            id,
            parents: template.parents,
            pow,
            miner,
            hash_value,
            reified_at: now,
            fields: template.fields,
        });
        self.children.push(Vec::new());
        self.visible.push(vec![false; self.n]);
        Ok(id)
    }

    /// Undo the most recent reification. Only the engine uses this, to
    /// drop blocks that fail validation before anyone can see them.
    pub(crate) fn retract(&mut self, id: BlockId) {
        assert_eq!(id.idx(), self.blocks.len() - 1, "can only retract the last block");
        let block = self.blocks.pop().unwrap();
        for p in &block.parents {
            let c = &mut self.children[p.idx()];
            debug_assert_eq!(c.last(), Some(&id));
            c.pop();
        }
        self.children.pop();
        self.visible.pop();
    }

    pub fn block(&self, b: BlockId) -> &Block {
        &self.blocks[b.idx()]
    }

    pub fn set_visible(&mut self, b: BlockId, node: u32) {
        self.visible[b.idx()][node as usize] = true;
    }

    pub fn is_visible(&self, b: BlockId, node: u32) -> bool {
        self.visible[b.idx()][node as usize]
    }

    /// View exposing every reified block.
    pub fn global(&self) -> DagView<'_> {
        DagView { store: self, observer: None }
    }

    /// View restricted to the blocks delivered to `node`.
    pub fn view(&self, node: u32) -> DagView<'_> {
        DagView { store: self, observer: Some(node) }
    }

    /// One JSON record per block, in id (= topological) order.
    pub fn dump_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            id: u32,
            parents: &'a [BlockId],
            pow: bool,
            miner: u32,
            hash_value: u64,
            summary: bool,
            height: u32,
            depth: u32,
            reified_at: f64,
        }
        let mut out = String::new();
        for b in &self.blocks {
            let rec = Record {
                id: b.id.0,
                parents: &b.parents,
                pow: b.pow,
                miner: b.miner,
                hash_value: b.hash_value,
                summary: b.fields.summary,
                height: b.fields.height,
                depth: b.fields.depth,
                reified_at: b.reified_at,
            };
            out.push_str(&serde_json::to_string(&rec).expect("serialize block record"));
            out.push('\n');
        }
        out
    }
}

/// Immutable, visibility-filtered window on the store.
///
/// `observer == None` is the global view; it exposes every block and is a
/// superset of every node view at all times.
#[derive(Clone, Copy)]
pub struct DagView<'a> {
    store: &'a DagStore,
    observer: Option<u32>,
}

impl<'a> DagView<'a> {
    pub fn store(&self) -> &'a DagStore {
        self.store
    }

    pub fn contains(&self, b: BlockId) -> bool {
        if b.idx() >= self.store.blocks.len() {
            return false;
        }
        match self.observer {
            None => true,
            Some(node) => self.store.is_visible(b, node),
        }
    }

    pub fn block(&self, b: BlockId) -> &'a Block {
        debug_assert!(self.contains(b), "access to invisible block {b:?}");
        self.store.block(b)
    }

    pub fn parents(&self, b: BlockId) -> &'a [BlockId] {
        &self.store.block(b).parents
    }

    /// Children of `b` that are visible in this view, ascending by id.
    pub fn children(&self, b: BlockId) -> Vec<BlockId> {
        self.store.children[b.idx()]
            .iter()
            .copied()
            .filter(|&c| self.contains(c))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = BlockId> + 'a {
        let store = self.store;
        let observer = self.observer;
        (0..store.blocks.len() as u32).map(BlockId).filter(move |&b| match observer {
            None => true,
            Some(node) => store.is_visible(b, node),
        })
    }

    /// All blocks reachable from `b` via parent edges, excluding `b`.
    pub fn ancestors(&self, b: BlockId) -> Result<BTreeSet<BlockId>, DagError> {
        if !self.contains(b) {
            return Err(DagError::NotVisible(b));
        }
        let mut seen = BTreeSet::new();
        let mut stack: Vec<BlockId> = self.parents(b).to_vec();
        while let Some(x) = stack.pop() {
            if seen.insert(x) {
                stack.extend_from_slice(self.parents(x));
            }
        }
        Ok(seen)
    }

    /// First summary on the parent walk from `b`, excluding `b` itself.
    pub fn last_summary_before(&self, b: BlockId) -> Result<BlockId, DagError> {
        if !self.contains(b) {
            return Err(DagError::NotVisible(b));
        }
        let mut cur = b;
        loop {
            match self.parents(cur).first() {
                Some(&p) => {
                    if self.block(p).fields.summary {
                        return Ok(p);
                    }
                    cur = p;
                }
                None => return Err(DagError::NoSummaryAncestor(b)),
            }
        }
    }

    /// Non-summary ancestors of `b` that are descendants of summary `p`,
    /// plus `b` itself when `b` is a subblock.
    pub fn subblocks_between(&self, b: BlockId, p: BlockId) -> Result<BTreeSet<BlockId>, DagError> {
        if !self.contains(b) {
            return Err(DagError::NotVisible(b));
        }
        if !self.contains(p) {
            return Err(DagError::NotVisible(p));
        }
        let p_height = self.block(p).fields.height;
        // Walk parents from b without crossing summaries; everything below
        // the first summary on a path belongs to an older tree.
        let mut collected = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<BlockId> = if self.block(b).fields.summary {
            self.parents(b).to_vec()
        } else {
            vec![b]
        };
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            if self.block(x).fields.summary {
                continue;
            }
            collected.insert(x);
            stack.extend_from_slice(self.parents(x));
        }
        // Keep only descendants of p: a subblock descends from p exactly
        // when p lies on its summary chain.
        let mut result = BTreeSet::new();
        for x in collected {
            let mut s = self.last_summary_before(x)?;
            loop {
                if s == p {
                    result.insert(x);
                    break;
                }
                if self.block(s).fields.height <= p_height {
                    break;
                }
                s = self.last_summary_before(s)?;
            }
        }
        Ok(result)
    }

    /// The subblock tree confirming summary `s`: visible non-summary
    /// descendants with the same height, ascending by id.
    pub fn confirming_subblocks(&self, s: BlockId) -> Result<BTreeSet<BlockId>, DagError> {
        if !self.contains(s) {
            return Err(DagError::NotVisible(s));
        }
        let height = self.block(s).fields.height;
        let mut tree = BTreeSet::new();
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for c in self.children(x) {
                let blk = self.block(c);
                if !blk.fields.summary && blk.fields.height == height && tree.insert(c) {
                    stack.push(c);
                }
            }
        }
        Ok(tree)
    }
}
