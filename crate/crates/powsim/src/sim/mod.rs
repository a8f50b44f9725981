//! Discrete-event realization of the virtual environment.
//!
//! A continuous-time mining process draws exponentially distributed PoW
//! delays and weighted random miners. Node behaviour enters through the
//! protocol's four functions; communication is modelled by delayed
//! delivery events that flip per-node visibility bits. A single priority
//! queue over (time, seq) serializes everything, so a run is a pure
//! function of (config, seed).

pub mod config;
pub mod network;

pub use config::{ConfigError, NetworkConfig, SimConfig, StopCondition};
pub use network::NetworkModel;

use crate::attacks::adapter::{attacker_update, preferred_after_own, AttackerState};
use crate::attacks::policy::{Action, Policy};
use crate::attacks::{observe, Observation};
use crate::dag::{BlockId, BlockTemplate, DagStore, ProtocolFields};
use crate::protocol::{Protocol, UpdateOutcome};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use std::collections::{BTreeMap, BinaryHeap};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no pending decision to resolve")]
    NoPendingDecision,
    #[error("episode already finished")]
    Finished,
}

/// Sample the next proof-of-work: exponential delay at rate `lambda` and
/// a miner drawn by relative hash rate.
pub fn next_pow(lambda: f64, weights: &WeightedIndex<f64>, rng: &mut impl Rng) -> (f64, u32) {
    let delay = Exp::new(lambda).expect("lambda > 0").sample(rng);
    let miner = weights.sample(rng) as u32;
    (delay, miner)
}

#[derive(Clone, Debug)]
enum EventKind {
    Pow { miner: u32 },
    Delivery { block: BlockId, node: u32 },
}

#[derive(Clone, Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // reversed: BinaryHeap is a max-heap, we want the earliest (time, seq)
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

pub enum SimStatus {
    /// The attacker's update was reached; supply an action via `resolve`.
    NeedAction(Observation),
    Done,
}

struct PendingDecision {
    node: u32,
    block: BlockId,
    pref: BlockId,
}

/// Result of a finished run: the final global DAG, per-node tips, event
/// counts, and elapsed simulated time.
pub struct RunResult {
    pub store: DagStore,
    pub tips: Vec<BlockId>,
    pub pows: u64,
    pub deliveries: u64,
    pub updates: u64,
    pub elapsed: f64,
    /// Blocks the attacker still withholds at the end; 0 on honest runs.
    pub withheld_final: usize,
}

pub struct Simulation {
    proto: Box<dyn Protocol>,
    net: NetworkModel,
    weights: WeightedIndex<f64>,
    lambda: f64,
    n: usize,
    stop: StopCondition,
    store: DagStore,
    tips: Vec<BlockId>,
    queue: BinaryHeap<Event>,
    /// Earliest scheduled arrival per (block, node). Broadcasting the
    /// same block again with a later arrival is a no-op, which keeps the
    /// event count linear without changing any visibility time.
    sched: Vec<Vec<f64>>,
    /// Deliveries waiting for a missing parent, per node.
    parked: Vec<Vec<BlockId>>,
    /// Canonical block per append template content (sorted parents +
    /// fields). Identical PoW-free templates from different nodes reuse
    /// the existing vertex instead of spawning duplicates.
    append_index: BTreeMap<(Vec<BlockId>, ProtocolFields), BlockId>,
    rng: ChaCha8Rng,
    now: f64,
    next_seq: u64,
    pows: u64,
    deliveries: u64,
    updates: u64,
    attacker: Option<AttackerState>,
    pending: Option<PendingDecision>,
    done: bool,
}

impl Simulation {
    /// All nodes honest.
    pub fn new(cfg: &SimConfig) -> Result<Self, ConfigError> {
        Self::build(cfg, false)
    }

    /// Node 0 is the attacker; the caller supplies its actions through
    /// `advance`/`resolve`.
    pub fn with_attacker(cfg: &SimConfig) -> Result<Self, ConfigError> {
        if cfg.n < 2 {
            return Err(ConfigError::Invalid("attack runs need at least one defender".into()));
        }
        Self::build(cfg, true)
    }

    fn build(cfg: &SimConfig, attacker: bool) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let proto = cfg.protocol_instance()?;
        let net = cfg.network_model()?;
        let weights = WeightedIndex::new(cfg.kappa.iter().copied())
            .map_err(|_| ConfigError::BadHashrates)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut store = DagStore::new(cfg.n);
        let genesis_hash = rng.gen::<u64>();
        let genesis = store
            .reify(proto.root(), 0, false, 0.0, genesis_hash)
            .expect("genesis has no parents");
        for node in 0..cfg.n as u32 {
            store.set_visible(genesis, node);
        }
        let mut sim = Simulation {
            proto,
            net,
            weights,
            lambda: cfg.lambda,
            n: cfg.n,
            stop: cfg.stop,
            store,
            tips: vec![genesis; cfg.n],
            queue: BinaryHeap::new(),
            sched: vec![vec![f64::INFINITY; cfg.n]],
            parked: vec![Vec::new(); cfg.n],
            append_index: BTreeMap::new(),
            rng,
            now: 0.0,
            next_seq: 0,
            pows: 0,
            deliveries: 0,
            updates: 0,
            attacker: attacker.then(AttackerState::default),
            pending: None,
            done: false,
        };
        sim.check_count_stops();
        sim.schedule_pow();
        Ok(sim)
    }

    pub fn store(&self) -> &DagStore {
        &self.store
    }

    pub fn tips(&self) -> &[BlockId] {
        &self.tips
    }

    pub fn protocol(&self) -> &dyn Protocol {
        self.proto.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done && self.pending.is_none()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Observation of the current state with the attacker's tip as-is.
    pub fn observe_now(&self) -> Observation {
        observe(self.proto.as_ref(), &self.store, &self.tips, self.tips[0])
    }

    fn push_event(&mut self, time: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event { time, seq, kind });
    }

    fn schedule_pow(&mut self) {
        if self.done {
            return;
        }
        let (delay, miner) = next_pow(self.lambda, &self.weights, &mut self.rng);
        self.push_event(self.now + delay, EventKind::Pow { miner });
    }

    fn schedule_delivery(&mut self, b: BlockId, node: u32, at: f64) {
        let slot = &mut self.sched[b.0 as usize][node as usize];
        if at < *slot {
            *slot = at;
            self.push_event(at, EventKind::Delivery { block: b, node });
        }
    }

    fn check_count_stops(&mut self) {
        match self.stop {
            StopCondition::Blocks(v) => {
                if self.store.block_count() as u64 >= v {
                    self.done = true;
                }
            }
            StopCondition::Pows(v) => {
                if self.pows >= v {
                    self.done = true;
                }
            }
            StopCondition::Seconds(_) => {}
        }
    }

    /// Validity-gated reification: blocks failing the protocol's chain
    /// structure rule never enter the DAG.
    fn reify_checked(&mut self, tmpl: BlockTemplate, miner: u32, pow: bool) -> Option<BlockId> {
        let hash = self.rng.gen::<u64>();
        let id = self
            .store
            .reify(tmpl, miner, pow, self.now, hash)
            .expect("templates reference reified blocks");
        if self.proto.validate(&self.store.global(), id) {
            self.sched.push(vec![f64::INFINITY; self.n]);
            if pow {
                self.pows += 1;
            }
            self.check_count_stops();
            Some(id)
        } else {
            self.store.retract(id);
            None
        }
    }

    fn apply_outcome(&mut self, node: u32, out: UpdateOutcome) {
        if let Some(t) = out.tip {
            self.tips[node as usize] = t;
        }
        for &b in &out.share {
            for j in 0..self.n as u32 {
                if j == node {
                    continue;
                }
                let d = self.net.delay(node, j, &mut self.rng);
                self.schedule_delivery(b, j, self.now + d);
            }
        }
        for tmpl in out.append {
            // appends happen immediately: reify now, deliver to the
            // appending node at the same instant. A template whose
            // content matches an already appended block names the same
            // block, so the existing vertex is delivered instead.
            let mut key_parents = tmpl.parents.clone();
            key_parents.sort_unstable();
            let key = (key_parents, tmpl.fields);
            let id = match self.append_index.get(&key) {
                Some(&existing) => existing,
                None => match self.reify_checked(tmpl, node, false) {
                    Some(id) => {
                        self.append_index.insert(key, id);
                        id
                    }
                    None => continue,
                },
            };
            if !self.store.is_visible(id, node) {
                self.push_event(self.now, EventKind::Delivery { block: id, node });
                self.sched[id.0 as usize][node as usize] =
                    self.sched[id.0 as usize][node as usize].min(self.now);
            }
        }
    }

    /// Parked blocks whose parents all became visible re-fire at the
    /// current instant.
    fn refire_parked(&mut self, node: u32) {
        let mut ready = Vec::new();
        {
            let list = &mut self.parked[node as usize];
            let mut i = 0;
            while i < list.len() {
                let b = list[i];
                let ok = self
                    .store
                    .block(b)
                    .parents
                    .iter()
                    .all(|&p| self.store.is_visible(p, node));
                if ok {
                    ready.push(b);
                    list.swap_remove(i);
                } else {
                    i += 1;
                }
            }
        }
        ready.sort(); // id order is topological
        for b in ready {
            self.push_event(self.now, EventKind::Delivery { block: b, node });
        }
    }

    /// Run events until the attacker must act or the stop condition
    /// fires. Honest-only simulations never return `NeedAction`.
    pub fn advance(&mut self) -> SimStatus {
        assert!(self.pending.is_none(), "resolve the pending decision first");
        loop {
            let head = match self.queue.peek() {
                None => {
                    self.done = true;
                    return SimStatus::Done;
                }
                Some(ev) => (ev.time, matches!(ev.kind, EventKind::Delivery { .. })),
            };
            if self.done {
                // drain same-instant deliveries so freshly reified blocks
                // still reach their own node, then cut
                if !(head.0 == self.now && head.1) {
                    self.queue.clear();
                    return SimStatus::Done;
                }
            } else if let StopCondition::Seconds(t) = self.stop {
                if head.0 > t {
                    self.done = true;
                    self.now = t;
                    self.queue.clear();
                    return SimStatus::Done;
                }
            }
            let ev = self.queue.pop().expect("peeked");
            self.now = ev.time;
            match ev.kind {
                EventKind::Pow { miner } => {
                    let tmpl = {
                        let view = self.store.view(miner);
                        self.proto.extend(&view, miner, self.tips[miner as usize])
                    };
                    if let Some(id) = self.reify_checked(tmpl, miner, true) {
                        // the successful miner receives its block at once
                        self.push_event(self.now, EventKind::Delivery { block: id, node: miner });
                        self.sched[id.0 as usize][miner as usize] = self.now;
                    }
                    self.schedule_pow();
                }
                EventKind::Delivery { block, node } => {
                    if self.store.is_visible(block, node) {
                        continue; // at most once
                    }
                    let parents_ready = self
                        .store
                        .block(block)
                        .parents
                        .iter()
                        .all(|&p| self.store.is_visible(p, node));
                    if !parents_ready {
                        let list = &mut self.parked[node as usize];
                        if !list.contains(&block) {
                            list.push(block);
                        }
                        continue;
                    }
                    self.store.set_visible(block, node);
                    self.deliveries += 1;
                    if node == 0 && self.attacker.is_some() {
                        let pref = preferred_after_own(&self.store, node, self.tips[0], block);
                        let obs = observe(self.proto.as_ref(), &self.store, &self.tips, pref);
                        self.pending = Some(PendingDecision { node, block, pref });
                        return SimStatus::NeedAction(obs);
                    }
                    self.updates += 1;
                    let out = {
                        let view = self.store.view(node);
                        self.proto.update(&view, node, self.tips[node as usize], block)
                    };
                    self.apply_outcome(node, out);
                    self.refire_parked(node);
                }
            }
        }
    }

    /// Complete the attacker update suspended by `advance`.
    pub fn resolve(&mut self, action: Action) -> Result<(), SimError> {
        let pending = self.pending.take().ok_or(SimError::NoPendingDecision)?;
        self.updates += 1;
        let out = attacker_update(
            self.proto.as_ref(),
            self.attacker.as_mut().expect("pending implies attacker"),
            &self.store,
            &self.tips,
            pending.node,
            pending.pref,
            pending.block,
            action,
        );
        self.apply_outcome(pending.node, out);
        self.refire_parked(pending.node);
        Ok(())
    }

    pub fn into_result(self) -> RunResult {
        RunResult {
            store: self.store,
            tips: self.tips,
            pows: self.pows,
            deliveries: self.deliveries,
            updates: self.updates,
            elapsed: self.now,
            withheld_final: self.attacker.map_or(0, |a| a.withheld.len()),
        }
    }
}

/// Run a fully honest simulation to completion.
pub fn run(cfg: &SimConfig) -> Result<RunResult, ConfigError> {
    let mut sim = Simulation::new(cfg)?;
    loop {
        match sim.advance() {
            SimStatus::Done => break,
            SimStatus::NeedAction(_) => unreachable!("honest runs have no attacker"),
        }
    }
    Ok(sim.into_result())
}

/// Run with node 0 driven by the given attack policy.
pub fn run_with_policy(cfg: &SimConfig, policy: &dyn Policy) -> Result<RunResult, ConfigError> {
    let mut sim = Simulation::with_attacker(cfg)?;
    loop {
        match sim.advance() {
            SimStatus::Done => break,
            SimStatus::NeedAction(obs) => {
                sim.resolve(policy.act(&obs)).expect("decision is pending");
            }
        }
    }
    Ok(sim.into_result())
}
