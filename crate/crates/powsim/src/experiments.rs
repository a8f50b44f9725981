//! Batch experiment drivers: fairness study, attack evaluation,
//! break-even search, and the orphan-bound table. Each driver emits CSV
//! rows carrying (seed, config hash) so any row can be reproduced, plus
//! JSON aggregates. Runs fan out over a worker pool; output order is
//! canonical regardless of scheduling.

use crate::attacks::policy::{policy_by_name, Policy};
use crate::metrics::{
    accumulate_rewards, normalized_reward, orphan_bound, orphan_stats, winning_chain,
    OrphanBoundInputs,
};
use crate::sim::{run, run_with_policy, ConfigError, NetworkConfig, SimConfig, StopCondition};
use rayon::prelude::*;
use serde::Serialize;

/// Derive a run seed from a base seed and a salt path (splitmix64 steps).
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base;
    for &p in parts {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x = z ^ (z >> 31);
    }
    x
}

/// FNV-1a over the canonical config string; identifies a configuration in
/// result files.
pub fn fnv1a64(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

// ---------------------------------------------------------------------
// Orphan-bound table
// ---------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrphanTableRow {
    pub interval: f64,
    pub k: u32,
    pub bound_pct: f64,
}

/// Pure evaluation of the analytic bound over an (interval, k) grid.
pub fn orphan_table(tau0: f64, transmit: f64, intervals: &[f64], ks: &[u32]) -> Vec<OrphanTableRow> {
    let mut rows = Vec::new();
    for &interval in intervals {
        for &k in ks {
            let bound = orphan_bound(&OrphanBoundInputs { tau0, transmit, interval, k });
            rows.push(OrphanTableRow { interval, k, bound_pct: bound * 100.0 });
        }
    }
    rows
}

pub fn orphan_table_csv(rows: &[OrphanTableRow]) -> String {
    let mut out = String::from("T,k,bound_pct\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.4}\n", r.interval, r.k, r.bound_pct));
    }
    out
}

// ---------------------------------------------------------------------
// Fairness study
// ---------------------------------------------------------------------

/// Two miners with 1% and 99% of the hash rate, uniform message delay.
/// Each observation simulates one day of mining and reports the weak
/// miner's reward relative to its fair share.
#[derive(Clone, Debug)]
pub struct FairnessConfig {
    /// bitcoin | tailstorm (k = 1 enforces bitcoin-style intervals)
    pub protocol: String,
    /// (summary interval seconds, k) grid points.
    pub grid: Vec<(f64, u32)>,
    pub delay: f64,
    /// Day observations per grid point.
    pub observations: u32,
    pub seed: u64,
}

impl FairnessConfig {
    /// PoW solutions per one-day observation at a grid point.
    pub fn day_pows(interval: f64, k: u32) -> u64 {
        (24.0 * 3600.0 * k as f64 / interval).floor() as u64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FairnessRow {
    pub protocol: String,
    pub interval: f64,
    pub k: u32,
    pub observation: u32,
    pub seed: u64,
    pub config_hash: u64,
    /// Weak miner's relative reward as percent of its fair share.
    pub weak_relative_pct: f64,
}

#[derive(Debug)]
pub struct FairnessOutput {
    pub rows: Vec<FairnessRow>,
}

impl FairnessOutput {
    pub fn csv(&self) -> String {
        let mut out = String::from("protocol,T,k,observation,seed,config_hash,weak_relative_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:016x},{:.6}\n",
                r.protocol, r.interval, r.k, r.observation, r.seed, r.config_hash, r.weak_relative_pct
            ));
        }
        out
    }

    /// Mean weak-miner relative reward per grid point, in row order.
    pub fn means(&self) -> Vec<((f64, u32), f64, f64, u32)> {
        let mut keys: Vec<(f64, u32)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.interval, r.k)) {
                keys.push((r.interval, r.k));
            }
        }
        keys.into_iter()
            .map(|key| {
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| (r.interval, r.k) == key)
                    .map(|r| r.weak_relative_pct)
                    .collect();
                let (mean, se) = mean_stderr(&vals);
                (key, mean, se, vals.len() as u32)
            })
            .collect()
    }
}

fn fairness_sim_config(cfg: &FairnessConfig, interval: f64, k: u32, seed: u64) -> SimConfig {
    SimConfig {
        protocol: cfg.protocol.clone(),
        k: (cfg.protocol != "bitcoin").then_some(k),
        c: None,
        n: 2,
        kappa: vec![1.0, 99.0],
        lambda: k as f64 / interval,
        network: NetworkConfig::Uniform { delay: cfg.delay },
        seed,
        stop: StopCondition::Pows(FairnessConfig::day_pows(interval, k)),
    }
}

pub fn fairness(cfg: &FairnessConfig) -> Result<FairnessOutput, ConfigError> {
    if cfg.protocol != "bitcoin" && cfg.protocol != "tailstorm" {
        return Err(ConfigError::Invalid(format!(
            "fairness study covers bitcoin and tailstorm, not {}",
            cfg.protocol
        )));
    }
    for &(interval, k) in &cfg.grid {
        if cfg.protocol == "bitcoin" && k != 1 {
            return Err(ConfigError::Invalid("bitcoin fairness runs use k = 1".into()));
        }
        if interval / (k as f64) < cfg.delay {
            return Err(ConfigError::Invalid(format!(
                "configuration (T = {interval}, k = {k}) rejected: expected subblock interval \
                 {:.2}s is below the network propagation delay {}s",
                interval / (k as f64),
                cfg.delay
            )));
        }
        if FairnessConfig::day_pows(interval, k) == 0 {
            return Err(ConfigError::Invalid("observation window shorter than one PoW".into()));
        }
        // probe-validate the derived simulation config
        fairness_sim_config(cfg, interval, k, 0).validate()?;
    }

    let mut tasks = Vec::new();
    for (pi, &(interval, k)) in cfg.grid.iter().enumerate() {
        for obs in 0..cfg.observations {
            tasks.push((pi, interval, k, obs));
        }
    }
    let rows: Result<Vec<FairnessRow>, ConfigError> = tasks
        .par_iter()
        .map(|&(pi, interval, k, obs)| {
            let seed = mix_seed(cfg.seed, &[pi as u64, obs as u64]);
            let sim_cfg = fairness_sim_config(cfg, interval, k, seed);
            let config_hash = fnv1a64(&sim_cfg.canonical_string());
            let res = run(&sim_cfg)?;
            let proto = sim_cfg.protocol_instance()?;
            let tip = winning_chain(proto.as_ref(), &res.store);
            let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
            let total = ledger.total();
            let weak_share = if total > 0.0 { ledger.per_miner[0] / total } else { 0.0 };
            Ok(FairnessRow {
                protocol: cfg.protocol.clone(),
                interval,
                k,
                observation: obs,
                seed,
                config_hash,
                weak_relative_pct: weak_share / 0.01 * 100.0,
            })
        })
        .collect();
    Ok(FairnessOutput { rows: rows? })
}

// ---------------------------------------------------------------------
// Attack evaluation
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct AttackEvalConfig {
    pub protocols: Vec<String>,
    pub policies: Vec<String>,
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub k: u32,
    pub c: f64,
    pub n: usize,
    pub lambda: f64,
    pub runs: u32,
    pub stop_blocks: u64,
    pub seed: u64,
}

impl Default for AttackEvalConfig {
    fn default() -> Self {
        AttackEvalConfig {
            protocols: vec!["tailstorm".into()],
            policies: vec!["honest".into()],
            alphas: vec![0.25],
            gammas: vec![0.5],
            k: 8,
            c: 1.0,
            n: 32,
            lambda: 1.0,
            runs: 30,
            stop_blocks: 2048,
            seed: 0,
        }
    }
}

/// Simulation config for one attack run: node 0 holds fraction `alpha`
/// of the hash rate, defenders split the rest evenly.
pub fn attack_sim_config(
    protocol: &str,
    k: u32,
    c: f64,
    n: usize,
    lambda: f64,
    alpha: f64,
    gamma: f64,
    stop_blocks: u64,
    seed: u64,
) -> SimConfig {
    let mut kappa = vec![(1.0 - alpha) / (n as f64 - 1.0); n];
    kappa[0] = alpha;
    SimConfig {
        protocol: protocol.to_string(),
        k: (protocol != "bitcoin").then_some(k),
        c: Some(c),
        n,
        kappa,
        lambda,
        network: NetworkConfig::Attacker { epsilon: None, gamma },
        seed,
        stop: StopCondition::Blocks(stop_blocks),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackRow {
    pub protocol: String,
    pub k: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub policy: String,
    pub run: u32,
    pub normalized_reward: f64,
    pub orphans: u64,
    pub simulated_seconds: f64,
    pub seed: u64,
    pub config_hash: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackAggregate {
    pub protocol: String,
    pub k: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub policy: String,
    pub mean: f64,
    pub stderr: f64,
    pub runs: u32,
}

#[derive(Debug)]
pub struct AttackEvalOutput {
    pub rows: Vec<AttackRow>,
}

impl AttackEvalOutput {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "protocol,k,alpha,gamma,policy,run,normalized_reward,orphans,simulated_seconds,seed,config_hash\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.2},{:.2},{},{},{:.6},{},{:.3},{},{:016x}\n",
                r.protocol,
                r.k,
                r.alpha,
                r.gamma,
                r.policy,
                r.run,
                r.normalized_reward,
                r.orphans,
                r.simulated_seconds,
                r.seed,
                r.config_hash,
            ));
        }
        out
    }

    /// Group means in row order. Groups below `min_runs` are skipped
    /// unless forced.
    pub fn aggregates(&self, min_runs: u32, force: bool) -> Vec<AttackAggregate> {
        let mut keys: Vec<(String, u32, f64, f64, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.protocol.clone(), r.k, r.alpha, r.gamma, r.policy.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let mut out = Vec::new();
        for key in keys {
            let vals: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| (r.protocol.clone(), r.k, r.alpha, r.gamma, r.policy.clone()) == key)
                .map(|r| r.normalized_reward)
                .collect();
            if (vals.len() as u32) < min_runs && !force {
                continue;
            }
            let (mean, stderr) = mean_stderr(&vals);
            out.push(AttackAggregate {
                protocol: key.0,
                k: key.1,
                alpha: key.2,
                gamma: key.3,
                policy: key.4,
                mean,
                stderr,
                runs: vals.len() as u32,
            });
        }
        out
    }

    pub fn aggregates_json(&self, min_runs: u32, force: bool) -> String {
        serde_json::to_string_pretty(&self.aggregates(min_runs, force)).expect("serialize")
    }

    /// Mean and standard error for one configuration group.
    pub fn group_stats(&self, protocol: &str, policy: &str, alpha: f64, gamma: f64) -> (f64, f64, u32) {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| {
                r.protocol == protocol && r.policy == policy && r.alpha == alpha && r.gamma == gamma
            })
            .map(|r| r.normalized_reward)
            .collect();
        let (mean, se) = mean_stderr(&vals);
        (mean, se, vals.len() as u32)
    }
}

fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One attack run: normalized reward on the winning chain, orphan count,
/// and elapsed simulated time.
pub fn attack_run(cfg: &SimConfig, policy: &dyn Policy) -> Result<(f64, u64, f64), ConfigError> {
    let res = run_with_policy(cfg, policy)?;
    let proto = cfg.protocol_instance()?;
    let tip = winning_chain(proto.as_ref(), &res.store);
    let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
    let reward = normalized_reward(&ledger, 0).unwrap_or(0.0);
    let orphans = orphan_stats(&res.store, tip).orphaned_pow;
    Ok((reward, orphans, res.elapsed))
}

pub fn attack_eval(cfg: &AttackEvalConfig) -> Result<AttackEvalOutput, ConfigError> {
    for p in &cfg.policies {
        if policy_by_name(p).is_none() {
            return Err(ConfigError::Invalid(format!("unknown policy {p:?}")));
        }
    }
    let mut tasks = Vec::new();
    for protocol in &cfg.protocols {
        for policy in &cfg.policies {
            for &alpha in &cfg.alphas {
                for &gamma in &cfg.gammas {
                    for run_idx in 0..cfg.runs {
                        tasks.push((protocol.clone(), policy.clone(), alpha, gamma, run_idx));
                    }
                }
            }
        }
    }
    // fail fast on configuration errors before any run starts
    if let Some((protocol, _, alpha, gamma, _)) = tasks.first() {
        attack_sim_config(protocol, cfg.k, cfg.c, cfg.n, cfg.lambda, *alpha, *gamma, cfg.stop_blocks, 0)
            .validate()?;
    }
    for &gamma in &cfg.gammas {
        crate::sim::NetworkModel::attacker(cfg.n, 1e-6 / cfg.lambda, gamma)?;
    }

    let rows: Result<Vec<AttackRow>, ConfigError> = tasks
        .par_iter()
        .map(|(protocol, policy_name, alpha, gamma, run_idx)| {
            let seed = mix_seed(
                cfg.seed,
                &[
                    fnv1a64(protocol),
                    fnv1a64(policy_name),
                    (alpha * 10_000.0).round() as u64,
                    (gamma * 10_000.0).round() as u64,
                    *run_idx as u64,
                ],
            );
            let sim_cfg = attack_sim_config(
                protocol,
                cfg.k,
                cfg.c,
                cfg.n,
                cfg.lambda,
                *alpha,
                *gamma,
                cfg.stop_blocks,
                seed,
            );
            let config_hash = fnv1a64(&sim_cfg.canonical_string());
            let policy = policy_by_name(policy_name).expect("validated above");
            let (reward, orphans, elapsed) = attack_run(&sim_cfg, policy.as_ref())?;
            Ok(AttackRow {
                protocol: protocol.clone(),
                k: cfg.k,
                alpha: *alpha,
                gamma: *gamma,
                policy: policy_name.clone(),
                run: *run_idx,
                normalized_reward: reward,
                orphans,
                simulated_seconds: elapsed,
                seed,
                config_hash,
            })
        })
        .collect();
    Ok(AttackEvalOutput { rows: rows? })
}

// ---------------------------------------------------------------------
// Break-even search
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct BreakEvenConfig {
    pub protocol: String,
    pub policy: String,
    pub gamma: f64,
    pub k: u32,
    pub c: f64,
    pub n: usize,
    pub lambda: f64,
    pub stop_blocks: u64,
    /// Runs per probe; doubled (up to 4x) while the sign of
    /// reward-minus-alpha stays within two standard errors of zero.
    pub runs_per_probe: u32,
    pub seed: u64,
    /// Bisection stops when the bracket is narrower than this.
    pub alpha_tolerance: f64,
}

impl Default for BreakEvenConfig {
    fn default() -> Self {
        BreakEvenConfig {
            protocol: "bitcoin".into(),
            policy: "sm1".into(),
            gamma: 0.05,
            k: 8,
            c: 1.0,
            n: 32,
            lambda: 1.0,
            stop_blocks: 2048,
            runs_per_probe: 30,
            seed: 0,
            alpha_tolerance: 0.005,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BreakEvenOutcome {
    /// Minimal alpha (percent) where the policy beats honest mining.
    Value(f64),
    /// Profitable already at the grid floor (percent).
    AtOrBelowFloor(f64),
    /// Never profitable within the probed range.
    NotInRange,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRecord {
    pub alpha: f64,
    pub mean: f64,
    pub stderr: f64,
    pub runs: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct BreakEvenResult {
    pub protocol: String,
    pub policy: String,
    pub gamma: f64,
    pub outcome: BreakEvenOutcome,
    pub probes: Vec<ProbeRecord>,
}

impl BreakEvenResult {
    pub fn outcome_label(&self) -> String {
        match self.outcome {
            BreakEvenOutcome::Value(pct) => format!("{pct:.1}"),
            BreakEvenOutcome::AtOrBelowFloor(pct) => format!("<={pct:.0}"),
            BreakEvenOutcome::NotInRange => "none".into(),
        }
    }
}

/// Bisection on alpha solving mean normalized reward = alpha over
/// [0.05, 0.50].
pub fn break_even(cfg: &BreakEvenConfig) -> Result<BreakEvenResult, ConfigError> {
    let policy = policy_by_name(&cfg.policy)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown policy {:?}", cfg.policy)))?;
    let mut probes = Vec::new();
    let mut probe_idx = 0u64;

    let mut probe = |alpha: f64, probes: &mut Vec<ProbeRecord>| -> Result<f64, ConfigError> {
        let mut scores: Vec<f64> = Vec::new();
        let mut batch = cfg.runs_per_probe;
        let mut offset = 0u64;
        loop {
            let new: Result<Vec<f64>, ConfigError> = (0..batch)
                .into_par_iter()
                .map(|i| {
                    let seed = mix_seed(cfg.seed, &[probe_idx, offset + i as u64]);
                    let sim_cfg = attack_sim_config(
                        &cfg.protocol,
                        cfg.k,
                        cfg.c,
                        cfg.n,
                        cfg.lambda,
                        alpha,
                        cfg.gamma,
                        cfg.stop_blocks,
                        seed,
                    );
                    Ok(attack_run(&sim_cfg, policy.as_ref())?.0)
                })
                .collect();
            scores.extend(new?);
            offset += batch as u64;
            let (mean, se) = mean_stderr(&scores);
            let diff = mean - alpha;
            // enlarge the batch while the sign is not resolved
            if diff.abs() >= 2.0 * se || scores.len() as u32 >= cfg.runs_per_probe * 4 {
                probes.push(ProbeRecord { alpha, mean, stderr: se, runs: scores.len() as u32 });
                probe_idx += 1;
                return Ok(diff);
            }
            batch = scores.len() as u32;
        }
    };

    let (floor, ceil) = (0.05, 0.50);
    let f_floor = probe(floor, &mut probes)?;
    if f_floor >= 0.0 {
        return Ok(BreakEvenResult {
            protocol: cfg.protocol.clone(),
            policy: cfg.policy.clone(),
            gamma: cfg.gamma,
            outcome: BreakEvenOutcome::AtOrBelowFloor(floor * 100.0),
            probes,
        });
    }
    let f_ceil = probe(ceil, &mut probes)?;
    if f_ceil <= 0.0 {
        return Ok(BreakEvenResult {
            protocol: cfg.protocol.clone(),
            policy: cfg.policy.clone(),
            gamma: cfg.gamma,
            outcome: BreakEvenOutcome::NotInRange,
            probes,
        });
    }
    let (mut lo, mut hi) = (floor, ceil);
    while hi - lo > cfg.alpha_tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut probes)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BreakEvenResult {
        protocol: cfg.protocol.clone(),
        policy: cfg.policy.clone(),
        gamma: cfg.gamma,
        outcome: BreakEvenOutcome::Value(0.5 * (lo + hi) * 100.0),
        probes,
    })
}
