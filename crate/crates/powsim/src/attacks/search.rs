//! Bounded search over the threshold policy family.
//!
//! Candidates are scored by mean normalized reward over a fixed set of
//! seeded runs (common random numbers across candidates). The reference
//! policies are evaluated first, so the search never underperforms a
//! family member it contains within the given budget.

use crate::attacks::policy::{ExtendMode, Policy, ThresholdPolicy};
use crate::metrics::{accumulate_rewards, normalized_reward, winning_chain};
use crate::sim::{run_with_policy, ConfigError, SimConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    /// Number of candidate policies to evaluate.
    pub candidates: usize,
    /// Seeded runs per candidate.
    pub runs_per_candidate: u32,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub policy: ThresholdPolicy,
    pub score: f64,
    pub evaluated: Vec<(ThresholdPolicy, f64)>,
}

fn family_grid() -> Vec<ThresholdPolicy> {
    let mut grid = vec![
        ThresholdPolicy::honest(),
        ThresholdPolicy::minor_delay(),
        ThresholdPolicy::sm1(),
        ThresholdPolicy::get_ahead(),
    ];
    for &extend in &[ExtendMode::Inclusive, ExtendMode::Exclusive] {
        for &override_from in &[0i64, 1, 2] {
            for &width in &[0i64, 1, i64::MAX] {
                let override_to = override_from.saturating_add(width);
                for &min_defender_height in &[0u32, 1] {
                    for &match_at in &[None, Some(1)] {
                        for &min_exclusive in &[0u32, 2] {
                            let p = ThresholdPolicy {
                                override_from,
                                override_to,
                                min_defender_height,
                                match_at,
                                min_exclusive,
                                extend,
                            };
                            if !grid.contains(&p) {
                                grid.push(p);
                            }
                        }
                    }
                }
            }
        }
    }
    grid
}

/// Mean normalized reward of `policy` over `runs` seeded executions of
/// `cfg` (the config seed is replaced run by run).
pub fn evaluate_policy(
    cfg: &SimConfig,
    policy: &dyn Policy,
    runs: u32,
    seed: u64,
) -> Result<f64, ConfigError> {
    let proto = cfg.protocol_instance()?;
    let scores: Result<Vec<f64>, ConfigError> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = crate::experiments::mix_seed(seed, &[i as u64]);
            let res = run_with_policy(&c, policy)?;
            let tip = winning_chain(proto.as_ref(), &res.store);
            let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
            Ok(normalized_reward(&ledger, 0).unwrap_or(0.0))
        })
        .collect();
    let scores = scores?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Evaluate up to `budget.candidates` members of the threshold family
/// (references first, then a seeded shuffle of the rest) and return the
/// best by mean normalized reward.
pub fn threshold_search(
    cfg: &SimConfig,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchResult, ConfigError> {
    assert!(budget.candidates >= 1);
    let mut grid = family_grid();
    let references = 4.min(grid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    grid[references..].shuffle(&mut rng);
    grid.truncate(budget.candidates);

    let mut evaluated = Vec::with_capacity(grid.len());
    for policy in grid {
        let score = evaluate_policy(cfg, &policy, budget.runs_per_candidate, seed)?;
        evaluated.push((policy, score));
    }
    let (policy, score) = evaluated
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");
    Ok(SearchResult { policy, score, evaluated })
}
