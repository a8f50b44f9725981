//! Step-wise driver for external policy search: the environment advances
//! to the attacker's next update, hands out the observation, and takes an
//! action back.

use crate::attacks::policy::Action;
use crate::attacks::{common_summary, best_defender_tip, Observation};
use crate::metrics::{accumulate_rewards, normalized_reward, winning_chain};
use crate::sim::{ConfigError, RunResult, SimConfig, SimError, SimStatus, Simulation};

pub struct Episode {
    sim: Simulation,
    prev: f64,
    done: bool,
}

pub struct StepOutcome {
    pub observation: Observation,
    /// Change in the attacker's normalized reward on the chain everyone
    /// agrees on; the per-step deltas telescope to the final normalized
    /// reward of the run.
    pub reward_delta: f64,
    pub done: bool,
}

impl Episode {
    /// Build the environment and advance to the first decision point.
    pub fn reset(config: &SimConfig, seed: u64) -> Result<(Self, Observation), ConfigError> {
        let mut cfg = config.clone();
        cfg.seed = seed;
        let mut sim = Simulation::with_attacker(&cfg)?;
        match sim.advance() {
            SimStatus::NeedAction(obs) => Ok((Episode { sim, prev: 0.0, done: false }, obs)),
            SimStatus::Done => {
                let obs = sim.observe_now();
                Ok((Episode { sim, prev: 0.0, done: true }, obs))
            }
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Apply the action at the pending decision point and advance to the
    /// next one (or to the end of the run).
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        if self.done {
            return Err(SimError::Finished);
        }
        self.sim.resolve(action)?;
        match self.sim.advance() {
            SimStatus::NeedAction(obs) => {
                let now = self.common_chain_reward();
                let delta = now - self.prev;
                self.prev = now;
                Ok(StepOutcome { observation: obs, reward_delta: delta, done: false })
            }
            SimStatus::Done => {
                self.done = true;
                let final_reward = self.final_reward();
                let delta = final_reward - self.prev;
                self.prev = final_reward;
                Ok(StepOutcome {
                    observation: self.sim.observe_now(),
                    reward_delta: delta,
                    done: true,
                })
            }
        }
    }

    /// Attacker's normalized reward up to the best common ancestor; 0
    /// while no progress has accumulated.
    fn common_chain_reward(&self) -> f64 {
        let store = self.sim.store();
        let tips = self.sim.tips();
        let proto = self.sim.protocol();
        let b_d = best_defender_tip(proto, store, tips);
        let b_c = common_summary(store, tips[0], b_d);
        let ledger = accumulate_rewards(proto, store, b_c);
        normalized_reward(&ledger, 0).unwrap_or(0.0)
    }

    /// Normalized reward on the winning chain of the finished run.
    fn final_reward(&self) -> f64 {
        let store = self.sim.store();
        let proto = self.sim.protocol();
        let tip = winning_chain(proto, store);
        let ledger = accumulate_rewards(proto, store, tip);
        normalized_reward(&ledger, 0).unwrap_or(0.0)
    }

    pub fn into_result(self) -> RunResult {
        self.sim.into_result()
    }
}
