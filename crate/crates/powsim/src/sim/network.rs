//! Network delay models.

use crate::sim::config::ConfigError;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[derive(Clone, Debug)]
pub enum NetworkModel {
    Uniform { delay: f64 },
    /// Node 0 is the attacker. Delay rules: anything addressed to the
    /// attacker arrives instantly; defender-to-defender messages take
    /// `epsilon`; attacker-to-defender messages take a uniform random
    /// delay on [0, (n-2)/(n-1) * epsilon/gamma], which makes `gamma` the
    /// attacker's block race advantage.
    Attacker { n: usize, epsilon: f64, gamma: f64 },
}

impl NetworkModel {
    pub fn uniform(delay: f64) -> Result<Self, ConfigError> {
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(ConfigError::BadDelay);
        }
        Ok(NetworkModel::Uniform { delay })
    }

    pub fn attacker(n: usize, epsilon: f64, gamma: f64) -> Result<Self, ConfigError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(ConfigError::BadGamma);
        }
        if !(epsilon > 0.0) {
            return Err(ConfigError::BadDelay);
        }
        // n > 1/(1-gamma) + 1, i.e. (n-1)(1-gamma) > 1, with a small guard
        // against borderline floating-point noise
        if (n as f64 - 1.0) * (1.0 - gamma) <= 1.0 + 1e-9 {
            return Err(ConfigError::TooFewNodes { n, gamma });
        }
        Ok(NetworkModel::Attacker { n, epsilon, gamma })
    }

    /// Message delay from `src` to `dst`, `src != dst`.
    pub fn delay(&self, src: u32, dst: u32, rng: &mut impl Rng) -> f64 {
        debug_assert_ne!(src, dst);
        match *self {
            NetworkModel::Uniform { delay } => delay,
            NetworkModel::Attacker { n, epsilon, gamma } => {
                if dst == 0 {
                    0.0
                } else if src != 0 {
                    epsilon
                } else {
                    // gamma = 0 degenerates to an arbitrarily large but
                    // finite delay: the attacker never wins a race
                    let bound = if gamma > 0.0 {
                        (n as f64 - 2.0) / (n as f64 - 1.0) * epsilon / gamma
                    } else {
                        (n as f64 - 2.0) / (n as f64 - 1.0) * epsilon * 1e12
                    };
                    rng.gen::<f64>() * bound
                }
            }
        }
    }

    /// Monte-Carlo of the block race: one defender publishes a block that
    /// reaches the others after `epsilon` while the attacker's competing
    /// block arrives per the uniform rule. Returns the average fraction
    /// of defenders that saw the attacker's block first.
    pub fn staged_race_win_fraction(&self, races: u64, seed: u64) -> Option<f64> {
        let NetworkModel::Attacker { n, epsilon, .. } = *self else {
            return None;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let defenders = (n - 1) as u64;
        let mut total = 0.0;
        for _ in 0..races {
            let miner = 1 + (rng.gen::<u64>() % defenders) as u32;
            let mut wins = 0u32;
            for d in 1..n as u32 {
                if d == miner {
                    continue; // the miner of the competing block never switches
                }
                if self.delay(0, d, &mut rng) < epsilon {
                    wins += 1;
                }
            }
            total += wins as f64 / defenders as f64;
        }
        Some(total / races as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_delay_is_constant() {
        let net = NetworkModel::uniform(6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (s, d) in [(0, 1), (1, 0), (3, 7)] {
            assert_eq!(net.delay(s, d, &mut rng), 6.0);
        }
    }

    #[test]
    fn attacker_receives_instantly() {
        let net = NetworkModel::attacker(32, 1e-6, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for src in 1..32 {
            assert_eq!(net.delay(src, 0, &mut rng), 0.0);
        }
        assert_eq!(net.delay(1, 2, &mut rng), 1e-6);
    }

    #[test]
    fn construction_rejects_small_networks() {
        assert!(NetworkModel::attacker(21, 1e-6, 0.95).is_err());
        assert!(NetworkModel::attacker(22, 1e-6, 0.95).is_ok());
        assert!(NetworkModel::attacker(32, 1e-6, 1.0).is_err());
    }

    #[test]
    fn race_advantage_matches_gamma() {
        let net = NetworkModel::attacker(32, 1e-6, 0.5).unwrap();
        let frac = net.staged_race_win_fraction(10_000, 17).unwrap();
        assert!((frac - 0.5).abs() < 0.02, "got {frac}");
    }
}
