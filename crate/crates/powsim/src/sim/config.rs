//! Run configuration, ingested from JSON or built programmatically.

use crate::bitcoin::Bitcoin;
use crate::bk::Bk;
use crate::protocol::Protocol;
use crate::sim::network::NetworkModel;
use crate::tailstorm::{RewardScheme, Tailstorm};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
    #[error("protocol {0} requires k >= {1}")]
    BadK(String, u32),
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("kappa must list one weight per node ({n} nodes, {got} weights)")]
    KappaLength { n: usize, got: usize },
    #[error("hash rates must be nonnegative with positive sum")]
    BadHashrates,
    #[error("pow rate lambda must be positive")]
    BadLambda,
    #[error("network delay must be nonnegative")]
    BadDelay,
    #[error("gamma must lie in [0, 1)")]
    BadGamma,
    #[error("attacker network needs n > 1/(1-gamma) + 1 (n = {n}, gamma = {gamma})")]
    TooFewNodes { n: usize, gamma: f64 },
    #[error("stop condition must be positive")]
    BadStop,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NetworkConfig {
    /// Constant delay between every pair of distinct nodes.
    Uniform { delay: f64 },
    /// Node 0 is the attacker: it receives everything instantly, the
    /// defenders exchange blocks within `epsilon` seconds, and attacker
    /// broadcasts reach defenders after a uniform random delay calibrated
    /// so that the attacker wins a block race with probability `gamma`.
    /// `epsilon` defaults to 1e-6 of the mining interval.
    Attacker {
        #[serde(default)]
        epsilon: Option<f64>,
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum StopCondition {
    /// Total blocks reified, counting summaries, subblocks, orphans, and
    /// the genesis alike.
    Blocks(u64),
    /// Total proofs-of-work mined.
    Pows(u64),
    /// Simulated seconds.
    Seconds(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    /// bitcoin | tailstorm | tsconst | bk
    pub protocol: String,
    #[serde(default)]
    pub k: Option<u32>,
    /// Reward cap per subblock; defaults to 1.
    #[serde(default)]
    pub c: Option<f64>,
    pub n: usize,
    /// Relative hash rates, one per node.
    pub kappa: Vec<f64>,
    /// Proofs-of-work per second.
    pub lambda: f64,
    pub network: NetworkConfig,
    pub seed: u64,
    pub stop: StopCondition,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::NoNodes);
        }
        if self.kappa.len() != self.n {
            return Err(ConfigError::KappaLength { n: self.n, got: self.kappa.len() });
        }
        if self.kappa.iter().any(|&w| w < 0.0 || !w.is_finite())
            || self.kappa.iter().sum::<f64>() <= 0.0
        {
            return Err(ConfigError::BadHashrates);
        }
        if !(self.lambda > 0.0) {
            return Err(ConfigError::BadLambda);
        }
        match self.stop {
            StopCondition::Blocks(v) | StopCondition::Pows(v) if v == 0 => {
                return Err(ConfigError::BadStop)
            }
            StopCondition::Seconds(t) if !(t > 0.0) => return Err(ConfigError::BadStop),
            _ => {}
        }
        self.protocol_instance()?;
        self.network_model()?;
        Ok(())
    }

    pub fn protocol_instance(&self) -> Result<Box<dyn Protocol>, ConfigError> {
        let c = self.c.unwrap_or(1.0);
        match self.protocol.as_str() {
            "bitcoin" => Ok(Box::new(Bitcoin)),
            "tailstorm" => {
                let k = self.k.unwrap_or(8);
                if k < 2 {
                    return Err(ConfigError::BadK("tailstorm".into(), 2));
                }
                Ok(Box::new(Tailstorm::new(k, c, RewardScheme::Discount)))
            }
            "tsconst" => {
                let k = self.k.unwrap_or(8);
                if k < 2 {
                    return Err(ConfigError::BadK("tsconst".into(), 2));
                }
                Ok(Box::new(Tailstorm::new(k, c, RewardScheme::Constant)))
            }
            "bk" => {
                let k = self.k.unwrap_or(8);
                if k < 1 {
                    return Err(ConfigError::BadK("bk".into(), 1));
                }
                Ok(Box::new(Bk::new(k)))
            }
            other => Err(ConfigError::UnknownProtocol(other.to_string())),
        }
    }

    pub fn network_model(&self) -> Result<NetworkModel, ConfigError> {
        match self.network {
            NetworkConfig::Uniform { delay } => NetworkModel::uniform(delay),
            NetworkConfig::Attacker { epsilon, gamma } => {
                let eps = epsilon.unwrap_or(1e-6 / self.lambda);
                NetworkModel::attacker(self.n, eps, gamma)
            }
        }
    }

    /// Canonical single-line description, used for config hashing in
    /// result files.
    pub fn canonical_string(&self) -> String {
        serde_json::to_string(self).expect("serialize config")
    }
}
