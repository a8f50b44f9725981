//! Discrete-event simulator and analysis toolkit for proof-of-work
//! consensus protocols.
//!
//! The crate models a network of mining nodes as a single-threaded
//! virtual environment: blocks live in an append-only DAG, communication
//! is delayed visibility, and a protocol is a bundle of four pure
//! functions (root, validate, update, extend). Bitcoin, Tailstorm (with
//! depth-discounted or constant rewards), and the parallel-PoW protocol
//! with leader election are provided, along with selfish-mining style
//! attack policies, reward metrics, and batch experiment drivers.

pub mod attacks;
pub mod bitcoin;
pub mod bk;
pub mod dag;
pub mod experiments;
pub mod metrics;
pub mod protocol;
pub mod sim;
pub mod tailstorm;

pub use dag::{Block, BlockId, BlockTemplate, DagStore, DagView, ProtocolFields, GENESIS};
pub use protocol::{Protocol, UpdateOutcome};
pub use sim::{run, run_with_policy, RunResult, SimConfig, Simulation};
