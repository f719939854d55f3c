//! Discrete-time simulator and algorithm library for decentralized,
//! personalized federated caching of VR fields of view at edge base stations.
//!
//! The crate is organized around six pieces:
//! - [`types`]: tile grids, topologies, demand/strategy matrices, metrics rows;
//! - [`metrics`]: the cache-hit quality model and its diagnostics (regret,
//!   disparity, divergence, variance, the high-probability error term);
//! - [`strategy`]: temporal/user/BS weighted strategy combination and the
//!   simplex projections;
//! - [`optimizer`]: the per-slot decentralized caching rounds with one-bit
//!   gradient exchange and the delay-aware variant;
//! - [`channel`]: Rayleigh fading, multicast/unicast grouping, SINR rates and
//!   the delay decomposition;
//! - [`trace`]: head-orientation geometry, trace ingestion, and the synthetic
//!   demand generator;
//! - [`harness`]: experiment orchestration, baselines, sweeps and reports.
//!
//! See the crate examples for runnable entry points into each capability.

pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod strategy;
pub mod trace;
pub mod types;

pub use error::{Error, Result};
