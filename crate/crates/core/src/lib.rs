//! Threshold-based connection admission control at an OFDMA subscriber
//! station.
//!
//! A single finite queue aggregates the uplink traffic of all admitted
//! connections. Each connection sends packets as a two-state MMPP, new
//! connections arrive as a Poisson process and are refused once the
//! threshold is reached, and the queue drains over `S` subchannels whose
//! per-frame capacity follows an AMC table under Nakagami fading.
//!
//! The crate builds the frame-level Markov chain over
//! (phase, queue length, connections), solves its stationary law, derives
//! blocking, occupancy, drop, throughput and delay measures, and
//! cross-checks them with a seeded Monte-Carlo simulator.

pub mod chain;
pub mod channel;
pub mod config;
pub mod error;
pub mod metrics;
pub mod mmpp;
pub mod pmf;
pub mod run;
pub mod sim;
pub mod solver;
pub mod traffic;

pub use config::{parse_config, SystemConfig};
pub use error::{Error, Result};
