//! Distributed downlink beamforming across networked LEO satellites.
//!
//! The crate is organised bottom-up:
//!
//! - [`config`] and [`scenario`] describe the system and generate reproducible geometry.
//! - [`channel`] builds statistical CSI (path loss, Rician moments, steering vectors).
//! - [`schedule`] performs distance-based user scheduling and the steering-vector
//!   analog beamformer, producing the effective channels seen by the digital stage.
//! - [`rate`] evaluates the hardening bound, its decentralizable approximation and a
//!   Monte-Carlo ergodic-rate reference.
//! - [`qcqp`] holds the numerical kernels shared by all optimizers.
//! - [`wmmse`], [`ring`] and [`star`] are the centralized and the two decentralized
//!   WMMSE solvers; [`baselines`] provides MRT, ZF and the single-satellite variants.
//! - [`isl`] keeps the inter-satellite message ledger and latency/overhead accounting.
//! - [`pipeline`] and [`experiment`] wire everything into reproducible sweeps.

// `!(x > 0.0)` also rejects NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod beamformer;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod intermediates;
pub mod isl;
pub mod pipeline;
pub mod qcqp;
pub mod rate;
pub mod ring;
pub mod rng;
pub mod scenario;
pub mod schedule;
pub mod star;
pub mod wmmse;

pub use beamformer::BeamformerSet;
pub use channel::{ChannelStats, NoiseModel};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use intermediates::Intermediates;
pub use scenario::Scenario;
pub use schedule::{AnalogBeamformer, Schedule};

/// Complex double used for all baseband quantities.
pub type C64 = num_complex::Complex64;
