//! Throughput and sum-rate analysis of saturated slotted Aloha over Rayleigh
//! fading, for collision, capture, ordered-SIC and unordered-SIC receivers.
//!
//! The analytic side lives in [`receivers`], [`hol`] and [`optimize`]; the
//! Monte Carlo cross-check lives in [`sim`]. All quantities are on a linear
//! scale; decibels are a front-end concern.

pub mod error;
pub mod hol;
pub mod optimize;
pub mod receivers;
pub mod rng;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};
pub use hol::{p_saturated, stationary_distribution, HolStationary, NetworkConfig};
pub use optimize::{
    collision_optimum, ergodic_sum_capacity, lambda_max, mu_zero, rho_zero, sum_rate, sum_rate_max, sum_rate_max_full,
    throughput, throughput_derivative, Branch, OperatingPoint, ThresholdDiagnostics,
};
pub use receivers::{success_curve, DecodeLayerProb, Receiver, ReceiverModel, ReceiverRegistry, SuccessCurve};
pub use sim::{decode_slot, simulate, SimOptions, SimStats, SlotOutcome};
pub use specfun::Probability;

/// Library version, recorded alongside generated artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
