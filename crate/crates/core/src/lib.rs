//! Hybrid ARQ with quantized channel-state feedback over iid block fading.
//!
//! The crate covers the capacity limits that bracket such protocols
//! (ergodic and outage capacity with partial CSI), the probability machinery
//! for combining receivers, analytic throughput of threshold-based HARQ
//! plans, a slot-level Monte Carlo simulator and the optimizers that tie them
//! together. All rates are in nats per channel use.

// Guards like `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod fading;
pub mod optimizer;
pub mod order_stats;
pub mod protocol;
pub mod quadrature;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use fading::{rayleigh_model, FadingModel, Rayleigh};
pub use special::{e1, exp_e1};
