//! Deterministic behavioral simulator of a UHF RFID energy-harvesting power
//! chain: link budget, L-C matching, Schottky voltage multiplier, SOI charge
//! pump with hysteresis, storage capacitor, and MCU load, plus a pump-less
//! reference variant for A/B comparison.

// Validation uses `!(x > 0.0)` instead of `x <= 0.0` so that NaN fails the
// check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod link_budget;
pub mod power_chain;
pub mod preset;
pub mod rectifier;
pub mod rf_frontend;
pub mod sim_harness;
pub mod units;

pub use error::{Error, Result};
