//! Power levels and dB/linear conversions.
//!
//! All internal arithmetic is carried out in linear watts; decibel views are
//! applied only at I/O boundaries so log/antilog round-off does not compound
//! through the chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Convert a linear ratio (or power in consistent units) to decibels.
///
/// Fails for non-positive input, where the logarithm is undefined.
pub fn to_db(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::domain(format!(
            "to_db requires a positive finite input, got {x}"
        )));
    }
    Ok(10.0 * x.log10())
}

/// Convert decibels back to a linear ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A non-negative power in watts with dBm views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLevel {
    watts: f64,
}

impl PowerLevel {
    pub const ZERO: PowerLevel = PowerLevel { watts: 0.0 };

    pub fn from_watts(watts: f64) -> Result<Self> {
        if watts < 0.0 || !watts.is_finite() {
            return Err(Error::domain(format!(
                "power must be a non-negative finite value, got {watts} W"
            )));
        }
        Ok(PowerLevel { watts })
    }

    pub fn from_dbm(dbm: f64) -> Self {
        PowerLevel {
            watts: from_db(dbm) * 1e-3,
        }
    }

    pub fn watts(&self) -> f64 {
        self.watts
    }

    /// dBm view. Zero power maps to negative infinity (the mathematical
    /// limit); the dBm view is only meaningful for positive power.
    pub fn dbm(&self) -> f64 {
        if self.watts == 0.0 {
            f64::NEG_INFINITY
        } else {
            10.0 * (self.watts * 1e3).log10()
        }
    }
}
