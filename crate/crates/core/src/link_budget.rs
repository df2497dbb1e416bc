//! Free-space link arithmetic: forward received power, inversion for
//! sensitivity and range, and a generalized path-loss exponent.
//!
//! The forward model is
//!
//! ```text
//! P_rx = EIRP * G_rx * plf * (lambda / (4 pi d))^n
//! ```
//!
//! with `n = 2` reproducing the free-space transmission equation exactly.
//! The exponent is exposed because measured indoor range ratios are not
//! generally consistent with free space; see `exponent_for_range`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{from_db, PowerLevel, C_LIGHT};

/// Transmitter-to-harvester link parameters.
///
/// `eirp_w` folds the transmit power and transmit antenna gain together;
/// `g_rx_dbi` is the harvester antenna gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub eirp_w: f64,
    pub g_rx_dbi: f64,
    pub freq_hz: f64,
    /// Polarization loss factor, in (0, 1]. 0.5 for a circularly polarized
    /// source feeding a linear antenna.
    pub plf: f64,
    /// Path-loss exponent; 2 is free space.
    pub path_loss_exponent: f64,
}

impl LinkParams {
    pub fn new(
        eirp_w: f64,
        g_rx_dbi: f64,
        freq_hz: f64,
        plf: f64,
        path_loss_exponent: f64,
    ) -> Result<Self> {
        let lp = LinkParams {
            eirp_w,
            g_rx_dbi,
            freq_hz,
            plf,
            path_loss_exponent,
        };
        lp.validate("link")?;
        Ok(lp)
    }

    /// Check invariants, reporting violations with `prefix`-qualified paths.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.eirp_w >= 0.0) || !self.eirp_w.is_finite() {
            return Err(Error::config(format!(
                "{prefix}.eirp: must be >= 0 W, got {}",
                self.eirp_w
            )));
        }
        if !(self.freq_hz > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.frequency: must be > 0 Hz, got {}",
                self.freq_hz
            )));
        }
        if !(self.plf > 0.0 && self.plf <= 1.0) {
            return Err(Error::config(format!(
                "{prefix}.plf: polarization loss factor must be in (0, 1], got {}",
                self.plf
            )));
        }
        if !(self.path_loss_exponent >= 0.5) {
            return Err(Error::config(format!(
                "{prefix}.path_loss_exponent: must be >= 0.5, got {}",
                self.path_loss_exponent
            )));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        C_LIGHT / self.freq_hz
    }

    /// EIRP * G_rx * plf, the isotropic-equivalent power available before
    /// the spreading factor.
    fn effective_source_w(&self) -> f64 {
        self.eirp_w * from_db(self.g_rx_dbi) * self.plf
    }
}

/// Received (available) power at the harvester antenna port.
pub fn received_power(link: &LinkParams, distance_m: f64) -> Result<PowerLevel> {
    if !(distance_m > 0.0) {
        return Err(Error::domain(format!(
            "distance must be > 0 m, got {distance_m}"
        )));
    }
    let spreading = link.wavelength_m() / (4.0 * std::f64::consts::PI * distance_m);
    let p = link.effective_source_w() * spreading.powf(link.path_loss_exponent);
    PowerLevel::from_watts(p)
}

/// Sensitivity implied by the minimum transmit power that activates the
/// harvester: the available power at the device port for that drive level.
pub fn sensitivity_from_activation(
    p_tx_on_w: f64,
    g_tx_dbi: f64,
    link: &LinkParams,
    distance_m: f64,
) -> Result<PowerLevel> {
    if !(p_tx_on_w > 0.0) {
        return Err(Error::domain(format!(
            "activation transmit power must be > 0 W, got {p_tx_on_w}"
        )));
    }
    let eirp_on = p_tx_on_w * from_db(g_tx_dbi);
    let link_on = LinkParams {
        eirp_w: eirp_on,
        ..*link
    };
    received_power(&link_on, distance_m)
}

/// Maximum distance at which the received power still meets `sensitivity`.
///
/// Exact inverse of `received_power` for any exponent.
pub fn max_range(link: &LinkParams, sensitivity: PowerLevel) -> Result<f64> {
    let s = sensitivity.watts();
    if !(s > 0.0) {
        return Err(Error::domain(
            "zero sensitivity implies infinite range".to_string(),
        ));
    }
    let k = link.effective_source_w();
    if !(k > 0.0) {
        return Err(Error::domain(
            "eirp * g_rx * plf must be > 0 to invert the link".to_string(),
        ));
    }
    let lam_over_4pi = link.wavelength_m() / (4.0 * std::f64::consts::PI);
    Ok(lam_over_4pi * (k / s).powf(1.0 / link.path_loss_exponent))
}

/// Range ratio implied by a sensitivity gap of `delta_db` at exponent `n`.
pub fn range_ratio_from_gap(delta_db: f64, n: f64) -> f64 {
    10f64.powf(delta_db / (10.0 * n))
}

/// Solve for the exponent that places `max_range` at `target_range_m` for
/// the given sensitivity. Used to fit the single path-loss knob to a
/// measured range.
pub fn exponent_for_range(
    link: &LinkParams,
    sensitivity: PowerLevel,
    target_range_m: f64,
) -> Result<f64> {
    let s = sensitivity.watts();
    if !(s > 0.0) || !(target_range_m > 0.0) {
        return Err(Error::domain(
            "exponent fit needs positive sensitivity and range".to_string(),
        ));
    }
    let k = link.effective_source_w();
    let lam_over_4pi = link.wavelength_m() / (4.0 * std::f64::consts::PI);
    let ratio = target_range_m / lam_over_4pi;
    if ratio <= 1.0 {
        return Err(Error::domain(
            "target range must exceed lambda/4pi for a meaningful exponent".to_string(),
        ));
    }
    Ok((k / s).ln() / ratio.ln())
}
