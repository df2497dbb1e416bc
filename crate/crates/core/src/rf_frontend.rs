//! Complex-impedance arithmetic, the two-element L-C matching network, and a
//! deterministic numerical tuner.
//!
//! The network is lossless: delivered power is the available power reduced by
//! the reflection at the input port only.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A one-port impedance in series form (R + jX), ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impedance {
    pub resistance: f64,
    pub reactance: f64,
}

impl Impedance {
    pub fn new(resistance: f64, reactance: f64) -> Self {
        Impedance {
            resistance,
            reactance,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.resistance, self.reactance)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Impedance {
            resistance: z.re,
            reactance: z.im,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.to_complex().norm()
    }

    /// Parallel-form resistance |Z|^2 / R: the resistance that sets the
    /// voltage swing for a given power flowing into this impedance.
    pub fn parallel_resistance(&self) -> f64 {
        let z = self.to_complex();
        z.norm_sqr() / self.resistance
    }
}

/// Which side of the series inductor the shunt capacitor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Source - series L - (shunt C in parallel with the load).
    #[serde(rename = "series-l-shunt-c-at-load")]
    SeriesLShuntCAtLoad,
    /// (Shunt C across the source side) - series L - load.
    #[serde(rename = "shunt-c-at-source-series-l")]
    ShuntCAtSourceSeriesL,
}

/// Two-element matching network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingNetwork {
    pub l_henries: f64,
    pub c_farads: f64,
    pub topology: Topology,
}

impl MatchingNetwork {
    pub fn new(l_henries: f64, c_farads: f64, topology: Topology) -> Result<Self> {
        if !(l_henries >= 0.0) || !(c_farads >= 0.0) {
            return Err(Error::config(format!(
                "matching network components must be non-negative, got L = {l_henries} H, C = {c_farads} F"
            )));
        }
        Ok(MatchingNetwork {
            l_henries,
            c_farads,
            topology,
        })
    }
}

/// Harvester antenna: gain plus the port reference impedance. Treated as
/// ideal (frequency-flat) so the matching network and rectifier carry all of
/// the frequency selectivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaModel {
    pub gain_dbi: f64,
    pub z0: Impedance,
}

impl AntennaModel {
    pub fn new(gain_dbi: f64, z0: Impedance) -> Result<Self> {
        if !(z0.resistance > 0.0) {
            return Err(Error::config(format!(
                "antenna reference impedance must have R > 0, got {}",
                z0.resistance
            )));
        }
        Ok(AntennaModel { gain_dbi, z0 })
    }
}

fn parallel(a: Complex64, b_admittance: Complex64) -> Complex64 {
    // Combine via admittances; a C of zero is an open shunt.
    let y = 1.0 / a + b_admittance;
    1.0 / y
}

/// Input impedance of the network terminated by `z_load` at `freq_hz`.
pub fn network_input_impedance(
    net: &MatchingNetwork,
    z_load: Impedance,
    freq_hz: f64,
) -> Result<Impedance> {
    if !(freq_hz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0 Hz, got {freq_hz}"
        )));
    }
    let w = 2.0 * PI * freq_hz;
    let zl = z_load.to_complex();
    let jwl = Complex64::new(0.0, w * net.l_henries);
    let ywc = Complex64::new(0.0, w * net.c_farads);
    let z_in = match net.topology {
        Topology::SeriesLShuntCAtLoad => jwl + parallel(zl, ywc),
        Topology::ShuntCAtSourceSeriesL => parallel(jwl + zl, ywc),
    };
    Ok(Impedance::from_complex(z_in))
}

/// Invert `network_input_impedance`: the load that the given network
/// transforms into `z_in_target` at `freq_hz`.
pub fn back_solve_load(
    net: &MatchingNetwork,
    z_in_target: Impedance,
    freq_hz: f64,
) -> Result<Impedance> {
    if !(freq_hz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0 Hz, got {freq_hz}"
        )));
    }
    let w = 2.0 * PI * freq_hz;
    let zt = z_in_target.to_complex();
    let jwl = Complex64::new(0.0, w * net.l_henries);
    let ywc = Complex64::new(0.0, w * net.c_farads);
    let zl = match net.topology {
        Topology::SeriesLShuntCAtLoad => {
            let zp = zt - jwl;
            let yl = 1.0 / zp - ywc;
            1.0 / yl
        }
        Topology::ShuntCAtSourceSeriesL => {
            let ys = 1.0 / zt - ywc;
            1.0 / ys - jwl
        }
    };
    let load = Impedance::from_complex(zl);
    if !(load.resistance > 0.0) || !load.resistance.is_finite() {
        return Err(Error::numeric(format!(
            "back-solved load is not passive: R = {}",
            load.resistance
        )));
    }
    Ok(load)
}

/// Reflection coefficient magnitude and return loss against `z0`.
///
/// Return loss is capped at 100 dB once |gamma| drops below 1e-5.
pub fn reflection_and_return_loss(z_in: Impedance, z0: Impedance) -> Result<(f64, f64)> {
    if !(z0.resistance > 0.0) {
        return Err(Error::domain(format!(
            "reference impedance must have R > 0, got {}",
            z0.resistance
        )));
    }
    let num = z_in.to_complex() - z0.to_complex();
    let den = z_in.to_complex() + z0.to_complex();
    if den.norm() == 0.0 {
        return Err(Error::domain(
            "degenerate port: z_in = -z0 has no reflection coefficient".to_string(),
        ));
    }
    let gamma = (num / den).norm();
    let rl_db = if gamma < 1e-5 {
        100.0
    } else {
        -20.0 * gamma.log10()
    };
    Ok((gamma, rl_db))
}

/// Power transferred past a lossless network with input reflection `gamma_mag`.
pub fn delivered_power(p_available_w: f64, gamma_mag: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&gamma_mag));
    p_available_w * (1.0 - gamma_mag * gamma_mag)
}

const L_MAX: f64 = 100e-9;
const C_MAX: f64 = 100e-12;
const GRID_POINTS: usize = 64;
/// Above this residual reflection the load is reported untunable.
const UNTUNABLE_GAMMA: f64 = 0.1;

fn gamma_of(l: f64, c: f64, topology: Topology, z_load: Impedance, freq_hz: f64, z0: Impedance) -> f64 {
    let net = MatchingNetwork {
        l_henries: l,
        c_farads: c,
        topology,
    };
    match network_input_impedance(&net, z_load, freq_hz) {
        Ok(z_in) => match reflection_and_return_loss(z_in, z0) {
            Ok((g, _)) => g,
            Err(_) => 1.0,
        },
        Err(_) => 1.0,
    }
}

/// Closed-form L-match solutions for a real reference resistance, used to
/// seed the numeric refinement. Returns (L, C, topology) triples that are
/// feasible with non-negative components; the refinement polishes them and
/// absorbs any reactive part of z0.
fn analytic_candidates(z_load: Impedance, freq_hz: f64, z0: Impedance) -> Vec<(f64, f64, Topology)> {
    let w = 2.0 * PI * freq_hz;
    let r0 = z0.resistance;
    let mut out = Vec::new();

    // Shunt C at the load, series L toward the source: bring the parallel
    // section's real part to r0, cancel the residue with the inductor.
    let y = 1.0 / z_load.to_complex();
    let (g, b) = (y.re, y.im);
    let d = g / r0 - g * g;
    if d >= 0.0 {
        for b_t in [d.sqrt(), -d.sqrt()] {
            let wc = b_t - b;
            let wl = b_t / (g * g + b_t * b_t);
            if wc >= 0.0 && wl >= 0.0 {
                out.push((wl / w, wc / w, Topology::SeriesLShuntCAtLoad));
            }
        }
    }

    // Series L at the load side, shunt C across the source: bring the series
    // section's conductance to 1/r0, cancel the susceptance with the cap.
    let (r, x) = (z_load.resistance, z_load.reactance);
    let d2 = r * (r0 - r);
    if d2 >= 0.0 {
        let x_t = d2.sqrt();
        let wl = x_t - x;
        let wc = x_t / (r * r + x_t * x_t);
        if wl >= 0.0 && wc >= 0.0 {
            out.push((wl / w, wc / w, Topology::ShuntCAtSourceSeriesL));
        }
    }

    out.retain(|&(l, c, _)| l <= L_MAX && c <= C_MAX);
    out
}

/// Axis of {0} plus log-spaced points up to `max`.
fn log_axis(min_positive: f64, max: f64, points: usize) -> Vec<f64> {
    let mut axis = Vec::with_capacity(points);
    axis.push(0.0);
    let n = points - 1;
    let ratio = (max / min_positive).ln();
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        axis.push(min_positive * (ratio * t).exp());
    }
    axis
}

/// Candidate ordering: smaller |gamma| wins; ties prefer lower L, then lower C.
fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    (a.0, a.1, a.2) < (b.0, b.1, b.2)
}

fn refine(
    mut l: f64,
    mut c: f64,
    topology: Topology,
    z_load: Impedance,
    freq_hz: f64,
    z0: Impedance,
) -> (f64, f64, f64) {
    let mut g = gamma_of(l, c, topology, z_load, freq_hz, z0);
    let mut step = 0.5;
    let mut guard = 0;
    while step > 1e-6 && guard < 4000 {
        guard += 1;
        let mut improved = false;
        // L axis, then C axis: multiplicative probes plus an additive probe so
        // a zero coordinate can leave the origin.
        for axis in 0..2 {
            let (v, add_scale, vmax) = if axis == 0 {
                (l, 1e-9, L_MAX)
            } else {
                (c, 1e-12, C_MAX)
            };
            let candidates = [
                v * (1.0 + step),
                v * (1.0 - step),
                v + step * add_scale,
                (v - step * add_scale).max(0.0),
            ];
            let mut best = (g, l, c);
            for cand in candidates {
                if !(0.0..=vmax).contains(&cand) {
                    continue;
                }
                let (lt, ct) = if axis == 0 { (cand, c) } else { (l, cand) };
                let gt = gamma_of(lt, ct, topology, z_load, freq_hz, z0);
                if better((gt, lt, ct), best) {
                    best = (gt, lt, ct);
                }
            }
            if better(best, (g, l, c)) {
                g = best.0;
                l = best.1;
                c = best.2;
                improved = true;
            }
        }
        if !improved {
            step *= 0.4;
        }
    }
    (g, l, c)
}

/// A tuner solution: the network and the reflection magnitude it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneResult {
    pub network: MatchingNetwork,
    pub gamma_mag: f64,
}

/// Find the L-C network minimizing |gamma| for `z_load` at `freq_hz`.
///
/// Coarse log grid over both topologies, then coordinate descent with a
/// relative step shrinking to 1e-6. Fully deterministic; ties break toward
/// lower L, then lower C, then the series-L/shunt-C-at-load topology.
///
/// Two-element networks cannot match arbitrarily high-Q loads within the
/// component bounds (0-100 nH, 0-100 pF); such loads come back as
/// `Error::Untunable` carrying the best network found.
pub fn tune(z_load: Impedance, freq_hz: f64, z0: Impedance) -> Result<TuneResult> {
    if !(z_load.resistance > 0.0) {
        return Err(Error::domain(format!(
            "load must have positive resistance, got {}",
            z_load.resistance
        )));
    }
    if !(freq_hz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0 Hz, got {freq_hz}"
        )));
    }

    let l_axis = log_axis(0.01e-9, L_MAX, GRID_POINTS);
    let c_axis = log_axis(0.001e-12, C_MAX, GRID_POINTS);
    let analytic = analytic_candidates(z_load, freq_hz, z0);

    let mut overall: Option<(f64, f64, f64, Topology)> = None;
    for topology in [Topology::SeriesLShuntCAtLoad, Topology::ShuntCAtSourceSeriesL] {
        let mut seeds: Vec<(f64, f64)> = Vec::new();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for &l in &l_axis {
            for &c in &c_axis {
                let g = gamma_of(l, c, topology, z_load, freq_hz, z0);
                if better((g, l, c), best) {
                    best = (g, l, c);
                }
            }
        }
        seeds.push((best.1, best.2));
        seeds.extend(
            analytic
                .iter()
                .filter(|(_, _, t)| *t == topology)
                .map(|&(l, c, _)| (l, c)),
        );
        for (l0, c0) in seeds {
            let refined = refine(l0, c0, topology, z_load, freq_hz, z0);
            let keep = match &overall {
                None => true,
                Some((g, l, c, _)) => better(refined, (*g, *l, *c)),
            };
            if keep {
                overall = Some((refined.0, refined.1, refined.2, topology));
            }
        }
    }

    let (g, l, c, topology) = overall.expect("two topologies were searched");
    let net = MatchingNetwork {
        l_henries: l,
        c_farads: c,
        topology,
    };
    if g > UNTUNABLE_GAMMA {
        return Err(Error::Untunable { gamma: g, best: net });
    }
    Ok(TuneResult {
        network: net,
        gamma_mag: g,
    })
}
