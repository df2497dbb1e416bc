//! Behavioral model of the N-stage Schottky voltage multiplier and a
//! deterministic calibration fitter.
//!
//! The multiplier is reduced to two limits evaluated at its DC output port:
//!
//! * voltage limit — the cascade can sustain at most
//!   `V = 2N (V_p - V_D(I))` where `V_p = loss_factor * sqrt(2 P R_eff)` is
//!   the RF peak swing at the multiplier input and `V_D` is the diode drop
//!   at the output current;
//! * power limit — DC output plus diode dissipation cannot exceed the RF
//!   power that survives the loss factor:
//!   `I (V + 2N V_D(I)) <= loss_factor^2 * P`.
//!
//! The output current at a given port voltage is the smaller of the two
//! limits, which keeps conversion efficiency inside [0, 1] for every
//! parameter set. `R_eff` is the parallel-form resistance of the input
//! impedance, i.e. the voltage level the matched network develops across the
//! multiplier input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rf_frontend::Impedance;

/// Exponential-diode parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams {
    /// Saturation current, amps.
    pub i_s: f64,
    /// Ideality factor.
    pub ideality: f64,
    /// Series resistance, ohms.
    pub r_s: f64,
    /// Thermal voltage, volts.
    pub v_t: f64,
}

impl DiodeParams {
    /// Datasheet-typical values for a zero-bias UHF Schottky detector diode.
    /// These are defaults for configuration, not published measurements.
    pub fn zero_bias_schottky() -> Self {
        DiodeParams {
            i_s: 3e-6,
            ideality: 1.06,
            r_s: 25.0,
            v_t: 25.85e-3,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.i_s > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.i_s: saturation current must be > 0, got {}",
                self.i_s
            )));
        }
        if !(self.ideality >= 1.0 && self.ideality <= 2.0) {
            return Err(Error::config(format!(
                "{prefix}.ideality: must be in [1, 2], got {}",
                self.ideality
            )));
        }
        if !(self.r_s > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.r_s: series resistance must be > 0, got {}",
                self.r_s
            )));
        }
        if !(self.v_t > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.v_t: thermal voltage must be > 0, got {}",
                self.v_t
            )));
        }
        Ok(())
    }

    /// Forward drop at current `i` (amps): n Vt ln(1 + I/Is) + I Rs.
    pub fn drop_at(&self, i: f64) -> f64 {
        self.ideality * self.v_t * (1.0 + i / self.i_s).ln() + i * self.r_s
    }

    /// Current at forward drop `v`. Monotone inverse of `drop_at`, solved by
    /// bisection with an expanding upper bracket.
    pub fn current_at(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let mut hi = self.i_s.max(1e-6);
        let mut guard = 0;
        while self.drop_at(hi) < v && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.drop_at(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// N-stage voltage-multiplier model with its calibration constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectifierModel {
    pub stages: u32,
    pub diode: DiodeParams,
    /// DC load used for the loaded operating point, ohms.
    pub load_ohms: f64,
    /// Input impedance at the design frequency and power.
    pub input_impedance: Impedance,
    /// Lumped calibration scalar in (0, 1] absorbing parasitics.
    pub loss_factor: f64,
    /// Reactance slope of the input impedance around the design frequency,
    /// expressed as an effective resonator Q. Behavioral, not derived from
    /// junction physics.
    pub dispersion_q: f64,
    /// Frequency the input impedance is specified at, Hz.
    pub design_freq_hz: f64,
}

impl RectifierModel {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.stages < 1 {
            return Err(Error::config(format!("{prefix}.stages: must be >= 1")));
        }
        self.diode.validate(&format!("{prefix}.diode"))?;
        if !(self.load_ohms > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.load: must be > 0 ohm, got {}",
                self.load_ohms
            )));
        }
        if !(self.input_impedance.resistance > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.input_impedance: resistance must be > 0, got {}",
                self.input_impedance.resistance
            )));
        }
        if !(self.loss_factor > 0.0 && self.loss_factor <= 1.0) {
            return Err(Error::config(format!(
                "{prefix}.loss_factor: must be in (0, 1], got {}",
                self.loss_factor
            )));
        }
        if !(self.dispersion_q >= 0.0) {
            return Err(Error::config(format!(
                "{prefix}.dispersion_q: must be >= 0, got {}",
                self.dispersion_q
            )));
        }
        if !(self.design_freq_hz > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.design_freq_hz: must be > 0, got {}",
                self.design_freq_hz
            )));
        }
        Ok(())
    }

    /// Input impedance at `freq_hz`: the reactance walks away from the design
    /// point with slope 2 R Q / f0, a series-resonator approximation.
    pub fn input_impedance_at(&self, freq_hz: f64) -> Impedance {
        let z = self.input_impedance;
        let delta = (freq_hz - self.design_freq_hz) / self.design_freq_hz;
        Impedance::new(
            z.resistance,
            z.reactance + 2.0 * z.resistance * self.dispersion_q * delta,
        )
    }

    fn doublings(&self) -> f64 {
        2.0 * self.stages as f64
    }

    /// RF peak swing at the multiplier input for delivered power `p_w`.
    fn peak_swing(&self, p_w: f64) -> f64 {
        self.loss_factor * (2.0 * p_w * self.input_impedance.parallel_resistance()).sqrt()
    }

    /// DC output current available at output voltage `v_out` for delivered
    /// power `p_w`: min of the voltage-limited and power-limited branches.
    pub fn output_current(&self, p_w: f64, v_out: f64) -> f64 {
        if p_w <= 0.0 {
            return 0.0;
        }
        let n2 = self.doublings();
        let vp = self.peak_swing(p_w);

        let budget = vp - v_out / n2;
        if budget <= 0.0 {
            return 0.0;
        }
        let i_voltage = self.diode.current_at(budget);

        // Power branch: I (v_out + 2N V_D(I)) = lf^2 p, monotone in I.
        let p_chain = self.loss_factor * self.loss_factor * p_w;
        let balance = |i: f64| i * (v_out + n2 * self.diode.drop_at(i));
        let mut hi = 1e-6;
        let mut guard = 0;
        while balance(hi) < p_chain && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if balance(mid) < p_chain {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let i_power = 0.5 * (lo + hi);

        i_voltage.min(i_power)
    }

    /// Open-circuit DC voltage: 2N V_p. This is what a high-impedance
    /// monitoring node (a charge-pump input before start-up, or a storage
    /// capacitor near full charge) observes.
    pub fn activation_voltage(&self, p_w: f64) -> f64 {
        if p_w <= 0.0 {
            return 0.0;
        }
        self.doublings() * self.peak_swing(p_w)
    }
}

/// Loaded DC output voltage for delivered power `p_w`.
///
/// Solves `V = R_load * I(V)`. A damped fixed-point pass runs first; if the
/// diode's small-signal slope makes that pass oscillate, a bracketed
/// bisection finishes the job. Both are deterministic.
pub fn rectified_voltage(p_w: f64, model: &RectifierModel) -> Result<f64> {
    if p_w < 0.0 {
        return Err(Error::domain(format!(
            "delivered power must be >= 0, got {p_w}"
        )));
    }
    if p_w == 0.0 {
        return Ok(0.0);
    }
    let r = model.load_ohms;
    let map = |v: f64| r * model.output_current(p_w, v);

    let v_oc = model.activation_voltage(p_w);
    let mut v = map(0.0).min(v_oc);
    let mut converged = false;
    for _ in 0..48 {
        let next = 0.5 * v + 0.5 * map(v);
        if (next - v).abs() < 1e-9 {
            v = next;
            converged = true;
            break;
        }
        v = next;
    }
    if !converged {
        // The damped pass diverges when the diode small-signal resistance
        // undercuts the load line. map(v) - v is strictly decreasing (map is
        // non-increasing, the identity grows), so the root is unique and
        // bracketed by [0, v_oc]; bisection always lands on it.
        let mut lo = 0.0;
        let mut hi = v_oc;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if map(mid) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        v = 0.5 * (lo + hi);
    }
    if !v.is_finite() {
        return Err(Error::numeric(format!(
            "rectifier operating point diverged at p = {p_w} W (last iterate {v})"
        )));
    }
    Ok(v.max(0.0))
}

/// DC conversion efficiency at the loaded operating point.
pub fn conversion_efficiency(p_w: f64, model: &RectifierModel) -> Result<f64> {
    if !(p_w > 0.0) {
        return Err(Error::domain(format!(
            "efficiency needs positive delivered power, got {p_w}"
        )));
    }
    let v = rectified_voltage(p_w, model)?;
    Ok(v * v / (model.load_ohms * p_w))
}

/// One calibration target at a given available (matched) power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CalAnchor {
    /// Open-circuit output must reach `volts` at `p_w`.
    ActivationVoltage { p_w: f64, volts: f64 },
    /// Loaded output must reach `volts` at `p_w`.
    LoadedVoltage { p_w: f64, volts: f64 },
    /// Peak loaded efficiency over powers up to `p_top_w` must equal `eta`.
    PeakEfficiency { p_top_w: f64, eta: f64 },
}

impl CalAnchor {
    fn describe(&self) -> String {
        match self {
            CalAnchor::ActivationVoltage { p_w, volts } => {
                format!("activation voltage {volts} V at {p_w:.3e} W")
            }
            CalAnchor::LoadedVoltage { p_w, volts } => {
                format!("loaded voltage {volts} V at {p_w:.3e} W")
            }
            CalAnchor::PeakEfficiency { p_top_w, eta } => {
                format!("peak efficiency {eta} up to {p_top_w:.3e} W")
            }
        }
    }

    /// Relative residual of the anchor under `model`.
    fn residual(&self, model: &RectifierModel) -> Result<f64> {
        match *self {
            CalAnchor::ActivationVoltage { p_w, volts } => {
                Ok((model.activation_voltage(p_w) - volts) / volts)
            }
            CalAnchor::LoadedVoltage { p_w, volts } => {
                Ok((rectified_voltage(p_w, model)? - volts) / volts)
            }
            CalAnchor::PeakEfficiency { p_top_w, eta } => {
                // Efficiency is monotone toward the top of the range in the
                // power-limited branch; one probe below the top guards
                // against a mildly interior peak.
                let peak = conversion_efficiency(p_top_w, model)?
                    .max(conversion_efficiency(p_top_w / 4.0, model)?);
                Ok((peak - eta) / eta)
            }
        }
    }
}

/// Residual report accompanying a calibrated model.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub residuals: Vec<(String, f64)>,
    pub worst_abs: f64,
}

const CAL_RESIDUAL_TOL: f64 = 1e-3;
const CAL_FEASIBILITY_LIMIT: f64 = 0.02;

/// Sum of squared relative residuals; smooth, so the alternating line
/// searches below do not stall on the ridge a max-residual objective has.
fn cal_objective(anchors: &[CalAnchor], model: &RectifierModel) -> f64 {
    let mut ssq = 0.0;
    for a in anchors {
        match a.residual(model) {
            Ok(r) => ssq += r * r,
            Err(_) => return f64::INFINITY,
        }
    }
    ssq
}

fn ternary_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn with_params(model0: &RectifierModel, loss_factor: f64, scale: f64) -> RectifierModel {
    let z0 = model0.input_impedance;
    RectifierModel {
        loss_factor,
        input_impedance: Impedance::new(z0.resistance * scale, z0.reactance * scale),
        ..*model0
    }
}

/// Fit `loss_factor` and an input-impedance scale so every anchor is met.
///
/// Deterministic: a fixed grid over (loss_factor, scale) followed by
/// coordinate descent with the same tie-break rule as the network tuner
/// (lower scale, then higher loss factor on exact ties). Returns the
/// calibrated model and per-anchor residuals; an anchor set that cannot be
/// brought within 2% yields `Error::Calibration` naming the worst anchor.
pub fn calibrate(
    anchors: &[CalAnchor],
    model0: &RectifierModel,
) -> Result<(RectifierModel, CalibrationReport)> {
    if anchors.is_empty() {
        return Err(Error::domain("calibration needs at least one anchor".to_string()));
    }

    let report_for = |model: &RectifierModel| -> Result<CalibrationReport> {
        let mut residuals = Vec::with_capacity(anchors.len());
        let mut worst: f64 = 0.0;
        for a in anchors {
            let r = a.residual(model)?;
            worst = worst.max(r.abs());
            residuals.push((a.describe(), r));
        }
        Ok(CalibrationReport {
            residuals,
            worst_abs: worst,
        })
    };

    // Anchors already satisfied: hand the model back untouched.
    let initial = report_for(model0)?;
    if initial.worst_abs <= CAL_RESIDUAL_TOL {
        return Ok((*model0, initial));
    }

    let mut best = (f64::INFINITY, 1.0f64, 1.0f64);
    let consider = |best: &mut (f64, f64, f64), obj: f64, lf: f64, s: f64| {
        if (obj, s, -lf) < (best.0, best.1, -best.2) {
            *best = (obj, lf, s);
        }
    };

    for i in 0..32 {
        let lf = 0.02 + 0.98 * (i as f64 / 31.0);
        for j in 0..32 {
            let s = 10f64.powf(-2.0 + 5.0 * (j as f64 / 31.0));
            let obj = cal_objective(anchors, &with_params(model0, lf, s));
            consider(&mut best, obj, lf, s);
        }
    }

    // Alternating ternary line searches; both slices of the objective are
    // unimodal because every residual is monotone per parameter.
    let (_, mut lf, mut s) = best;
    const LF_LO: f64 = 0.02;
    const LF_HI: f64 = 1.0;
    const LN_S_SPAN: f64 = 3.5;
    for _ in 0..10 {
        let eval_lf = |x: f64| cal_objective(anchors, &with_params(model0, x, s));
        lf = ternary_min(eval_lf, LF_LO, LF_HI, 48);
        let ln_s = s.ln();
        let eval_s = |x: f64| cal_objective(anchors, &with_params(model0, lf, x.exp()));
        s = ternary_min(eval_s, ln_s - LN_S_SPAN, ln_s + LN_S_SPAN, 48).exp();
    }

    let model = with_params(model0, lf, s);
    let report = report_for(&model)?;
    if report.worst_abs > CAL_FEASIBILITY_LIMIT {
        let worst = report
            .residuals
            .iter()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("at least one anchor");
        return Err(Error::Calibration {
            residual: worst.1,
            anchor: worst.0.clone(),
        });
    }
    Ok((model, report))
}
