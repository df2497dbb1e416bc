//! End-to-end composition: link -> matching network -> rectifier -> power
//! chain, with sweeps over distance, frequency, or drive power, and the
//! with-pump vs pump-less comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_budget::{self, LinkParams};
use crate::power_chain::{
    self, ChainConfig, ChainState, Event, EventKind, Mode, PumpFeed, StorageCap,
};
use crate::rectifier::{self, RectifierModel};
use crate::rf_frontend::{
    delivered_power, network_input_impedance, reflection_and_return_loss, AntennaModel,
    MatchingNetwork,
};
use crate::units::{from_db, PowerLevel};

/// Which half of the comparison a run models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "with-pump")]
    WithPump,
    #[serde(rename = "no-pump")]
    NoPump,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::WithPump => "with-pump",
            Variant::NoPump => "no-pump",
        }
    }
}

/// One complete simulation configuration.
///
/// Each variant carries its own matching network and rectifier calibration;
/// the published measurements re-tuned the network per variant and the
/// operating regimes differ enough that one calibration cannot represent
/// both.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub link: LinkParams,
    pub g_tx_dbi: f64,
    pub distance_m: f64,
    pub antenna: AntennaModel,
    pub network_with_pump: MatchingNetwork,
    pub network_no_pump: MatchingNetwork,
    pub rectifier_with_pump: RectifierModel,
    pub rectifier_no_pump: RectifierModel,
    pub chain: ChainConfig,
    pub capacitance_f: f64,
    pub initial_v: f64,
    pub variant: Variant,
    pub dt_s: f64,
    pub duration_s: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.link.validate("link")?;
        if !(self.distance_m > 0.0) {
            return Err(Error::config(format!(
                "link.distance: must be > 0 m, got {}",
                self.distance_m
            )));
        }
        self.rectifier_with_pump.validate("rectifier")?;
        self.rectifier_no_pump.validate("rectifier (no-pump)")?;
        self.chain.validate("chain")?;
        StorageCap::new(self.capacitance_f, self.initial_v)?;
        if !(self.dt_s > 0.0 && self.dt_s <= 1e-3) {
            return Err(Error::config(format!(
                "sim.dt: must be in (0, 1 ms], got {} s",
                self.dt_s
            )));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::config(format!(
                "sim.duration: must be > 0, got {} s",
                self.duration_s
            )));
        }
        Ok(())
    }

    pub fn rectifier(&self, variant: Variant) -> &RectifierModel {
        match variant {
            Variant::WithPump => &self.rectifier_with_pump,
            Variant::NoPump => &self.rectifier_no_pump,
        }
    }

    pub fn network(&self, variant: Variant) -> &MatchingNetwork {
        match variant {
            Variant::WithPump => &self.network_with_pump,
            Variant::NoPump => &self.network_no_pump,
        }
    }

    /// Activation voltage threshold the variant must reach to run.
    pub fn activation_threshold_volts(&self, variant: Variant) -> f64 {
        match variant {
            Variant::WithPump => self.chain.pump.v_start,
            Variant::NoPump => self.chain.supervisor.v_release,
        }
    }
}

/// Sweep axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "distance")]
    Distance,
    #[serde(rename = "frequency")]
    Frequency,
    #[serde(rename = "tx_power")]
    TxPower,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance",
            SweepAxis::Frequency => "frequency",
            SweepAxis::TxPower => "tx_power",
        }
    }
}

/// Sweep range. Units follow the axis: meters, hertz, or dBm of EIRP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start <= self.stop) {
            return Err(Error::config(format!(
                "sweep: start must be <= stop, got {}..{}",
                self.start, self.stop
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::config(format!(
                "sweep.step: must be > 0, got {}",
                self.step
            )));
        }
        let n = (self.stop - self.start) / self.step;
        if !(n <= 1e6) {
            return Err(Error::config(format!(
                "sweep: {n:.0} points exceeds the 1e6 limit"
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        for k in 0..=n {
            pts.push(self.start + k as f64 * self.step);
        }
        pts
    }
}

/// RF operating point of one variant at one sweep position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfPoint {
    pub p_available_w: f64,
    pub gamma: f64,
    pub p_delivered_w: f64,
    /// Open-circuit rectified voltage monitored by the start circuitry.
    pub v_sense: f64,
    /// DC power at the loaded rectifier operating point.
    pub p_dc_w: f64,
    /// End-to-end efficiency: DC out over available RF power (pump loss
    /// included for the with-pump variant).
    pub eta_system: f64,
}

/// RF chain evaluation shared by single runs and sweeps.
pub fn rf_point(s: &Scenario, variant: Variant, freq_hz: f64, p_available_w: f64) -> Result<RfPoint> {
    let rect = s.rectifier(variant);
    let z_rect = rect.input_impedance_at(freq_hz);
    let z_in = network_input_impedance(s.network(variant), z_rect, freq_hz)?;
    let (gamma, _) = reflection_and_return_loss(z_in, s.antenna.z0)?;
    let p_del = delivered_power(p_available_w, gamma);
    let v_sense = rect.activation_voltage(p_del);
    let (p_dc, eta_system) = if p_del > 0.0 {
        let eta_rect = rectifier::conversion_efficiency(p_del, rect)?;
        let p_dc = eta_rect * p_del;
        let eta = match variant {
            Variant::WithPump => s.chain.pump.eta_pump * p_dc / p_available_w,
            Variant::NoPump => p_dc / p_available_w,
        };
        (p_dc, eta)
    } else {
        (0.0, 0.0)
    };
    Ok(RfPoint {
        p_available_w,
        gamma,
        p_delivered_w: p_del,
        v_sense,
        p_dc_w: p_dc,
        eta_system,
    })
}

/// Minimum available power (at the antenna port) that activates the variant,
/// solved in closed form from the open-circuit voltage model and the network
/// mismatch at `freq_hz`.
pub fn activation_threshold(s: &Scenario, variant: Variant, freq_hz: f64) -> Result<PowerLevel> {
    let rect = s.rectifier(variant);
    let v_th = s.activation_threshold_volts(variant);
    // activation_voltage(p) = 2N lf sqrt(2 p R_eff) = v_th
    let n2 = 2.0 * rect.stages as f64;
    let r_eff = rect.input_impedance.parallel_resistance();
    let swing = v_th / (n2 * rect.loss_factor);
    let p_del = swing * swing / (2.0 * r_eff);
    let z_rect = rect.input_impedance_at(freq_hz);
    let z_in = network_input_impedance(s.network(variant), z_rect, freq_hz)?;
    let (gamma, _) = reflection_and_return_loss(z_in, s.antenna.z0)?;
    let transfer = 1.0 - gamma * gamma;
    if !(transfer > 0.0) {
        return Err(Error::numeric(format!(
            "network fully reflective at {freq_hz} Hz"
        )));
    }
    PowerLevel::from_watts(p_del / transfer)
}

/// Minimum EIRP that activates the variant at `distance_m` and `freq_hz`.
pub fn activation_eirp(
    s: &Scenario,
    variant: Variant,
    freq_hz: f64,
    distance_m: f64,
) -> Result<PowerLevel> {
    let p_th = activation_threshold(s, variant, freq_hz)?.watts();
    let link = LinkParams {
        freq_hz,
        ..s.link
    };
    let spreading = (link.wavelength_m() / (4.0 * std::f64::consts::PI * distance_m))
        .powf(link.path_loss_exponent);
    let denom = from_db(link.g_rx_dbi) * link.plf * spreading;
    PowerLevel::from_watts(p_th / denom)
}

/// Energy bookkeeping of one hysteresis cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleEnergy {
    pub t_release_s: f64,
    pub input_j: f64,
    pub load_j: f64,
}

/// Outcome of one timed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rate_hz: f64,
    pub releases: u32,
    pub logs: u32,
    pub brownouts: u32,
    pub input_energy_j: f64,
    pub load_energy_j: f64,
    pub cycle_energies: Vec<CycleEnergy>,
    pub final_v: f64,
    pub final_mode: Mode,
    pub duration_s: f64,
}

/// Steady-state logging rate: logs per second over the last three full
/// cycles, falling back to whatever full cycles exist, zero when no cycle
/// completed. A single release followed by sustained logging (the harvest
/// covers the load continuously) reports the sustained log rate.
pub fn steady_state_rate(events: &[Event]) -> f64 {
    let releases: Vec<f64> = events
        .iter()
        .filter(|e| e.kind == EventKind::Release)
        .map(|e| e.t)
        .collect();
    let logs: Vec<f64> = events
        .iter()
        .filter(|e| e.kind == EventKind::LogComplete)
        .map(|e| e.t)
        .collect();
    if releases.len() >= 2 {
        let span_start = if releases.len() >= 4 {
            releases[releases.len() - 4]
        } else {
            releases[0]
        };
        let span_end = releases[releases.len() - 1];
        let window = span_end - span_start;
        if window <= 0.0 {
            return 0.0;
        }
        let count = logs
            .iter()
            .filter(|&&t| t > span_start && t <= span_end)
            .count();
        count as f64 / window
    } else if releases.len() == 1 && logs.len() >= 2 {
        let span = logs[logs.len() - 1] - logs[0];
        if span > 0.0 {
            (logs.len() - 1) as f64 / span
        } else {
            0.0
        }
    } else {
        0.0
    }
}

fn summarize(state: &ChainState, duration_s: f64, cycle_energies: Vec<CycleEnergy>) -> RunSummary {
    let count = |k: EventKind| state.events.iter().filter(|e| e.kind == k).count() as u32;
    RunSummary {
        rate_hz: steady_state_rate(&state.events),
        releases: count(EventKind::Release),
        logs: count(EventKind::LogComplete),
        brownouts: count(EventKind::Brownout),
        input_energy_j: state.input_energy_j,
        load_energy_j: state.load_energy_j,
        cycle_energies,
        final_v: state.cap.v,
        final_mode: state.mode,
        duration_s,
    }
}

/// Piecewise-linear lookup of the rectifier DC current vs output voltage,
/// sampled once per run so the inner integration loop stays cheap.
struct CurrentTable {
    v_max: f64,
    dv: f64,
    currents: Vec<f64>,
}

impl CurrentTable {
    fn build(rect: &RectifierModel, p_del: f64, v_max: f64) -> CurrentTable {
        const N: usize = 1024;
        let dv = v_max / (N - 1) as f64;
        let currents = (0..N)
            .map(|k| rect.output_current(p_del, k as f64 * dv))
            .collect();
        CurrentTable {
            v_max,
            dv,
            currents,
        }
    }

    fn at(&self, v: f64) -> f64 {
        if v >= self.v_max {
            return 0.0;
        }
        let x = (v.max(0.0) / self.dv).min((self.currents.len() - 1) as f64);
        let idx = x.floor() as usize;
        if idx + 1 >= self.currents.len() {
            return self.currents[self.currents.len() - 1];
        }
        let frac = x - idx as f64;
        self.currents[idx] * (1.0 - frac) + self.currents[idx + 1] * frac
    }
}

/// Run the scenario at its configured distance for its configured duration.
pub fn run_scenario(s: &Scenario) -> Result<(ChainState, RunSummary)> {
    s.validate()?;
    let p_avail = if s.link.eirp_w > 0.0 {
        link_budget::received_power(&s.link, s.distance_m)?.watts()
    } else {
        0.0
    };
    run_at_power(s, s.variant, s.link.freq_hz, p_avail)
}

/// Run one variant of the chain at an explicit available power.
pub fn run_at_power(
    s: &Scenario,
    variant: Variant,
    freq_hz: f64,
    p_available_w: f64,
) -> Result<(ChainState, RunSummary)> {
    let point = rf_point(s, variant, freq_hz, p_available_w)?;
    let mut state = ChainState::new(StorageCap::new(s.capacitance_f, s.initial_v)?);
    let steps = (s.duration_s / s.dt_s).round() as u64;
    let mut cycles = Vec::new();
    let mut releases_seen = 0usize;

    match variant {
        Variant::WithPump => {
            let feed = PumpFeed {
                p_dc_w: point.p_dc_w,
                v_sense: point.v_sense,
            };
            for _ in 0..steps {
                state = power_chain::step(state, feed, s.dt_s, &s.chain)?;
                if state.events.len() > releases_seen {
                    for e in &state.events[releases_seen..] {
                        if e.kind == EventKind::Release {
                            cycles.push(CycleEnergy {
                                t_release_s: e.t,
                                input_j: state.input_energy_j,
                                load_j: state.load_energy_j,
                            });
                        }
                    }
                    releases_seen = state.events.len();
                }
            }
        }
        Variant::NoPump => {
            let rect = s.rectifier(variant);
            let v_oc = rect.activation_voltage(point.p_delivered_w);
            let v_max = (v_oc.max(s.chain.supervisor.v_release) + 0.5).max(1.0);
            let table = CurrentTable::build(rect, point.p_delivered_w, v_max);
            for _ in 0..steps {
                state =
                    power_chain::reference_variant_step(state, |v| table.at(v), s.dt_s, &s.chain)?;
                if state.events.len() > releases_seen {
                    for e in &state.events[releases_seen..] {
                        if e.kind == EventKind::Release {
                            cycles.push(CycleEnergy {
                                t_release_s: e.t,
                                input_j: state.input_energy_j,
                                load_j: state.load_energy_j,
                            });
                        }
                    }
                    releases_seen = state.events.len();
                }
            }
        }
    }

    // Convert cumulative snapshots into per-cycle deltas.
    let mut per_cycle = Vec::with_capacity(cycles.len());
    let mut prev = (0.0, 0.0);
    for c in &cycles {
        per_cycle.push(CycleEnergy {
            t_release_s: c.t_release_s,
            input_j: c.input_j - prev.0,
            load_j: c.load_j - prev.1,
        });
        prev = (c.input_j, c.load_j);
    }

    let summary = summarize(&state, s.duration_s, per_cycle);
    Ok((state, summary))
}

/// One sweep row. Metric columns are NaN when the point failed; the error
/// text is preserved alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub received_dbm: f64,
    pub v_rect_v: f64,
    pub eta: f64,
    pub rate_hz: f64,
    pub events: u32,
    pub error: Option<String>,
}

/// Ordered sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axis: SweepAxis,
    pub variant: Variant,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// CSV with the fixed column set, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,received_dbm,v_rect_v,eta,rate_hz\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                r.axis_value, r.received_dbm, r.v_rect_v, r.eta, r.rate_hz
            ));
        }
        out
    }
}

fn evaluate_point(s: &Scenario, variant: Variant, axis: SweepAxis, x: f64) -> ResultRow {
    let inner = || -> Result<ResultRow> {
        let (freq, distance, eirp) = match axis {
            SweepAxis::Distance => (s.link.freq_hz, x, s.link.eirp_w),
            SweepAxis::Frequency => (x, s.distance_m, s.link.eirp_w),
            SweepAxis::TxPower => (
                s.link.freq_hz,
                s.distance_m,
                PowerLevel::from_dbm(x).watts(),
            ),
        };
        let link = LinkParams {
            freq_hz: freq,
            eirp_w: eirp,
            ..s.link
        };
        let p_avail = if eirp > 0.0 {
            link_budget::received_power(&link, distance)?.watts()
        } else {
            0.0
        };
        let point = rf_point(s, variant, freq, p_avail)?;
        let scen = Scenario {
            link,
            distance_m: distance,
            ..s.clone()
        };
        let (state, summary) = run_at_power(&scen, variant, freq, p_avail)?;
        Ok(ResultRow {
            axis_value: x,
            received_dbm: PowerLevel::from_watts(p_avail)?.dbm(),
            v_rect_v: point.v_sense,
            eta: point.eta_system,
            rate_hz: summary.rate_hz,
            events: state.events.len() as u32,
            error: None,
        })
    };
    match inner() {
        Ok(row) => row,
        Err(e) => ResultRow {
            axis_value: x,
            received_dbm: f64::NAN,
            v_rect_v: f64::NAN,
            eta: f64::NAN,
            rate_hz: f64::NAN,
            events: 0,
            error: Some(e.to_string()),
        },
    }
}

/// Sweep the scenario's active variant along `spec`. Points are evaluated in
/// parallel; each owns a scenario copy and the assembled table preserves
/// axis order, so parallel and serial runs emit identical bytes.
pub fn sweep(s: &Scenario, spec: &SweepSpec) -> Result<ResultTable> {
    s.validate()?;
    spec.validate()?;
    sweep_variant(s, s.variant, spec)
}

fn sweep_variant(s: &Scenario, variant: Variant, spec: &SweepSpec) -> Result<ResultTable> {
    let points = spec.points();
    let rows: Vec<ResultRow> = points
        .par_iter()
        .map(|&x| evaluate_point(s, variant, spec.axis, x))
        .collect();
    Ok(ResultTable {
        axis: spec.axis,
        variant,
        rows,
    })
}

/// Output of `compare_variants`.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub with_pump: ResultTable,
    pub no_pump: ResultTable,
    /// Available-power activation thresholds at the design frequency.
    pub threshold_with_pump_dbm: f64,
    pub threshold_no_pump_dbm: f64,
    pub sensitivity_gap_db: f64,
    /// Link-inverted maximum ranges at the scenario's exponent.
    pub max_range_with_pump_m: f64,
    pub max_range_no_pump_m: f64,
    pub range_ratio: f64,
    /// First axis value where the ordering of the two rates flips, if any.
    pub crossover: Option<f64>,
    pub notes: Vec<String>,
}

/// Run both variants along the sweep and derive the comparison metrics.
pub fn compare_variants(s: &Scenario, spec: &SweepSpec) -> Result<CompareReport> {
    s.validate()?;
    spec.validate()?;
    if spec.axis == SweepAxis::TxPower {
        return Err(Error::config(
            "sweep.axis: comparison sweeps run over distance or frequency".to_string(),
        ));
    }
    let with_pump = sweep_variant(s, Variant::WithPump, spec)?;
    let no_pump = sweep_variant(s, Variant::NoPump, spec)?;

    let f0 = s.link.freq_hz;
    let th_wp = activation_threshold(s, Variant::WithPump, f0)?;
    let th_np = activation_threshold(s, Variant::NoPump, f0)?;
    let gap_db = th_np.dbm() - th_wp.dbm();

    let range_wp = link_budget::max_range(&s.link, th_wp)?;
    let range_np = link_budget::max_range(&s.link, th_np)?;

    let mut crossover = None;
    let mut prev_sign = 0i8;
    for (a, b) in with_pump.rows.iter().zip(&no_pump.rows) {
        if a.rate_hz.is_nan() || b.rate_hz.is_nan() {
            continue;
        }
        let diff = b.rate_hz - a.rate_hz;
        let sign = if diff > 0.0 {
            1
        } else if diff < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if prev_sign != 0 && sign != prev_sign {
                crossover = Some(a.axis_value);
                break;
            }
            prev_sign = sign;
        }
    }

    let mut notes = Vec::new();
    notes.push(format!(
        "free-space (n = 2) range ratio from the {:.2} dB sensitivity gap is {:.3}; \
         a measured ratio of 3 requires n = {:.3}, while matching an absolute range \
         requires a different exponent — no single exponent reproduces both, and the \
         per-scenario exponent is reported rather than hidden",
        gap_db,
        link_budget::range_ratio_from_gap(gap_db, 2.0),
        gap_db / (10.0 * 3f64.log10()),
    ));

    Ok(CompareReport {
        with_pump,
        no_pump,
        threshold_with_pump_dbm: th_wp.dbm(),
        threshold_no_pump_dbm: th_np.dbm(),
        sensitivity_gap_db: gap_db,
        max_range_with_pump_m: range_wp,
        max_range_no_pump_m: range_np,
        range_ratio: range_wp / range_np,
        crossover,
        notes,
    })
}

/// Event log CSV: `t,kind,v` per row.
pub fn events_to_csv(events: &[Event]) -> String {
    let mut out = String::from("t,kind,v\n");
    for e in events {
        out.push_str(&format!("{:.8e},{},{:.8e}\n", e.t, e.kind.as_str(), e.v));
    }
    out
}
