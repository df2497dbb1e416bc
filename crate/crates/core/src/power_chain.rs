//! Hybrid dynamical core: charge-pump hysteresis state machine, storage
//! capacitor integration, MCU load events, and the pump-less reference
//! variant.
//!
//! The state machine has three modes. `Idle` waits for the rectified input
//! to sit above the oscillator start threshold for the start-up delay.
//! `Charging` integrates constant-efficiency pump power into the capacitor.
//! `Discharging` begins when the supervisor releases at `v_release` and runs
//! until the capacitor falls to `v_reconnect`; the MCU draws its active
//! current for the whole connected window, completing one log every
//! `t_exec`. A `Brownout` is recorded when the window closes before the
//! first log finishes.
//!
//! Integration is fixed-step explicit Euler so that identical inputs produce
//! bit-identical event logs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Charge-pump thresholds and conversion behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargePumpModel {
    /// Oscillator start threshold at the pump input, volts.
    pub v_start: f64,
    /// Supervisor release threshold at the storage capacitor, volts.
    pub v_release: f64,
    /// Supervisor disconnect threshold, volts.
    pub v_reconnect: f64,
    /// DC-DC conversion efficiency, (0, 1].
    pub eta_pump: f64,
    /// Output build-up delay after the oscillator starts, seconds.
    pub t_startup: f64,
}

impl ChargePumpModel {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.v_start > 0.0 && self.v_start < self.v_reconnect && self.v_reconnect < self.v_release)
        {
            return Err(Error::config(format!(
                "{prefix}: thresholds must satisfy 0 < v_start < v_reconnect < v_release, got {} / {} / {}",
                self.v_start, self.v_reconnect, self.v_release
            )));
        }
        if !(self.eta_pump > 0.0 && self.eta_pump <= 1.0) {
            return Err(Error::config(format!(
                "{prefix}.eta_pump: must be in (0, 1], got {}",
                self.eta_pump
            )));
        }
        if !(self.t_startup >= 0.0) {
            return Err(Error::config(format!(
                "{prefix}.t_startup: must be >= 0, got {}",
                self.t_startup
            )));
        }
        Ok(())
    }
}

/// Storage capacitor with its voltage state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageCap {
    pub capacitance_f: f64,
    pub v: f64,
}

impl StorageCap {
    pub fn new(capacitance_f: f64, v: f64) -> Result<Self> {
        if !(capacitance_f > 0.0) {
            return Err(Error::config(format!(
                "storage.capacitance: must be > 0 F, got {capacitance_f}"
            )));
        }
        if !(v >= 0.0) {
            return Err(Error::config(format!(
                "storage.initial_v: must be >= 0 V, got {v}"
            )));
        }
        Ok(StorageCap { capacitance_f, v })
    }
}

/// MCU load during a connected window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McuLoad {
    pub i_active_a: f64,
    pub t_exec_s: f64,
    pub v_reg: f64,
}

impl McuLoad {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.i_active_a > 0.0 && self.t_exec_s > 0.0 && self.v_reg > 0.0) {
            return Err(Error::config(format!(
                "{prefix}: i_active, t_exec and v_reg must all be > 0"
            )));
        }
        Ok(())
    }
}

/// Supervisor of the pump-less reference design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSupervisor {
    pub v_release: f64,
    pub v_floor: f64,
}

impl ReferenceSupervisor {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.v_floor > 0.0 && self.v_floor < self.v_release) {
            return Err(Error::config(format!(
                "{prefix}: need 0 < v_floor < v_release, got {} / {}",
                self.v_floor, self.v_release
            )));
        }
        Ok(())
    }
}

/// Static chain configuration shared by both variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub pump: ChargePumpModel,
    pub mcu: McuLoad,
    pub supervisor: ReferenceSupervisor,
    /// Whether pump output keeps feeding the capacitor while the load runs.
    pub feed_during_discharge: bool,
    /// Voltage floor in the charging ODE, avoiding the 1/V singularity.
    pub v_seed: f64,
}

impl ChainConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        self.pump.validate(&format!("{prefix}.pump"))?;
        self.mcu.validate(&format!("{prefix}.mcu"))?;
        self.supervisor.validate(&format!("{prefix}.reference"))?;
        if !(self.v_seed > 0.0) {
            return Err(Error::config(format!(
                "{prefix}.v_seed: must be > 0, got {}",
                self.v_seed
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Idle,
    Charging,
    Discharging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    PumpStart,
    Release,
    Disconnect,
    LogComplete,
    Brownout,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::PumpStart => "PumpStart",
            EventKind::Release => "Release",
            EventKind::Disconnect => "Disconnect",
            EventKind::LogComplete => "LogComplete",
            EventKind::Brownout => "Brownout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub v: f64,
}

/// Full hybrid state advanced by `step` / `reference_variant_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub mode: Mode,
    pub cap: StorageCap,
    pub t: f64,
    pub events: Vec<Event>,
    /// Time the input has continuously sat above the start threshold (Idle).
    idle_above_s: f64,
    /// Remaining output build-up time for the current charge phase.
    startup_remaining_s: f64,
    /// Time since the supervisor released (Discharging).
    discharge_elapsed_s: f64,
    /// Logs completed in the current connected window.
    logs_in_window: u32,
    /// Integrated pump input energy while the pump was accepting power.
    pub input_energy_j: f64,
    /// Integrated energy delivered to the MCU load.
    pub load_energy_j: f64,
}

impl ChainState {
    pub fn new(cap: StorageCap) -> Self {
        ChainState {
            mode: Mode::Idle,
            cap,
            t: 0.0,
            events: Vec::new(),
            idle_above_s: 0.0,
            startup_remaining_s: 0.0,
            discharge_elapsed_s: 0.0,
            logs_in_window: 0,
            input_energy_j: 0.0,
            load_energy_j: 0.0,
        }
    }

    /// The supervisor output is connected only while discharging.
    pub fn connected(&self) -> bool {
        self.mode == Mode::Discharging
    }

    fn emit(&mut self, kind: EventKind) {
        self.events.push(Event {
            t: self.t,
            kind,
            v: self.cap.v,
        });
    }
}

/// Energy between two capacitor voltages: C (v_hi^2 - v_lo^2) / 2.
pub fn stored_energy_delta(capacitance_f: f64, v_hi: f64, v_lo: f64) -> Result<f64> {
    if !(v_hi >= v_lo && v_lo >= 0.0) {
        return Err(Error::domain(format!(
            "need v_hi >= v_lo >= 0, got {v_hi} / {v_lo}"
        )));
    }
    Ok(0.5 * capacitance_f * (v_hi * v_hi - v_lo * v_lo))
}

/// Charge and energy consumed by one MCU event.
pub fn mcu_event_budget(mcu: &McuLoad) -> (f64, f64) {
    let charge = mcu.i_active_a * mcu.t_exec_s;
    (charge, charge * mcu.v_reg)
}

/// Capacitor sizing feasibility against the MCU event budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizingReport {
    pub feasible: bool,
    /// Charge the window can supply, coulombs.
    pub charge_available_c: f64,
    /// Charge one event needs, coulombs.
    pub charge_needed_c: f64,
    pub margin_c: f64,
    /// Voltage sag of one event, volts.
    pub dv_event: f64,
    /// Whether one event fits inside the window without a brownout.
    pub completes_in_window: bool,
}

/// Series-regulator sizing check: the capacitor supplies the load current
/// directly, so the window charge C (v_hi - v_lo) must cover the event.
pub fn sizing_check(capacitance_f: f64, mcu: &McuLoad, v_hi: f64, v_lo: f64) -> Result<SizingReport> {
    if !(v_hi > v_lo) {
        return Err(Error::domain(format!(
            "sizing window needs v_hi > v_lo, got {v_hi} / {v_lo}"
        )));
    }
    let available = capacitance_f * (v_hi - v_lo);
    let (needed, _) = mcu_event_budget(mcu);
    let dv = needed / capacitance_f;
    Ok(SizingReport {
        feasible: available >= needed,
        charge_available_c: available,
        charge_needed_c: needed,
        margin_c: available - needed,
        dv_event: dv,
        completes_in_window: dv <= v_hi - v_lo,
    })
}

/// Instantaneous pump input: DC power offered to the pump and the rectified
/// voltage its start-up comparator monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpFeed {
    pub p_dc_w: f64,
    pub v_sense: f64,
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(Error::config(format!(
            "dt must be in (0, 1 ms] for integrator stability, got {dt} s"
        )));
    }
    Ok(())
}

/// Advance the with-pump chain by one step.
pub fn step(mut state: ChainState, feed: PumpFeed, dt: f64, cfg: &ChainConfig) -> Result<ChainState> {
    check_dt(dt)?;
    if !(feed.p_dc_w >= 0.0) {
        return Err(Error::domain(format!(
            "pump input power must be >= 0, got {}",
            feed.p_dc_w
        )));
    }
    let pump = &cfg.pump;
    state.t += dt;

    match state.mode {
        Mode::Idle => {
            if feed.v_sense >= pump.v_start {
                state.idle_above_s += dt;
                if state.idle_above_s >= pump.t_startup {
                    state.mode = Mode::Charging;
                    state.startup_remaining_s = 0.0;
                    state.emit(EventKind::PumpStart);
                }
            } else {
                state.idle_above_s = 0.0;
            }
        }
        Mode::Charging => {
            if feed.v_sense < pump.v_start {
                // Oscillator stops; the capacitor holds its charge.
                state.mode = Mode::Idle;
                state.idle_above_s = 0.0;
            } else if state.startup_remaining_s > 0.0 {
                state.startup_remaining_s = (state.startup_remaining_s - dt).max(0.0);
            } else {
                let c = state.cap.capacitance_f;
                let v_eff = state.cap.v.max(cfg.v_seed);
                state.cap.v += dt * pump.eta_pump * feed.p_dc_w / (c * v_eff);
                state.input_energy_j += feed.p_dc_w * dt;
                if state.cap.v >= pump.v_release {
                    state.emit(EventKind::Release);
                    state.mode = Mode::Discharging;
                    state.discharge_elapsed_s = 0.0;
                    state.logs_in_window = 0;
                }
            }
        }
        Mode::Discharging => {
            let c = state.cap.capacitance_f;
            let mut dv = -cfg.mcu.i_active_a / c * dt;
            state.load_energy_j += cfg.mcu.i_active_a * state.cap.v * dt;
            if cfg.feed_during_discharge && feed.v_sense >= pump.v_start {
                let v_eff = state.cap.v.max(cfg.v_seed);
                dv += dt * pump.eta_pump * feed.p_dc_w / (c * v_eff);
                state.input_energy_j += feed.p_dc_w * dt;
            }
            state.cap.v = (state.cap.v + dv).max(0.0);
            state.discharge_elapsed_s += dt;
            if state.discharge_elapsed_s >= (state.logs_in_window + 1) as f64 * cfg.mcu.t_exec_s {
                state.logs_in_window += 1;
                state.emit(EventKind::LogComplete);
            }
            if state.cap.v <= pump.v_reconnect {
                state.emit(EventKind::Disconnect);
                if state.logs_in_window == 0 {
                    state.emit(EventKind::Brownout);
                }
                state.mode = Mode::Charging;
                state.startup_remaining_s = pump.t_startup;
            }
        }
    }
    Ok(state)
}

/// Advance the pump-less reference chain by one step.
///
/// `charge_current` gives the rectifier DC output current at a given
/// capacitor voltage; the capacitor charges only while that current is
/// positive (the rectifier open-circuit voltage exceeds the cap voltage).
/// Activation therefore requires the open-circuit voltage to clear the
/// 2.4 V supervisor, which is what makes this variant less sensitive.
pub fn reference_variant_step<F>(
    mut state: ChainState,
    charge_current: F,
    dt: f64,
    cfg: &ChainConfig,
) -> Result<ChainState>
where
    F: Fn(f64) -> f64,
{
    check_dt(dt)?;
    let sup = &cfg.supervisor;
    state.t += dt;
    let c = state.cap.capacitance_f;

    match state.mode {
        Mode::Idle | Mode::Charging => {
            state.mode = Mode::Charging;
            let i_in = charge_current(state.cap.v).max(0.0);
            state.input_energy_j += i_in * state.cap.v * dt;
            state.cap.v += dt * i_in / c;
            if state.cap.v >= sup.v_release {
                state.emit(EventKind::Release);
                state.mode = Mode::Discharging;
                state.discharge_elapsed_s = 0.0;
                state.logs_in_window = 0;
            }
        }
        Mode::Discharging => {
            let i_in = charge_current(state.cap.v).max(0.0);
            state.input_energy_j += i_in * state.cap.v * dt;
            state.load_energy_j += cfg.mcu.i_active_a * state.cap.v * dt;
            state.cap.v = (state.cap.v + dt * (i_in - cfg.mcu.i_active_a) / c).max(0.0);
            state.discharge_elapsed_s += dt;
            if state.discharge_elapsed_s >= (state.logs_in_window + 1) as f64 * cfg.mcu.t_exec_s {
                state.logs_in_window += 1;
                state.emit(EventKind::LogComplete);
            }
            if state.cap.v <= sup.v_floor {
                state.emit(EventKind::Disconnect);
                if state.logs_in_window == 0 {
                    state.emit(EventKind::Brownout);
                }
                state.mode = Mode::Charging;
            }
        }
    }
    Ok(state)
}

/// Closed-form steady-state duty cycle of the with-pump chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclePeriod {
    pub period_s: f64,
    pub rate_hz: f64,
    pub t_charge_s: f64,
    pub t_discharge_s: f64,
    pub logs_per_cycle: u32,
    /// True when pump output power sustains the load indefinitely and the
    /// capacitor never falls back to the reconnect threshold.
    pub continuous: bool,
}

/// Steady-state cycle of the with-pump chain at constant pump input power.
///
/// The cycle is start-up delay, a constant-power charge from `v_reconnect`
/// to `v_release` (exactly `stored_energy_delta / (eta_pump p)`), and the
/// connected window in which the capacitor runs back down to `v_reconnect`
/// under the MCU current, with the pump still feeding when configured. The
/// discharge leg integrates analytically; when the pump can hold the
/// capacitor at or above `v_reconnect` the chain logs continuously at
/// `1 / t_exec`.
pub fn cycle_period(p_dc_w: f64, v_sense: f64, capacitance_f: f64, cfg: &ChainConfig) -> CyclePeriod {
    let pump = &cfg.pump;
    let none = CyclePeriod {
        period_s: f64::INFINITY,
        rate_hz: 0.0,
        t_charge_s: f64::INFINITY,
        t_discharge_s: 0.0,
        logs_per_cycle: 0,
        continuous: false,
    };
    if !(p_dc_w > 0.0) || v_sense < pump.v_start {
        return none;
    }
    let p = pump.eta_pump * p_dc_w;
    let i = cfg.mcu.i_active_a;
    let c = capacitance_f;

    let feed = if cfg.feed_during_discharge { p } else { 0.0 };
    if feed >= i * pump.v_reconnect {
        // Discharge stalls at v = feed / i >= v_reconnect: continuous logging.
        return CyclePeriod {
            period_s: f64::INFINITY,
            rate_hz: 1.0 / cfg.mcu.t_exec_s,
            t_charge_s: 0.0,
            t_discharge_s: f64::INFINITY,
            logs_per_cycle: 0,
            continuous: true,
        };
    }

    let delta_e = 0.5 * c * (pump.v_release * pump.v_release - pump.v_reconnect * pump.v_reconnect);
    let t_charge = delta_e / p;

    // dV/dt = -(i - feed/V)/C  =>  t = (C/i) [dV + (feed/i) ln((i V1 - feed)/(i V0 - feed))]
    let t_discharge = if feed > 0.0 {
        (c / i)
            * ((pump.v_release - pump.v_reconnect)
                + (feed / i) * ((i * pump.v_release - feed) / (i * pump.v_reconnect - feed)).ln())
    } else {
        c * (pump.v_release - pump.v_reconnect) / i
    };

    let logs = (t_discharge / cfg.mcu.t_exec_s).floor() as u32;
    let period = pump.t_startup + t_charge + t_discharge;
    CyclePeriod {
        period_s: period,
        rate_hz: logs as f64 / period,
        t_charge_s: t_charge,
        t_discharge_s: t_discharge,
        logs_per_cycle: logs,
        continuous: false,
    }
}
