//! Built-in "paper-2013" preset: the 866.5 MHz European-band reference
//! design with both variants calibrated against its anchor values.
//!
//! Anchors encoded here: 3.2 W EIRP, 5.5 / 1.85 dBi antenna gains, 0.5
//! polarization loss, -14 dBm with-pump activation (5 dB below the pump-less
//! variant), 0.35 / 2.4 / 1.85 V pump thresholds, 10 uF storage, 0.5 mA /
//! 9 ms / 1.8 V MCU load, 4 multiplier stages, 3 kOhm rectifier load, and
//! the 3.3 nH / 8.2 pF matching network. Peak system efficiencies calibrate
//! to 16% (with pump) and 27% (without).

use std::sync::OnceLock;

use crate::error::Result;
use crate::link_budget::LinkParams;
use crate::power_chain::{ChainConfig, ChargePumpModel, McuLoad, ReferenceSupervisor};
use crate::rectifier::{calibrate, CalAnchor, DiodeParams, RectifierModel};
use crate::rf_frontend::{back_solve_load, tune, AntennaModel, Impedance, MatchingNetwork, Topology};
use crate::sim_harness::{Scenario, Variant};
use crate::units::PowerLevel;

pub const PRESET_NAME: &str = "paper-2013";

/// Center of the European UHF RFID band, Hz.
pub const EU_RFID_FREQ_HZ: f64 = 866.5e6;

/// With-pump activation threshold, dBm of available power.
pub const ACTIVATION_WITH_PUMP_DBM: f64 = -14.0;

/// Pump-less activation threshold, dBm of available power.
pub const ACTIVATION_NO_PUMP_DBM: f64 = -9.0;

/// Peak system efficiency targets over the reference drive-power range.
pub const PEAK_EFF_WITH_PUMP: f64 = 0.16;
pub const PEAK_EFF_NO_PUMP: f64 = 0.27;

/// Drive-power range (available power, dBm) the efficiency figures refer
/// to. A 3 kOhm load held at 2.4 V draws 1.92 mW, so the quoted peak
/// efficiencies belong near the top of this range, not at the activation
/// threshold.
pub const EFFICIENCY_SWEEP_DBM: (f64, f64) = (-20.0, 12.0);

/// Behavioral reactance-dispersion Q of the rectifier input. Sets the
/// bandwidth of the return-loss dip; chosen so the activation minimum stays
/// at band center against the wavelength tilt of the link equation.
pub const DISPERSION_Q: f64 = 25.0;

/// The published two-element matching network.
pub fn paper_network() -> MatchingNetwork {
    MatchingNetwork {
        l_henries: 3.3e-9,
        c_farads: 8.2e-12,
        topology: Topology::SeriesLShuntCAtLoad,
    }
}

/// Rectifier input impedance back-solved from the published network values
/// under the default topology (the series-L / shunt-C reading of the block
/// diagram). Roughly 9.96 + j21.5 ohm.
pub fn back_solved_impedance() -> Impedance {
    back_solve_load(&paper_network(), Impedance::new(50.0, 0.0), EU_RFID_FREQ_HZ)
        .expect("published network back-solves to a passive load")
}

fn base_rectifier() -> RectifierModel {
    RectifierModel {
        stages: 4,
        diode: DiodeParams::zero_bias_schottky(),
        load_ohms: 3000.0,
        input_impedance: back_solved_impedance(),
        loss_factor: 1.0,
        dispersion_q: DISPERSION_Q,
        design_freq_hz: EU_RFID_FREQ_HZ,
    }
}

fn build() -> Result<Scenario> {
    let z0 = Impedance::new(50.0, 0.0);
    let antenna = AntennaModel::new(1.85, z0)?;
    let p_top = PowerLevel::from_dbm(EFFICIENCY_SWEEP_DBM.1).watts();

    let pump = ChargePumpModel {
        v_start: 0.35,
        v_release: 2.4,
        v_reconnect: 1.85,
        eta_pump: 0.5,
        t_startup: 0.05,
    };

    // Per-variant calibration. Thresholds pin the open-circuit voltage
    // constant; peak efficiency pins the loss factor; together they fix the
    // impedance scale. The with-pump system peak divides out the pump
    // efficiency to give the rectifier-level target.
    let wp_anchors = [
        CalAnchor::ActivationVoltage {
            p_w: PowerLevel::from_dbm(ACTIVATION_WITH_PUMP_DBM).watts(),
            volts: pump.v_start,
        },
        CalAnchor::PeakEfficiency {
            p_top_w: p_top,
            eta: PEAK_EFF_WITH_PUMP / pump.eta_pump,
        },
    ];
    let (rect_wp, _) = calibrate(&wp_anchors, &base_rectifier())?;

    let supervisor = ReferenceSupervisor {
        v_release: 2.4,
        v_floor: 1.8,
    };
    let np_anchors = [
        CalAnchor::ActivationVoltage {
            p_w: PowerLevel::from_dbm(ACTIVATION_NO_PUMP_DBM).watts(),
            volts: supervisor.v_release,
        },
        CalAnchor::PeakEfficiency {
            p_top_w: p_top,
            eta: PEAK_EFF_NO_PUMP,
        },
    ];
    let (rect_np, _) = calibrate(&np_anchors, &base_rectifier())?;

    // The pump-less measurements re-tuned the network for maximum transfer;
    // do the same against the no-pump calibration.
    let network_no_pump = tune(rect_np.input_impedance, EU_RFID_FREQ_HZ, z0)?.network;

    let scenario = Scenario {
        link: LinkParams {
            eirp_w: 3.2,
            g_rx_dbi: 1.85,
            freq_hz: EU_RFID_FREQ_HZ,
            plf: 0.5,
            path_loss_exponent: 2.0,
        },
        g_tx_dbi: 5.5,
        distance_m: 1.0,
        antenna,
        network_with_pump: paper_network(),
        network_no_pump,
        rectifier_with_pump: rect_wp,
        rectifier_no_pump: rect_np,
        chain: ChainConfig {
            pump,
            mcu: McuLoad {
                i_active_a: 0.5e-3,
                t_exec_s: 9e-3,
                v_reg: 1.8,
            },
            supervisor,
            feed_during_discharge: true,
            v_seed: 0.05,
        },
        capacitance_f: 10e-6,
        initial_v: 0.0,
        variant: Variant::WithPump,
        dt_s: 1e-4,
        duration_s: 60.0,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// The calibrated preset scenario. Built once per process; calibration is
/// deterministic so every process arrives at the same values.
pub fn paper_2013() -> &'static Scenario {
    static SCENARIO: OnceLock<Scenario> = OnceLock::new();
    SCENARIO.get_or_init(|| build().expect("preset construction is self-consistent"))
}
