//! Versioned JSON scenario configuration.
//!
//! Every dimensioned value is a `{value, unit}` pair drawn from a fixed unit
//! set; dimensionless values (plf, ideality, loss factors) are plain
//! numbers. Unknown keys are rejected and invariant violations come back
//! with path-qualified messages.

use serde::{Deserialize, Serialize};

use harvestsim_core::error::{Error, Result};
use harvestsim_core::link_budget::LinkParams;
use harvestsim_core::power_chain::{
    ChainConfig, ChargePumpModel, McuLoad, ReferenceSupervisor,
};
use harvestsim_core::rectifier::{DiodeParams, RectifierModel};
use harvestsim_core::rf_frontend::{AntennaModel, Impedance, MatchingNetwork, Topology};
use harvestsim_core::sim_harness::{Scenario, SweepAxis, SweepSpec, Variant};
use harvestsim_core::units::PowerLevel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: &str) -> Self {
        Quantity {
            value,
            unit: unit.to_string(),
        }
    }

    /// Conversion table entries are (unit, multiplier, divisor) with exactly
    /// one of the two different from 1, both exact powers of ten, so that
    /// writing (the inverse operation) round-trips bit-exactly.
    fn expect(&self, path: &str, table: &[(&str, f64, f64)]) -> Result<f64> {
        for (unit, mul, div) in table {
            if self.unit == *unit {
                return Ok(self.value * mul / div);
            }
        }
        let allowed: Vec<&str> = table.iter().map(|(u, _, _)| *u).collect();
        Err(Error::config(format!(
            "{path}: unit `{}` not accepted here (use one of {})",
            self.unit,
            allowed.join(", ")
        )))
    }

    pub fn hz(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("Hz", 1.0, 1.0), ("MHz", 1e6, 1.0)])
    }

    pub fn watts(&self, path: &str) -> Result<f64> {
        if self.unit == "dBm" {
            return Ok(PowerLevel::from_dbm(self.value).watts());
        }
        self.expect(path, &[("W", 1.0, 1.0)])
    }

    pub fn dbi(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("dBi", 1.0, 1.0)])
    }

    pub fn meters(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("m", 1.0, 1.0)])
    }

    pub fn henries(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("nH", 1.0, 1e9)])
    }

    pub fn farads_small(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("pF", 1.0, 1e12)])
    }

    pub fn farads_storage(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("uF", 1.0, 1e6)])
    }

    pub fn volts(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("V", 1.0, 1.0)])
    }

    pub fn amps(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("mA", 1.0, 1e3)])
    }

    pub fn seconds(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("ms", 1.0, 1e3)])
    }

    pub fn ohms(&self, path: &str) -> Result<f64> {
        self.expect(path, &[("ohm", 1.0, 1.0)])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub eirp: Quantity,
    pub g_tx: Quantity,
    pub g_rx: Quantity,
    pub frequency: Quantity,
    pub plf: f64,
    pub path_loss_exponent: f64,
    pub distance: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub l: Quantity,
    pub c: Quantity,
    pub topology: Topology,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontendSection {
    pub z0: Quantity,
    pub network: NetworkSection,
    /// Network of the pump-less variant; defaults to `network`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_no_pump: Option<NetworkSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiodeSection {
    pub i_s: Quantity,
    pub ideality: f64,
    pub r_s: Quantity,
    pub v_t: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceSection {
    pub resistance: Quantity,
    pub reactance: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantCalSection {
    pub input_impedance: ImpedanceSection,
    pub loss_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectifierSection {
    pub stages: u32,
    pub diode: DiodeSection,
    pub load: Quantity,
    pub input_impedance: ImpedanceSection,
    pub loss_factor: f64,
    pub dispersion_q: f64,
    /// Calibration of the pump-less variant; defaults to the primary one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_pump: Option<VariantCalSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub v_start: Quantity,
    pub v_release: Quantity,
    pub v_reconnect: Quantity,
    pub eta_pump: f64,
    pub t_startup: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSection {
    pub capacitance: Quantity,
    pub initial: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McuSection {
    pub i_active: Quantity,
    pub t_exec: Quantity,
    pub v_reg: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub v_release: Quantity,
    pub v_floor: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub pump: PumpSection,
    pub storage: StorageSection,
    pub mcu: McuSection,
    pub reference: ReferenceSection,
    pub feed_during_discharge: bool,
    pub v_seed: Quantity,
    pub dt: Quantity,
    pub duration: Quantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub variant: Variant,
    pub link: LinkSection,
    pub frontend: FrontendSection,
    pub rectifier: RectifierSection,
    pub chain: ChainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let cfg: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::config(format!("config JSON: {e}")))?;
        if cfg.version != 1 {
            return Err(Error::config(format!(
                "version: unsupported config version {}",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    /// Convert to the in-memory scenario, validating every invariant.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let link = LinkParams {
            eirp_w: self.link.eirp.watts("link.eirp")?,
            g_rx_dbi: self.link.g_rx.dbi("link.g_rx")?,
            freq_hz: self.link.frequency.hz("link.frequency")?,
            plf: self.link.plf,
            path_loss_exponent: self.link.path_loss_exponent,
        };
        link.validate("link")?;
        let g_tx_dbi = self.link.g_tx.dbi("link.g_tx")?;
        let distance_m = self.link.distance.meters("link.distance")?;
        if !(distance_m > 0.0) {
            return Err(Error::config(format!(
                "link.distance: must be > 0 m, got {distance_m}"
            )));
        }

        let z0 = Impedance::new(self.frontend.z0.ohms("frontend.z0")?, 0.0);
        let antenna = AntennaModel::new(link.g_rx_dbi, z0)?;
        let to_net = |n: &NetworkSection, path: &str| -> Result<MatchingNetwork> {
            MatchingNetwork::new(
                n.l.henries(&format!("{path}.l"))?,
                n.c.farads_small(&format!("{path}.c"))?,
                n.topology,
            )
        };
        let network_with_pump = to_net(&self.frontend.network, "frontend.network")?;
        let network_no_pump = match &self.frontend.network_no_pump {
            Some(n) => to_net(n, "frontend.network_no_pump")?,
            None => network_with_pump,
        };

        let diode = DiodeParams {
            i_s: self.rectifier.diode.i_s.amps("rectifier.diode.i_s")?,
            ideality: self.rectifier.diode.ideality,
            r_s: self.rectifier.diode.r_s.ohms("rectifier.diode.r_s")?,
            v_t: self.rectifier.diode.v_t.volts("rectifier.diode.v_t")?,
        };
        let to_z = |z: &ImpedanceSection, path: &str| -> Result<Impedance> {
            Ok(Impedance::new(
                z.resistance.ohms(&format!("{path}.resistance"))?,
                z.reactance.ohms(&format!("{path}.reactance"))?,
            ))
        };
        let rectifier_with_pump = RectifierModel {
            stages: self.rectifier.stages,
            diode,
            load_ohms: self.rectifier.load.ohms("rectifier.load")?,
            input_impedance: to_z(&self.rectifier.input_impedance, "rectifier.input_impedance")?,
            loss_factor: self.rectifier.loss_factor,
            dispersion_q: self.rectifier.dispersion_q,
            design_freq_hz: link.freq_hz,
        };
        rectifier_with_pump.validate("rectifier")?;
        let rectifier_no_pump = match &self.rectifier.no_pump {
            Some(cal) => {
                let m = RectifierModel {
                    input_impedance: to_z(&cal.input_impedance, "rectifier.no_pump.input_impedance")?,
                    loss_factor: cal.loss_factor,
                    ..rectifier_with_pump
                };
                m.validate("rectifier.no_pump")?;
                m
            }
            None => rectifier_with_pump,
        };

        let chain = ChainConfig {
            pump: ChargePumpModel {
                v_start: self.chain.pump.v_start.volts("chain.pump.v_start")?,
                v_release: self.chain.pump.v_release.volts("chain.pump.v_release")?,
                v_reconnect: self.chain.pump.v_reconnect.volts("chain.pump.v_reconnect")?,
                eta_pump: self.chain.pump.eta_pump,
                t_startup: self.chain.pump.t_startup.seconds("chain.pump.t_startup")?,
            },
            mcu: McuLoad {
                i_active_a: self.chain.mcu.i_active.amps("chain.mcu.i_active")?,
                t_exec_s: self.chain.mcu.t_exec.seconds("chain.mcu.t_exec")?,
                v_reg: self.chain.mcu.v_reg.volts("chain.mcu.v_reg")?,
            },
            supervisor: ReferenceSupervisor {
                v_release: self.chain.reference.v_release.volts("chain.reference.v_release")?,
                v_floor: self.chain.reference.v_floor.volts("chain.reference.v_floor")?,
            },
            feed_during_discharge: self.chain.feed_during_discharge,
            v_seed: self.chain.v_seed.volts("chain.v_seed")?,
        };

        let scenario = Scenario {
            link,
            g_tx_dbi,
            distance_m,
            antenna,
            network_with_pump,
            network_no_pump,
            rectifier_with_pump,
            rectifier_no_pump,
            chain,
            capacitance_f: self.chain.storage.capacitance.farads_storage("chain.storage.capacitance")?,
            initial_v: self.chain.storage.initial.volts("chain.storage.initial")?,
            variant: self.variant,
            dt_s: self.chain.dt.seconds("chain.dt")?,
            duration_s: self.chain.duration.seconds("chain.duration")?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn sweep_spec(&self) -> Result<Option<SweepSpec>> {
        match &self.sweep {
            None => Ok(None),
            Some(s) => {
                let spec = SweepSpec {
                    axis: s.axis,
                    start: s.start,
                    stop: s.stop,
                    step: s.step,
                };
                spec.validate()?;
                Ok(Some(spec))
            }
        }
    }

    /// Rebuild a config document from a scenario (used when writing
    /// calibrated configs and the preset dump).
    pub fn from_scenario(s: &Scenario, sweep: Option<&SweepSpec>) -> ConfigFile {
        let q = Quantity::new;
        let net = |n: &MatchingNetwork| NetworkSection {
            l: q(n.l_henries * 1e9, "nH"),
            c: q(n.c_farads * 1e12, "pF"),
            topology: n.topology,
        };
        let z = |i: &Impedance| ImpedanceSection {
            resistance: q(i.resistance, "ohm"),
            reactance: q(i.reactance, "ohm"),
        };
        ConfigFile {
            version: 1,
            variant: s.variant,
            link: LinkSection {
                eirp: q(s.link.eirp_w, "W"),
                g_tx: q(s.g_tx_dbi, "dBi"),
                g_rx: q(s.link.g_rx_dbi, "dBi"),
                frequency: q(s.link.freq_hz / 1e6, "MHz"),
                plf: s.link.plf,
                path_loss_exponent: s.link.path_loss_exponent,
                distance: q(s.distance_m, "m"),
            },
            frontend: FrontendSection {
                z0: q(s.antenna.z0.resistance, "ohm"),
                network: net(&s.network_with_pump),
                network_no_pump: Some(net(&s.network_no_pump)),
            },
            rectifier: RectifierSection {
                stages: s.rectifier_with_pump.stages,
                diode: DiodeSection {
                    i_s: q(s.rectifier_with_pump.diode.i_s * 1e3, "mA"),
                    ideality: s.rectifier_with_pump.diode.ideality,
                    r_s: q(s.rectifier_with_pump.diode.r_s, "ohm"),
                    v_t: q(s.rectifier_with_pump.diode.v_t, "V"),
                },
                load: q(s.rectifier_with_pump.load_ohms, "ohm"),
                input_impedance: z(&s.rectifier_with_pump.input_impedance),
                loss_factor: s.rectifier_with_pump.loss_factor,
                dispersion_q: s.rectifier_with_pump.dispersion_q,
                no_pump: Some(VariantCalSection {
                    input_impedance: z(&s.rectifier_no_pump.input_impedance),
                    loss_factor: s.rectifier_no_pump.loss_factor,
                }),
            },
            chain: ChainSection {
                pump: PumpSection {
                    v_start: q(s.chain.pump.v_start, "V"),
                    v_release: q(s.chain.pump.v_release, "V"),
                    v_reconnect: q(s.chain.pump.v_reconnect, "V"),
                    eta_pump: s.chain.pump.eta_pump,
                    t_startup: q(s.chain.pump.t_startup * 1e3, "ms"),
                },
                storage: StorageSection {
                    capacitance: q(s.capacitance_f * 1e6, "uF"),
                    initial: q(s.initial_v, "V"),
                },
                mcu: McuSection {
                    i_active: q(s.chain.mcu.i_active_a * 1e3, "mA"),
                    t_exec: q(s.chain.mcu.t_exec_s * 1e3, "ms"),
                    v_reg: q(s.chain.mcu.v_reg, "V"),
                },
                reference: ReferenceSection {
                    v_release: q(s.chain.supervisor.v_release, "V"),
                    v_floor: q(s.chain.supervisor.v_floor, "V"),
                },
                feed_during_discharge: s.chain.feed_during_discharge,
                v_seed: q(s.chain.v_seed, "V"),
                dt: q(s.dt_s * 1e3, "ms"),
                duration: q(s.duration_s * 1e3, "ms"),
            },
            sweep: sweep.map(|sp| SweepSection {
                axis: sp.axis,
                start: sp.start,
                stop: sp.stop,
                step: sp.step,
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

/// Calibration anchors file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorsFile {
    pub anchors: Vec<AnchorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorEntry {
    pub p_available: Quantity,
    pub constraint: AnchorConstraint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum AnchorConstraint {
    #[serde(rename = "activation_voltage")]
    ActivationVoltage(Quantity),
    #[serde(rename = "loaded_voltage")]
    LoadedVoltage(Quantity),
    #[serde(rename = "peak_efficiency")]
    PeakEfficiency(f64),
}

impl AnchorsFile {
    pub fn parse(text: &str) -> Result<AnchorsFile> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("anchors JSON: {e}")))
    }

    pub fn to_cal_anchors(&self) -> Result<Vec<harvestsim_core::rectifier::CalAnchor>> {
        use harvestsim_core::rectifier::CalAnchor;
        let mut out = Vec::with_capacity(self.anchors.len());
        for (i, a) in self.anchors.iter().enumerate() {
            let path = format!("anchors[{i}]");
            let p_w = a.p_available.watts(&format!("{path}.p_available"))?;
            let anchor = match &a.constraint {
                AnchorConstraint::ActivationVoltage(v) => CalAnchor::ActivationVoltage {
                    p_w,
                    volts: v.volts(&format!("{path}.activation_voltage"))?,
                },
                AnchorConstraint::LoadedVoltage(v) => CalAnchor::LoadedVoltage {
                    p_w,
                    volts: v.volts(&format!("{path}.loaded_voltage"))?,
                },
                AnchorConstraint::PeakEfficiency(eta) => CalAnchor::PeakEfficiency {
                    p_top_w: p_w,
                    eta: *eta,
                },
            };
            out.push(anchor);
        }
        Ok(out)
    }
}
