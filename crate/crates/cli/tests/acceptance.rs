//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them). Tolerances are
//! pinned in the assertions.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harvestsim_core::link_budget::{
    exponent_for_range, max_range, range_ratio_from_gap, received_power, LinkParams,
};
use harvestsim_core::power_chain::{
    cycle_period, mcu_event_budget, sizing_check, step, stored_energy_delta, ChainState,
    EventKind, Mode, PumpFeed, StorageCap,
};
use harvestsim_core::preset::{self, EU_RFID_FREQ_HZ};
use harvestsim_core::rf_frontend::{
    back_solve_load, network_input_impedance, reflection_and_return_loss, tune, Impedance,
};
use harvestsim_core::sim_harness::{
    activation_eirp, activation_threshold, rf_point, run_at_power, Variant,
};
use harvestsim_core::units::PowerLevel;

struct Criterion {
    number: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(number: u32, title: &'static str) -> Self {
        Criterion {
            number,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(self) {
        let ok = self.checks.iter().all(|(_, b)| *b);
        println!(
            "acceptance {:>2}: {} — {}",
            self.number,
            if ok { "PASS" } else { "FAIL" },
            self.title
        );
        for (what, good) in &self.checks {
            if !good {
                println!("    failed check: {what}");
            }
        }
        assert!(ok, "acceptance criterion {} failed", self.number);
    }
}

fn reference_link(n: f64) -> LinkParams {
    LinkParams {
        eirp_w: 3.2,
        g_rx_dbi: 1.85,
        freq_hz: EU_RFID_FREQ_HZ,
        plf: 0.5,
        path_loss_exponent: n,
    }
}

#[test]
fn criterion_01_link_equation_engine() {
    let mut c = Criterion::new(1, "link equation: free-space range and inversion round-trip");
    let t0 = Instant::now();

    let s = PowerLevel::from_dbm(-14.0);
    let d = max_range(&reference_link(2.0), s).unwrap();
    c.check(
        format!("max_range at -14 dBm = {d:.4} m, expected 6.83 +/- 0.05"),
        (d - 6.83).abs() <= 0.05,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0x11ce);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let link = LinkParams {
            eirp_w: rng.gen_range(0.01..10.0),
            g_rx_dbi: rng.gen_range(-5.0..10.0),
            freq_hz: rng.gen_range(0.3e9..3e9),
            plf: rng.gen_range(0.05..1.0),
            path_loss_exponent: rng.gen_range(0.5..6.0),
        };
        let sens = PowerLevel::from_dbm(rng.gen_range(-60.0..0.0));
        let range = max_range(&link, sens).unwrap();
        let back = received_power(&link, range).unwrap();
        worst = worst.max((back.watts() - sens.watts()).abs() / sens.watts());
    }
    c.check(
        format!("round-trip worst relative error {worst:.3e} < 1e-9 over 1000 draws"),
        worst < 1e-9,
    );

    let elapsed = t0.elapsed();
    c.check(
        format!("runtime {elapsed:.2?} < 1 s"),
        elapsed.as_secs_f64() < 1.0,
    );
    c.finish();
}

#[test]
fn criterion_02_capacitor_sizing_arithmetic() {
    let mut c = Criterion::new(2, "capacitor sizing arithmetic");
    let s = preset::paper_2013();

    let e = stored_energy_delta(10e-6, 2.4, 1.85).unwrap();
    c.check(
        format!("hysteresis energy {:.4} uJ = 11.69 +/- 0.01", e * 1e6),
        (e * 1e6 - 11.69).abs() <= 0.01,
    );

    let report = sizing_check(10e-6, &s.chain.mcu, 2.4, 1.8).unwrap();
    let (q_event, _) = mcu_event_budget(&s.chain.mcu);
    c.check(
        format!(
            "headroom charge {:.2} uC >= event charge {:.2} uC",
            report.charge_available_c * 1e6,
            q_event * 1e6
        ),
        report.feasible && (report.charge_available_c - 6e-6).abs() < 6e-9
            && (q_event - 4.5e-6).abs() < 4.5e-9,
    );

    // 9 ms discharge at 0.5 mA from 2.4 V with no input: drops 0.45 V,
    // completes the log, no brownout.
    let mut state = ChainState::new(StorageCap::new(10e-6, 2.4).unwrap());
    state.mode = Mode::Discharging;
    let feed = PumpFeed {
        p_dc_w: 0.0,
        v_sense: 0.0,
    };
    for _ in 0..90 {
        state = step(state, feed, 1e-4, &s.chain).unwrap();
    }
    let dv = 2.4 - state.cap.v;
    c.check(
        format!("discharge drop {dv:.5} V = 0.45 +/- 0.1%"),
        (dv - 0.45).abs() <= 0.45e-3,
    );
    c.check(
        "one LogComplete, no Brownout".to_string(),
        state
            .events
            .iter()
            .filter(|e| e.kind == EventKind::LogComplete)
            .count()
            == 1
            && !state.events.iter().any(|e| e.kind == EventKind::Brownout),
    );
    c.finish();
}

#[test]
fn criterion_03_hysteresis_property_suite() {
    let mut c = Criterion::new(3, "hysteresis FSM properties over 10^4 random traces");
    let s = preset::paper_2013();
    let cfg = &s.chain;
    let dt = 1e-4;
    let seg_steps = 1200; // 0.12 s per segment
    let mut rng = ChaCha8Rng::seed_from_u64(0xf5a3);

    let mut alternation_ok = true;
    let mut connected_ok = true;
    let mut energy_ok = true;
    let mut bounds_ok = true;
    let mut determinism_ok = true;

    for trace in 0..10_000u32 {
        let v0: f64 = rng.gen_range(0.0..2.39);
        let powers: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.5e-3)).collect();

        let run = |powers: &[f64]| {
            let mut st = ChainState::new(StorageCap::new(10e-6, v0).unwrap());
            for &p in powers {
                let feed = PumpFeed {
                    p_dc_w: p,
                    v_sense: if p > 1e-7 { 1.0 } else { 0.0 },
                };
                for _ in 0..seg_steps {
                    st = step(st, feed, dt, cfg).unwrap();
                }
            }
            st
        };
        let state = run(&powers);

        let mut expect_release = true;
        for e in &state.events {
            match e.kind {
                EventKind::Release => {
                    if !expect_release {
                        alternation_ok = false;
                    }
                    expect_release = false;
                }
                EventKind::Disconnect => {
                    if expect_release {
                        alternation_ok = false;
                    }
                    expect_release = true;
                }
                _ => {}
            }
        }
        let last_threshold = state
            .events
            .iter()
            .rev()
            .find(|e| matches!(e.kind, EventKind::Release | EventKind::Disconnect));
        let by_events = matches!(last_threshold, Some(e) if e.kind == EventKind::Release);
        if state.connected() != by_events {
            connected_ok = false;
        }

        let cap_delta = 0.5 * 10e-6 * (state.cap.v * state.cap.v - v0 * v0);
        let budget = cfg.pump.eta_pump * state.input_energy_j;
        if state.load_energy_j + cap_delta > budget * 1.01 + 1e-12 {
            energy_ok = false;
        }
        if !(state.cap.v >= 0.0 && state.cap.v <= cfg.pump.v_release + 0.05) {
            bounds_ok = false;
        }
        if trace % 100 == 0 {
            let again = run(&powers);
            if again != state {
                determinism_ok = false;
            }
        }
    }
    c.check("Release/Disconnect strictly alternate".to_string(), alternation_ok);
    c.check(
        "output connected iff last threshold event was Release".to_string(),
        connected_ok,
    );
    c.check(
        "per-trace energy conservation within 1%".to_string(),
        energy_ok,
    );
    c.check("capacitor voltage stays in bounds".to_string(), bounds_ok);
    c.check("bit-exact determinism across reruns".to_string(), determinism_ok);
    c.finish();
}

#[test]
fn criterion_04_closed_form_duty_cycle() {
    let mut c = Criterion::new(4, "closed-form vs simulated duty cycle within 1%");
    let s = preset::paper_2013();
    let cfg = &s.chain;
    let dt = 1e-4;
    let t0 = Instant::now();

    let mut worst: f64 = 0.0;
    for k in 0..7 {
        let p_dc = 1e-6 * 10f64.powf(3.0 * k as f64 / 6.0); // 1 uW .. 1 mW
        let closed = cycle_period(p_dc, 1.0, 10e-6, cfg);
        assert!(!closed.continuous, "test range must stay in cycling regime");

        let mut state = ChainState::new(StorageCap::new(10e-6, cfg.pump.v_reconnect).unwrap());
        let feed = PumpFeed {
            p_dc_w: p_dc,
            v_sense: 1.0,
        };
        let needed_releases = 4;
        let max_steps = ((closed.period_s * 5.5 + 1.0) / dt) as usize;
        for _ in 0..max_steps {
            state = step(state, feed, dt, cfg).unwrap();
            if state
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Release)
                .count()
                >= needed_releases
            {
                break;
            }
        }
        let releases: Vec<f64> = state
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Release)
            .map(|e| e.t)
            .collect();
        assert!(
            releases.len() >= needed_releases,
            "only {} releases at p_dc = {p_dc:.2e}",
            releases.len()
        );
        let sim_period =
            (releases[releases.len() - 1] - releases[0]) / (releases.len() - 1) as f64;
        let rel = (sim_period - closed.period_s).abs() / closed.period_s;
        worst = worst.max(rel);
    }
    c.check(
        format!("worst closed-form vs simulated deviation {:.3}% < 1%", worst * 100.0),
        worst < 0.01,
    );
    let elapsed = t0.elapsed();
    c.check(
        format!("runtime {elapsed:.2?} < 10 s"),
        elapsed.as_secs_f64() < 10.0,
    );
    c.finish();
}

#[test]
fn criterion_05_matching_round_trip() {
    let mut c = Criterion::new(5, "matching network round-trip on the back-solved load");
    let z0 = Impedance::new(50.0, 0.0);
    let load = back_solve_load(&preset::paper_network(), z0, EU_RFID_FREQ_HZ).unwrap();

    let res = tune(load, EU_RFID_FREQ_HZ, z0).unwrap();
    let l_nh = res.network.l_henries * 1e9;
    let c_pf = res.network.c_farads * 1e12;
    c.check(
        format!("tuned L = {l_nh:.4} nH within 10% of 3.3"),
        (l_nh - 3.3).abs() / 3.3 <= 0.10,
    );
    c.check(
        format!("tuned C = {c_pf:.4} pF within 10% of 8.2"),
        (c_pf - 8.2).abs() / 8.2 <= 0.10,
    );

    let z_in = network_input_impedance(&preset::paper_network(), load, EU_RFID_FREQ_HZ).unwrap();
    let (_, rl_db) = reflection_and_return_loss(z_in, z0).unwrap();
    c.check(
        format!("forward return loss {rl_db:.1} dB >= 20 dB"),
        rl_db >= 20.0,
    );
    c.finish();
}

#[test]
fn criterion_06_calibrated_sensitivity_anchors() {
    let mut c = Criterion::new(6, "calibrated activation thresholds and band minimum");
    let s = preset::paper_2013();

    let th_wp = activation_threshold(s, Variant::WithPump, EU_RFID_FREQ_HZ).unwrap();
    let th_np = activation_threshold(s, Variant::NoPump, EU_RFID_FREQ_HZ).unwrap();
    c.check(
        format!("with-pump threshold {:.3} dBm = -14 +/- 0.5", th_wp.dbm()),
        (th_wp.dbm() + 14.0).abs() <= 0.5,
    );
    c.check(
        format!("no-pump threshold {:.3} dBm = -9 +/- 1", th_np.dbm()),
        (th_np.dbm() + 9.0).abs() <= 1.0,
    );
    let gap = th_np.dbm() - th_wp.dbm();
    c.check(
        format!("sensitivity gap {gap:.3} dB near 5 dB"),
        (gap - 5.0).abs() <= 1.0,
    );

    // Activation-EIRP minimum across 830-900 MHz at the 1 m reference
    // distance.
    let mut best = (f64::INFINITY, 0.0f64);
    let mut f = 830e6;
    while f <= 900e6 + 1.0 {
        let e = activation_eirp(s, Variant::WithPump, f, 1.0).unwrap();
        if e.watts() < best.0 {
            best = (e.watts(), f);
        }
        f += 0.5e6;
    }
    c.check(
        format!(
            "activation-EIRP minimum at {:.1} MHz within 866.5 +/- 5",
            best.1 / 1e6
        ),
        (best.1 - 866.5e6).abs() <= 5e6,
    );
    c.finish();
}

#[test]
fn criterion_07_range_comparison() {
    let mut c = Criterion::new(7, "range ratios and the exponent-fitted absolute range");
    let s = preset::paper_2013();
    let th_wp = activation_threshold(s, Variant::WithPump, EU_RFID_FREQ_HZ).unwrap();
    let th_np = activation_threshold(s, Variant::NoPump, EU_RFID_FREQ_HZ).unwrap();
    let gap = th_np.dbm() - th_wp.dbm();

    let ratio_free_space = range_ratio_from_gap(gap, 2.0);
    c.check(
        format!("free-space (n = 2) range ratio {ratio_free_space:.4} = 1.78 +/- 0.05"),
        (ratio_free_space - 1.78).abs() <= 0.05,
    );

    let ratio_measured_exponent = range_ratio_from_gap(gap, 1.048);
    c.check(
        format!("n = 1.048 range ratio {ratio_measured_exponent:.4} = 3.0 +/- 0.1"),
        (ratio_measured_exponent - 3.0).abs() <= 0.1,
    );

    // The absolute 4.8 m range requires its own exponent; no single n
    // reproduces both it and the ratio. Fit n to the range, verify, and
    // report the discrepancy instead of hiding it.
    let n_fit = exponent_for_range(&s.link, th_wp, 4.8).unwrap();
    let link_fit = LinkParams {
        path_loss_exponent: n_fit,
        ..s.link
    };
    let range_fit = max_range(&link_fit, th_wp).unwrap();
    c.check(
        format!("with-pump range at fitted n = {n_fit:.4}: {range_fit:.3} m = 4.8 +/- 0.2"),
        (range_fit - 4.8).abs() <= 0.2,
    );
    println!(
        "    reported discrepancy: ratio-matching exponent n = 1.048 puts the absolute range at {:.0} m, \
         while the range-matching exponent n = {:.3} puts the ratio at {:.2}; the free-space prediction is \
         {:.2} m at ratio {:.2}. No single exponent reproduces both measured figures.",
        max_range(
            &LinkParams {
                path_loss_exponent: 1.048,
                ..s.link
            },
            th_wp
        )
        .unwrap(),
        n_fit,
        range_ratio_from_gap(gap, n_fit),
        max_range(&s.link, th_wp).unwrap(),
        ratio_free_space,
    );
    c.finish();
}

#[test]
fn criterion_08_rate_crossover() {
    let mut c = Criterion::new(8, "rate crossover between the variants");
    let s = preset::paper_2013();
    assert_eq!(s.chain.pump.eta_pump, 0.5);
    assert_eq!(s.chain.pump.t_startup, 0.05);

    let rate_at = |variant: Variant, d: f64| -> f64 {
        let p_avail = received_power(&s.link, d).unwrap().watts();
        let mut scen = s.clone();
        scen.duration_s = 60.0;
        let (_, summary) = run_at_power(&scen, variant, s.link.freq_hz, p_avail).unwrap();
        summary.rate_hz
    };

    // Close in, the pump's per-cycle start-up delay costs throughput.
    let mut short_range_win = false;
    for &d in &[0.7, 1.0, 1.3] {
        let wp = rate_at(Variant::WithPump, d);
        let np = rate_at(Variant::NoPump, d);
        if np > wp && wp > 0.0 {
            short_range_win = true;
            c.check(
                format!("at {d} m the no-pump rate {np:.2} Hz exceeds with-pump {wp:.2} Hz"),
                true,
            );
            break;
        }
    }
    c.check(
        "no-pump variant leads at some distance below 1.5 m".to_string(),
        short_range_win,
    );

    // The ordering reverses by the time the no-pump chain stops cycling:
    // past its activation limit the with-pump chain still logs.
    let np_cutoff = max_range(
        &s.link,
        activation_threshold(s, Variant::NoPump, EU_RFID_FREQ_HZ).unwrap(),
    )
    .unwrap();
    let wp_cutoff = max_range(
        &s.link,
        activation_threshold(s, Variant::WithPump, EU_RFID_FREQ_HZ).unwrap(),
    )
    .unwrap();
    c.check(
        format!("no-pump cutoff {np_cutoff:.2} m sits inside the with-pump range {wp_cutoff:.2} m"),
        np_cutoff < wp_cutoff,
    );
    let d_probe = np_cutoff + 0.05;
    let wp = rate_at(Variant::WithPump, d_probe);
    let np = rate_at(Variant::NoPump, d_probe);
    c.check(
        format!(
            "just past the no-pump cutoff ({d_probe:.2} m): with-pump {wp:.3} Hz > no-pump {np:.3} Hz"
        ),
        wp > np && wp > 0.0 && np == 0.0,
    );
    c.finish();
}

#[test]
fn criterion_09_efficiency_anchors() {
    let mut c = Criterion::new(9, "calibrated peak system efficiencies");
    let s = preset::paper_2013();

    let peak = |variant: Variant| -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..=100 {
            let dbm = -20.0 + 32.0 * k as f64 / 100.0;
            let p = PowerLevel::from_dbm(dbm).watts();
            let pt = rf_point(s, variant, EU_RFID_FREQ_HZ, p).unwrap();
            best = best.max(pt.eta_system);
        }
        best
    };
    let wp = peak(Variant::WithPump);
    let np = peak(Variant::NoPump);
    c.check(
        format!("with-pump peak efficiency {:.2}% = 16 +/- 2 points", wp * 100.0),
        (wp - 0.16).abs() <= 0.02,
    );
    c.check(
        format!("no-pump peak efficiency {:.2}% = 27 +/- 3 points", np * 100.0),
        (np - 0.27).abs() <= 0.03,
    );
    c.finish();
}

#[test]
fn criterion_10_cli_end_to_end() {
    let mut c = Criterion::new(10, "CLI comparison sweep: runtime and byte determinism");
    let dir = tempfile::tempdir().unwrap();
    let run_once = |tag: &str| -> (Vec<u8>, f64) {
        let path = dir.path().join(format!("sweep-{tag}.csv"));
        let t0 = Instant::now();
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_harvestsim"))
            .args([
                "sweep",
                "--preset",
                "paper-2013",
                "--axis",
                "distance",
                "--range",
                "0.2:6:0.1",
                "--compare",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        let dt = t0.elapsed().as_secs_f64();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        (std::fs::read(&path).unwrap(), dt)
    };

    let (a, t_a) = run_once("a");
    let (b, t_b) = run_once("b");
    c.check(
        format!("first run {t_a:.1} s < 60 s"),
        t_a < 60.0,
    );
    c.check(
        format!("second run {t_b:.1} s < 60 s"),
        t_b < 60.0,
    );
    c.check(
        "CSV output byte-identical across repeated runs".to_string(),
        a == b,
    );
    c.check("CSV non-trivial (both variants present)".to_string(), {
        let text = String::from_utf8_lossy(&a);
        text.contains("# variant: with-pump") && text.contains("# variant: no-pump")
    });
    c.finish();
}
