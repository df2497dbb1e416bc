//! Prints the headline numbers of the built-in preset: activation
//! thresholds, free-space ranges, peak efficiencies, and the rate curves of
//! both variants over distance.
//!
//! ```text
//! cargo run --release -p harvestsim-core --example probe
//! ```

use harvestsim_core::link_budget::{exponent_for_range, max_range, range_ratio_from_gap, LinkParams};
use harvestsim_core::preset;
use harvestsim_core::sim_harness::{self, SweepAxis, SweepSpec, Variant};
use harvestsim_core::units::PowerLevel;

fn main() {
    let s = preset::paper_2013();

    let th_wp = sim_harness::activation_threshold(s, Variant::WithPump, s.link.freq_hz).unwrap();
    let th_np = sim_harness::activation_threshold(s, Variant::NoPump, s.link.freq_hz).unwrap();
    let gap = th_np.dbm() - th_wp.dbm();
    println!("activation thresholds: with-pump {:.2} dBm, no-pump {:.2} dBm (gap {:.2} dB)",
        th_wp.dbm(), th_np.dbm(), gap);

    let r_wp = max_range(&s.link, th_wp).unwrap();
    let r_np = max_range(&s.link, th_np).unwrap();
    println!("free-space ranges: {:.2} m vs {:.2} m (ratio {:.2})", r_wp, r_np, r_wp / r_np);
    println!("ratio at n = 1.048: {:.3}", range_ratio_from_gap(gap, 1.048));

    let n_fit = exponent_for_range(&s.link, th_wp, 4.8).unwrap();
    let fitted = LinkParams { path_loss_exponent: n_fit, ..s.link };
    println!(
        "exponent fitted to a 4.8 m range: n = {:.3} (check: {:.2} m)",
        n_fit,
        max_range(&fitted, th_wp).unwrap()
    );

    for variant in [Variant::WithPump, Variant::NoPump] {
        let mut peak = 0.0f64;
        for k in 0..=80 {
            let p = PowerLevel::from_dbm(-20.0 + 32.0 * k as f64 / 80.0).watts();
            let pt = sim_harness::rf_point(s, variant, s.link.freq_hz, p).unwrap();
            peak = peak.max(pt.eta_system);
        }
        println!("{}: peak system efficiency {:.1}%", variant.as_str(), peak * 100.0);
    }

    println!("\nrate vs distance (n = 2):");
    let spec = SweepSpec {
        axis: SweepAxis::Distance,
        start: 0.5,
        stop: 4.0,
        step: 0.5,
    };
    let report = sim_harness::compare_variants(s, &spec).unwrap();
    println!("{:>6}  {:>12}  {:>12}", "d [m]", "with-pump", "no-pump");
    for (a, b) in report.with_pump.rows.iter().zip(&report.no_pump.rows) {
        println!("{:>6.2}  {:>9.3} Hz  {:>9.3} Hz", a.axis_value, a.rate_hz, b.rate_hz);
    }
    if let Some(d) = report.crossover {
        println!("rate ordering flips near {d:.2} m");
    }
}
