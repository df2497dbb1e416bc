//! Subcommand implementations.

use std::path::Path;

use harvestsim_core::error::{Error, Result};
use harvestsim_core::preset;
use harvestsim_core::rectifier::{calibrate as cal_fit, RectifierModel};
use harvestsim_core::rf_frontend::{
    network_input_impedance, reflection_and_return_loss, tune as tune_fit, Impedance,
};
use harvestsim_core::sim_harness::{
    compare_variants, run_scenario, sweep as run_sweep, ResultTable, Scenario, SweepAxis,
    SweepSpec, Variant,
};

use crate::config::{AnchorsFile, ConfigFile};
use crate::SourceArgs;

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::config(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_variant(name: &str) -> Result<Variant> {
    match name {
        "with-pump" => Ok(Variant::WithPump),
        "no-pump" => Ok(Variant::NoPump),
        other => Err(Error::config(format!(
            "variant: expected `with-pump` or `no-pump`, got `{other}`"
        ))),
    }
}

fn load_scenario(source: &SourceArgs) -> Result<(Scenario, Option<SweepSpec>)> {
    let (mut scenario, sweep) = match (&source.config, &source.preset) {
        (Some(path), None) => {
            let cfg = ConfigFile::parse(&read_file(path)?)?;
            let sweep = cfg.sweep_spec()?;
            (cfg.to_scenario()?, sweep)
        }
        (None, Some(name)) => {
            if name != preset::PRESET_NAME {
                return Err(Error::config(format!(
                    "preset: unknown preset `{name}` (available: {})",
                    preset::PRESET_NAME
                )));
            }
            (preset::paper_2013().clone(), Some(default_sweep()))
        }
        (None, None) => {
            return Err(Error::config(
                "either --config <path> or --preset <name> is required".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids both"),
    };
    if let Some(v) = &source.variant {
        scenario.variant = parse_variant(v)?;
    }
    Ok((scenario, sweep))
}

fn default_sweep() -> SweepSpec {
    SweepSpec {
        axis: SweepAxis::Distance,
        start: 0.2,
        stop: 6.0,
        step: 0.1,
    }
}

pub fn simulate(source: &SourceArgs, out: Option<&Path>) -> Result<()> {
    let (scenario, _) = load_scenario(source)?;
    let (state, summary) = run_scenario(&scenario)?;
    let received = if scenario.link.eirp_w > 0.0 {
        harvestsim_core::link_budget::received_power(&scenario.link, scenario.distance_m)?.dbm()
    } else {
        f64::NEG_INFINITY
    };
    println!("variant={}", scenario.variant.as_str());
    println!("distance_m={:.8e}", scenario.distance_m);
    println!("received_dbm={:.8e}", received);
    println!("rate_hz={:.8e}", summary.rate_hz);
    println!("releases={}", summary.releases);
    println!("logs={}", summary.logs);
    println!("brownouts={}", summary.brownouts);
    println!("final_v={:.8e}", summary.final_v);
    println!("input_energy_j={:.8e}", summary.input_energy_j);
    println!("load_energy_j={:.8e}", summary.load_energy_j);
    let csv = harvestsim_core::sim_harness::events_to_csv(&state.events);
    write_output(out, &csv)
}

fn parse_range(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::config(format!(
            "range: expected start:stop:step, got `{text}`"
        )));
    }
    let nums: Result<Vec<f64>> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::config(format!("range: `{p}` is not a number")))
        })
        .collect();
    let nums = nums?;
    Ok((nums[0], nums[1], nums[2]))
}

fn parse_axis(text: &str) -> Result<SweepAxis> {
    match text {
        "distance" => Ok(SweepAxis::Distance),
        "frequency" => Ok(SweepAxis::Frequency),
        "tx_power" => Ok(SweepAxis::TxPower),
        other => Err(Error::config(format!(
            "axis: expected distance | frequency | tx_power, got `{other}`"
        ))),
    }
}

fn table_csv_with_errors(table: &ResultTable) -> String {
    let mut csv = table.to_csv();
    for row in &table.rows {
        if let Some(err) = &row.error {
            csv.push_str(&format!("# error axis={:.8e}: {err}\n", row.axis_value));
        }
    }
    csv
}

pub fn sweep(
    source: &SourceArgs,
    axis: Option<&str>,
    range: Option<&str>,
    compare: bool,
    out: Option<&Path>,
    jobs: Option<usize>,
) -> Result<()> {
    let jobs = match std::env::var("HARVESTSIM_JOBS") {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| {
            Error::config(format!("HARVESTSIM_JOBS: `{v}` is not a thread count"))
        })?),
        Err(_) => jobs,
    };
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::config("jobs: must be >= 1".to_string()));
        }
        // Ignore the error if a pool already exists (e.g. repeated calls in
        // tests); determinism does not depend on the worker count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let (scenario, cfg_sweep) = load_scenario(source)?;
    let mut spec = cfg_sweep.unwrap_or_else(default_sweep);
    if let Some(a) = axis {
        spec.axis = parse_axis(a)?;
    }
    if let Some(r) = range {
        let (start, stop, step) = parse_range(r)?;
        spec.start = start;
        spec.stop = stop;
        spec.step = step;
    }
    spec.validate()?;

    if compare {
        let report = compare_variants(&scenario, &spec)?;
        let mut csv = String::new();
        csv.push_str("# variant: with-pump\n");
        csv.push_str(&table_csv_with_errors(&report.with_pump));
        csv.push_str("# variant: no-pump\n");
        csv.push_str(&table_csv_with_errors(&report.no_pump));
        println!("threshold_with_pump_dbm={:.8e}", report.threshold_with_pump_dbm);
        println!("threshold_no_pump_dbm={:.8e}", report.threshold_no_pump_dbm);
        println!("sensitivity_gap_db={:.8e}", report.sensitivity_gap_db);
        println!("max_range_with_pump_m={:.8e}", report.max_range_with_pump_m);
        println!("max_range_no_pump_m={:.8e}", report.max_range_no_pump_m);
        println!("range_ratio={:.8e}", report.range_ratio);
        match report.crossover {
            Some(d) => println!("crossover={:.8e}", d),
            None => println!("crossover=none"),
        }
        for note in &report.notes {
            println!("note={note}");
        }
        write_output(out, &csv)
    } else {
        let table = run_sweep(&scenario, &spec)?;
        write_output(out, &table_csv_with_errors(&table))
    }
}

pub fn tune(zload: &str, freq: f64, z0: f64) -> Result<()> {
    let parts: Vec<&str> = zload.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::config(format!(
            "zload: expected R,X in ohms, got `{zload}`"
        )));
    }
    let r: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("zload: `{}` is not a number", parts[0])))?;
    let x: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("zload: `{}` is not a number", parts[1])))?;
    let load = Impedance::new(r, x);
    let reference = Impedance::new(z0, 0.0);
    let net = tune_fit(load, freq, reference)?.network;
    let z_in = network_input_impedance(&net, load, freq)?;
    let (gamma, rl) = reflection_and_return_loss(z_in, reference)?;
    println!("l_nh={:.8e}", net.l_henries * 1e9);
    println!("c_pf={:.8e}", net.c_farads * 1e12);
    println!(
        "topology={}",
        match net.topology {
            harvestsim_core::rf_frontend::Topology::SeriesLShuntCAtLoad => "series-l-shunt-c-at-load",
            harvestsim_core::rf_frontend::Topology::ShuntCAtSourceSeriesL => "shunt-c-at-source-series-l",
        }
    );
    println!("gamma={:.8e}", gamma);
    println!("return_loss_db={:.8e}", rl);
    Ok(())
}

pub fn calibrate(source: &SourceArgs, anchors_path: &Path, out: Option<&Path>) -> Result<()> {
    let (mut scenario, sweep) = load_scenario(source)?;
    let anchors_file = AnchorsFile::parse(&read_file(anchors_path)?)?;
    let anchors = anchors_file.to_cal_anchors()?;
    let model0: &RectifierModel = scenario.rectifier(scenario.variant);
    let (model, report) = cal_fit(&anchors, model0)?;
    match scenario.variant {
        Variant::WithPump => scenario.rectifier_with_pump = model,
        Variant::NoPump => scenario.rectifier_no_pump = model,
    }
    for (desc, residual) in &report.residuals {
        println!("residual `{desc}`: {residual:.6e}");
    }
    println!("worst_residual={:.6e}", report.worst_abs);
    let cfg = ConfigFile::from_scenario(&scenario, sweep.as_ref());
    write_output(out, &cfg.to_json())
}

pub fn preset(name: &str, out: Option<&Path>) -> Result<()> {
    if name != preset::PRESET_NAME {
        return Err(Error::config(format!(
            "preset: unknown preset `{name}` (available: {})",
            preset::PRESET_NAME
        )));
    }
    let scenario = preset::paper_2013();
    let cfg = ConfigFile::from_scenario(scenario, Some(&default_sweep()));
    write_output(out, &cfg.to_json())
}
