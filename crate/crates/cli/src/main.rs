//! Command-line front end: simulate, sweep, tune, calibrate, and preset
//! dumping, with CSV emission for the sweep tables.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 numeric error.

// Validation uses `!(x > 0.0)` instead of `x <= 0.0` so that NaN fails the
// check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};

use harvestsim_core::Error;

#[derive(Parser)]
#[command(name = "harvestsim", version, about = "UHF RFID energy-harvesting chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Path to a scenario config JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<std::path::PathBuf>,
    /// Name of a built-in preset (currently: paper-2013).
    #[arg(long)]
    preset: Option<String>,
    /// Override the configured variant (with-pump | no-pump).
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its event log and summary.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        /// Write the event-log CSV here instead of stdout.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Sweep an axis and emit a result table CSV.
    Sweep {
        #[command(flatten)]
        source: SourceArgs,
        /// Sweep axis: distance | frequency | tx_power.
        #[arg(long)]
        axis: Option<String>,
        /// Sweep range as start:stop:step in axis units.
        #[arg(long)]
        range: Option<String>,
        /// Run both variants and report the comparison.
        #[arg(long)]
        compare: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Worker threads for sweep points (HARVESTSIM_JOBS overrides).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Design a matching network for a load impedance.
    Tune {
        /// Load impedance as R,X in ohms.
        #[arg(long, allow_hyphen_values = true)]
        zload: String,
        /// Frequency in Hz.
        #[arg(long)]
        freq: f64,
        /// Reference impedance in ohms.
        #[arg(long, default_value_t = 50.0)]
        z0: f64,
    },
    /// Calibrate the active variant's rectifier against an anchors file and
    /// write the calibrated config.
    Calibrate {
        #[command(flatten)]
        source: SourceArgs,
        /// Anchors JSON file.
        #[arg(long)]
        anchors: std::path::PathBuf,
        /// Write the calibrated config here instead of stdout.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Dump a built-in preset as a config JSON.
    Preset {
        /// Preset name (paper-2013).
        #[arg(long, default_value = "paper-2013")]
        name: String,
        /// Write the config here instead of stdout.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Numeric(_) | Error::Untunable { .. } | Error::Calibration { .. } => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { source, out } => commands::simulate(&source, out.as_deref()),
        Command::Sweep {
            source,
            axis,
            range,
            compare,
            out,
            jobs,
        } => commands::sweep(
            &source,
            axis.as_deref(),
            range.as_deref(),
            compare,
            out.as_deref(),
            jobs,
        ),
        Command::Tune { zload, freq, z0 } => commands::tune(&zload, freq, z0),
        Command::Calibrate {
            source,
            anchors,
            out,
        } => commands::calibrate(&source, &anchors, out.as_deref()),
        Command::Preset { name, out } => commands::preset(&name, out.as_deref()),
    };
    if let Err(e) = result {
        eprintln!("harvestsim: {e}");
        std::process::exit(exit_code_for(&e));
    }
}
