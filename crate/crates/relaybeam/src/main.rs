//! Command-line front end: parse flags, merge them over the config file,
//! run the requested experiment, and write the result tables.
//!
//! Exit codes: 0 on success, 2 for configuration errors (bad flags, bad or
//! missing config values, missing seed), 3 for I/O errors (unreadable config
//! file, unwritable output).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relaybeam::config::{self, ConfigError, ExperimentConfig};
use relaybeam::experiment::{self, Command, ExperimentError, Record};
use relaybeam::liftings::FormulationKind;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "relaybeam",
    version,
    about = "Relay beamforming experiments: jammed two-hop networks with an \
             energy-harvesting receiver",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// One constrained beamforming solve per trial.
    Solve(RunArgs),
    /// A full rate-energy region sweep per trial.
    Region(RunArgs),
    /// One solve per trial per swept parameter value (needs sweep_* config keys).
    Sweep(RunArgs),
    /// Every configured scheme per trial, optionally along a sweep.
    Compare(RunArgs),
}

impl Sub {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            Sub::Solve(a) => (Command::Solve, a),
            Sub::Region(a) => (Command::Region, a),
            Sub::Sweep(a) => (Command::Sweep, a),
            Sub::Compare(a) => (Command::Compare, a),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Config file (flat `key: value` lines); defaults apply when absent.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides any seed in the config file.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Output CSV path (default: `<command>.csv`).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Maximum concurrent trials (default: all cores). Output bytes do not
    /// depend on this.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,

    /// Solver formulation; overrides the config file.
    #[arg(long, value_enum, value_name = "NAME")]
    formulation: Option<FormulationArg>,

    /// Rate-energy grid size for `region`; overrides the config file.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,

    /// `json` additionally writes a JSON mirror next to the CSV.
    #[arg(long, value_enum, value_name = "csv|json", default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormulationArg {
    /// Pick by problem size (reduced above four antennas).
    Auto,
    Direct,
    Reduced,
    Combined,
}

impl FormulationArg {
    fn to_kind(self) -> Option<FormulationKind> {
        match self {
            FormulationArg::Auto => None,
            FormulationArg::Direct => Some(FormulationKind::Direct),
            FormulationArg::Reduced => Some(FormulationKind::Reduced),
            FormulationArg::Combined => Some(FormulationKind::Combined),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = cli.command.split();
    match execute(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn execute(cmd: Command, args: &RunArgs) -> Result<(), u8> {
    let cfg = build_config(args)?;

    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return Err(EXIT_CONFIG);
        }
        // First and only global-pool initialization; a failure here would
        // mean the pool already exists, which leaves the default intact.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let records = experiment::run(cmd, &cfg).map_err(|e| match &e {
        ExperimentError::Config(c) => {
            eprintln!("error: {c}");
            config_exit(c)
        }
        ExperimentError::Params(p) => {
            eprintln!("error: invalid system parameters: {p}");
            EXIT_CONFIG
        }
    })?;

    write_outputs(cmd, args, &records)
}

/// Load the config file (or defaults), merge flag overrides, and re-check
/// the flag-supplied values.
fn build_config(args: &RunArgs) -> Result<ExperimentConfig, u8> {
    let mut cfg = match &args.config {
        Some(path) => config::load_config(path).map_err(|e| {
            eprintln!("error: {e}");
            config_exit(&e)
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(f) = args.formulation {
        cfg.formulation = f.to_kind();
    }
    if let Some(grid) = args.grid {
        if grid < 2 {
            eprintln!("error: --grid needs at least 2 points to span the region");
            return Err(EXIT_CONFIG);
        }
        cfg.n_grid = grid;
    }
    Ok(cfg)
}

fn write_outputs(cmd: Command, args: &RunArgs, records: &[Record]) -> Result<(), u8> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cmd.as_str())));
    experiment::write_csv_file(&out, records).map_err(|e| {
        eprintln!("error: writing {}: {e}", out.display());
        EXIT_IO
    })?;
    eprintln!("wrote {} ({} rows)", out.display(), records.len());

    if args.format == FormatArg::Json {
        let mirror = out.with_extension("json");
        experiment::write_json_file(&mirror, records).map_err(|e| {
            eprintln!("error: writing {}: {e}", mirror.display());
            EXIT_IO
        })?;
        eprintln!("wrote {}", mirror.display());
    }
    Ok(())
}

/// A config file that cannot be read is an I/O failure; everything else
/// about configuration is a config failure.
fn config_exit(e: &ConfigError) -> u8 {
    match e {
        ConfigError::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}
