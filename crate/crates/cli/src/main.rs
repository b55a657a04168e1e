//! `rram-drift`: file-based front end for the drift pipeline.
//!
//! Stages exchange JSON files: `generate` → `profile` / `criticality` →
//! `partition` → `map` → `simulate`. `compare` runs the whole chain for every
//! mapping mode and `figdata` emits plot-ready CSV for the device and circuit
//! characteristics.
//!
//! Exit status: 0 success, 2 invalid input, 3 infeasible problem, 4 internal
//! failure. Failures print one JSON object on standard error.

mod commands;
mod figdata;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rram_drift::{Error, ErrorClass, MapMode};

#[derive(Debug, Parser)]
#[command(name = "rram-drift", version, about = "Read-disturb drift analysis and drift-aware crossbar mapping")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Log verbosity; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a fully connected layered model and a self-labelled dataset.
    Generate(GenerateArgs),
    /// Average spikes per inference through every synapse.
    Profile(ProfileArgs),
    /// Single-fault perturbation sweep marking critical synapses.
    Criticality(CriticalityArgs),
    /// Split the model into crossbar-sized clusters.
    Partition(PartitionArgs),
    /// Place every cluster on a crossbar and compute tRPI.
    Map(MapArgs),
    /// Stream inferences on the drifting crossbars.
    Simulate(SimulateArgs),
    /// Map and simulate in random, endurer and proposed modes.
    Compare(CompareArgs),
    /// Plot-ready CSV for the device and circuit characteristics.
    Figdata(FigdataArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Layer sizes, input layer first, e.g. `4,8,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    layers: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Input spike counts are drawn from `0..=max-input-spikes`.
    #[arg(long, default_value_t = 4)]
    max_input_spikes: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    dataset_out: PathBuf,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CriticalityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Accuracy drop that marks a synapse critical (overrides the config).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Crossbar size N (overrides the config; default 128).
    #[arg(long)]
    crossbar_n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    criticality: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mapping mode (overrides the config; default proposed).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    mapping: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spike profile; recomputed from model and dataset when omitted.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Criticality report used to count critical drift; recomputed when omitted.
    #[arg(long)]
    criticality: Option<PathBuf>,
    /// `auto` (the mapping's tRPI), `never`, or `every=K`.
    #[arg(long, default_value = "auto")]
    policy: String,
    /// Inferences to stream (overrides the config).
    #[arg(long)]
    length: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Accuracy timeline CSV.
    #[arg(long)]
    timeline: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comparison CSV.
    #[arg(long)]
    out: PathBuf,
    /// Full comparison JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FigdataArgs {
    #[arg(long, value_enum)]
    which: Figure,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Proposed,
    Endurer,
    Random,
    Exact,
}

impl From<ModeArg> for MapMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Proposed => MapMode::Proposed,
            ModeArg::Endurer => MapMode::Endurer,
            ModeArg::Random => MapMode::Random,
            ModeArg::Exact => MapMode::Exact,
        }
    }
}

/// Figure datasets.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    /// Corner current difference against crossbar size.
    Fig4,
    /// Nodal voltage map of the 128x128 reference array and HRS transition times.
    Fig5,
    /// HRS and LRS transition times against stress voltage.
    Fig8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            report_error(&e);
            ExitCode::from(exit_status(e.class()))
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            let body = serde_json::json!({
                "error": { "kind": "panic", "class": "internal", "field": null, "message": message }
            });
            eprintln!("{body}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::invalid("jobs", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    }
    match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Profile(a) => commands::profile(&a),
        Command::Criticality(a) => commands::criticality(&a),
        Command::Partition(a) => commands::partition(&a),
        Command::Map(a) => commands::map(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Figdata(a) => figdata::run(&a),
    }
}

fn exit_status(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Infeasible => 3,
        ErrorClass::Internal => 4,
    }
}

fn report_error(e: &Error) {
    let class = match e.class() {
        ErrorClass::Validation => "validation",
        ErrorClass::Infeasible => "infeasible",
        ErrorClass::Internal => "internal",
    };
    let body = serde_json::json!({
        "error": { "kind": e.kind(), "class": class, "field": e.field(), "message": e.to_string() }
    });
    eprintln!("{body}");
}
