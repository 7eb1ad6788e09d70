//! `patrol` command-line entry point.
//!
//! Exit status: 0 on success, 1 on bad input or usage, 2 on internal failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patrol_core::garage::{decode_drive_command, encode_drive_command, parse_scenario, simulate_patrol, DriveCommand};
use patrol_core::localization::{
    estimate_position, parse_beacons, parse_readings, ranges_from_readings, LocalizationMethod, PathLossModel,
};
use patrol_core::plates::{consensus, parse_candidates, DEFAULT_TOP_K};
use patrol_core::registry::{load_registry, FixtureBackend, OwnerClient, DEFAULT_LOOKUP_DEADLINE};
use patrol_core::report::{build_report, LocalizationConfig, DEFAULT_READING_WINDOW};
use patrol_core::solvers::{bench_solve, BenchConfig, BenchError, DEFAULT_TRIALS};

const STUB_FIXTURE_ENV: &str = "PATROL_STUB_FIXTURE";

#[derive(Parser)]
#[command(name = "patrol", version, about = "Garage patrol monitoring toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the robot position from beacon readings.
    Localize(LocalizeArgs),
    /// Time the linear solvers on seeded dominant systems.
    SolveBench(BenchArgs),
    /// Aggregate plate candidates into a consensus plate.
    Consensus(ConsensusArgs),
    /// Validate a tenant registry and optionally look up a plate or stall.
    RegistryCheck(RegistryArgs),
    /// Simulate a patrol and write the occupancy report.
    Patrol(PatrolArgs),
    /// Encode or decode a drive-command frame.
    Codec(CodecArgs),
}

#[derive(Args)]
struct LocalizeArgs {
    #[arg(long)]
    beacons: PathBuf,
    #[arg(long)]
    readings: PathBuf,
    #[arg(long, default_value = "least-squares")]
    method: String,
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Only use readings from this tick (default: average every reading per beacon).
    #[arg(long)]
    tick: Option<u64>,
    /// Keep only the strongest K beacons.
    #[arg(long)]
    max_beacons: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFormat {
    Json,
    Table,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    method: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: BenchFormat,
}

#[derive(Args)]
struct ConsensusArgs {
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    k: usize,
}

#[derive(Args)]
struct RegistryArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    plate: Option<String>,
    #[arg(long)]
    stall: Option<String>,
}

#[derive(Args)]
struct PatrolArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    /// Report destination; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "least-squares")]
    method: String,
    #[arg(long, default_value_t = DEFAULT_READING_WINDOW)]
    reading_window: u64,
    #[arg(long, default_value_t = DEFAULT_LOOKUP_DEADLINE.as_millis() as u64)]
    lookup_deadline_ms: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CodecArgs {
    /// Command such as F090.
    #[arg(long)]
    encode: Option<String>,
    /// Frame body such as F090 (the trailing linefeed is implied).
    #[arg(long)]
    decode: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("output values serialize")
}

fn localize(args: LocalizeArgs) -> Result<String, CliError> {
    let method: LocalizationMethod = args.method.parse().map_err(CliError::input)?;
    let model = PathLossModel::new(args.exponent).map_err(CliError::input)?;
    let beacons = parse_beacons::<f64>(&read(&args.beacons)?).map_err(CliError::input)?;
    let mut readings = parse_readings::<f64>(&read(&args.readings)?).map_err(CliError::input)?;
    if let Some(t) = args.tick {
        readings.retain(|r| r.tick == t);
    }
    let (used, ranges) =
        ranges_from_readings(&beacons, &readings, &model, args.max_beacons).map_err(CliError::input)?;
    let estimate = estimate_position(&used, &ranges, method).map_err(CliError::input)?;
    Ok(json(&estimate) + "\n")
}

fn solve_bench(args: BenchArgs) -> Result<String, CliError> {
    let config = BenchConfig {
        method: args.method.parse().map_err(CliError::input)?,
        n: args.n,
        workers: args.workers,
        trials: args.trials,
        seed: args.seed,
    };
    let report = bench_solve::<f64>(&config).map_err(|e| match e {
        BenchError::Config(_) => CliError::input(e),
        BenchError::Solver(_) => CliError::Internal(e.to_string()),
    })?;
    Ok(match args.format {
        BenchFormat::Json => report.to_json_lines(),
        BenchFormat::Table => report.to_table(),
    })
}

fn run_consensus(args: ConsensusArgs) -> Result<String, CliError> {
    let candidates = parse_candidates(&read(&args.candidates)?).map_err(CliError::input)?;
    let result = consensus(&candidates, args.k).map_err(CliError::input)?;
    Ok(json(&result) + "\n")
}

fn registry_check(args: RegistryArgs) -> Result<String, CliError> {
    let registry = load_registry(&args.registry).map_err(CliError::input)?;
    let mut out = serde_json::json!({
        "records": registry.len(),
        "registered_plates": registry.records().iter().filter(|r| !r.plate.is_empty()).count(),
    });
    if let Some(plate) = args.plate {
        let plate = patrol_core::plates::normalize_plate(&plate);
        out["by_plate"] = serde_json::to_value(registry.find_by_plate(&plate)).expect("record serializes");
    }
    if let Some(stall) = args.stall {
        out["by_stall"] = serde_json::to_value(registry.find_by_stall(&stall)).expect("record serializes");
    }
    Ok(out.to_string() + "\n")
}

fn patrol(args: PatrolArgs) -> Result<String, CliError> {
    let mut scenario = parse_scenario(&read(&args.scenario)?).map_err(CliError::input)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let registry = load_registry(&args.registry).map_err(CliError::input)?;
    let lookup = match std::env::var_os(STUB_FIXTURE_ENV) {
        Some(path) => {
            let backend = FixtureBackend::from_file(&path).map_err(CliError::input)?;
            Some(OwnerClient::new(backend, Duration::from_millis(args.lookup_deadline_ms)))
        }
        None => None,
    };
    let config = LocalizationConfig {
        method: args.method.parse().map_err(CliError::input)?,
        path_loss: scenario.path_loss(),
        reading_window: args.reading_window,
        ..LocalizationConfig::default()
    };
    let events = simulate_patrol(&scenario).map_err(CliError::input)?;
    let report = build_report(&events, &registry, &scenario.map, &config, lookup.as_ref()).map_err(CliError::input)?;
    eprint!("{}", report.to_table());
    let body = report.to_json() + "\n";
    match args.out {
        Some(path) => {
            fs::write(&path, body).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(body),
    }
}

fn codec(args: CodecArgs) -> Result<String, CliError> {
    if let Some(text) = args.encode {
        let cmd: DriveCommand = text.parse().map_err(CliError::input)?;
        let frame = encode_drive_command(cmd);
        return Ok(String::from_utf8(frame.to_vec()).expect("frames are ascii"));
    }
    let text = args.decode.unwrap_or_default();
    let mut frame = text.into_bytes();
    if frame.last() != Some(&b'\n') {
        frame.push(b'\n');
    }
    let cmd = decode_drive_command(&frame).map_err(CliError::input)?;
    Ok(json(&cmd) + "\n")
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Localize(a) => localize(a),
        Command::SolveBench(a) => solve_bench(a),
        Command::Consensus(a) => run_consensus(a),
        Command::RegistryCheck(a) => registry_check(a),
        Command::Patrol(a) => patrol(a),
        Command::Codec(a) => codec(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
