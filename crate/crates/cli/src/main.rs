use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use vibrograph::bench::{run_bench, BenchConfig};
use vibrograph::document::render_document;
use vibrograph::engine::{EngineError, Modality};
use vibrograph::export::{self, ExportError, ExportFormat};
use vibrograph::propagation::{HookRegistry, Strategy};
use vibrograph::report::{diff_runs, DiffError};
use vibrograph::scenario::{load_scenario, ScenarioError};
use vibrograph::scenarios::{generate, GenerateError, GeneratorParams, ScenarioKind};
use vibrograph::Real;

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("bench failed: {0}")]
    Bench(ScenarioError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Parser)]
#[command(name = "vibrograph", version, about = "Render vibrotactile signals over a dynamic contact graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write per-listener signals, stats and a run record.
    Run(RunArgs),
    /// Write one of the built-in ride scenarios.
    Generate(GenerateArgs),
    /// Compare the stats of two runs.
    Diff(DiffArgs),
    /// Load and validate a scenario without running it.
    Validate(ValidateArgs),
    /// Time ticks on a 100-object, 500-node synthetic scene.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModalityArg {
    Ht,
    Sd,
    Md,
    Mn,
}

impl From<ModalityArg> for Modality {
    fn from(m: ModalityArg) -> Self {
        match m {
            ModalityArg::Ht => Modality::Ht,
            ModalityArg::Sd => Modality::Sd,
            ModalityArg::Md => Modality::Md,
            ModalityArg::Mn => Modality::Mn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bfs,
    Dijkstra,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Bfs => Strategy::Bfs,
            StrategyArg::Dijkstra => Strategy::Dijkstra,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Wav,
    Csv,
    Both,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Wav => ExportFormat::Wav,
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Both => ExportFormat::Both,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Stalactites,
    Wind,
    Projectiles,
    Explosion,
    Carts,
    Walls,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Stalactites => ScenarioKind::Stalactites,
            KindArg::Wind => ScenarioKind::Wind,
            KindArg::Projectiles => ScenarioKind::Projectiles,
            KindArg::Explosion => ScenarioKind::Explosion,
            KindArg::Carts => ScenarioKind::Carts,
            KindArg::Walls => ScenarioKind::Walls,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's modality.
    #[arg(long, value_enum)]
    modality: Option<ModalityArg>,
    /// Overrides the scenario's duration (seconds).
    #[arg(long)]
    duration: Option<f64>,
    /// Overrides the scenario's seed (recorded in record.json).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
    /// Overrides the propagation strategy.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Propagation worker threads (output does not depend on it).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds; defaults to 10 (20 for walls).
    #[arg(long)]
    duration: Option<f64>,
    /// Stalactite impacts, or darts per projectile burst.
    #[arg(long, default_value_t = 3)]
    count: usize,
    /// Seconds between projectile bursts.
    #[arg(long, default_value_t = 5.0)]
    period: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiffArgs {
    /// Run directory (containing stats.json) or a stats file.
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 500)]
    ticks: u64,
    #[arg(long, value_enum, default_value = "dijkstra")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

/// Everything needed to reproduce a run.
#[derive(Serialize)]
struct RunRecord {
    scenario: String,
    config_sha256: String,
    seed: u64,
    modality: Modality,
    duration: f64,
    strategy: String,
    precision: &'static str,
    format: &'static str,
    version: &'static str,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    match args.precision {
        Precision::F64 => run_with::<f64>(args),
        Precision::F32 => run_with::<f32>(args),
    }
}

fn run_with<T: Real>(args: &RunArgs) -> Result<(), CliError> {
    let text = read(&args.scenario)?;
    let base = args.scenario.parent().unwrap_or_else(|| Path::new("."));
    let scenario_err = |source| CliError::Scenario {
        path: args.scenario.clone(),
        source,
    };
    let mut scenario = load_scenario::<T>(&text, base).map_err(scenario_err)?;
    if let Some(m) = args.modality {
        scenario.config.modality = m.into();
    }
    if let Some(s) = args.strategy {
        scenario.config.propagation.strategy = s.into();
    }
    if let Some(d) = args.duration {
        scenario.duration = T::lit(d);
    }
    if let Some(seed) = args.seed {
        scenario.config.seed = seed;
    }
    if let Some(w) = args.workers {
        scenario.config.workers = w;
    }
    scenario.config.validate()?;
    let ticks = vibrograph::engine::ticks_for(scenario.duration, scenario.config.tick_rate)?;

    let precision = match args.precision {
        Precision::F32 => "f32",
        Precision::F64 => "f64",
    };
    let format: ExportFormat = args.format.into();
    let strategy = match scenario.config.propagation.strategy {
        Strategy::Bfs => "bfs",
        Strategy::Dijkstra => "dijkstra",
    };
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update(
        format!(
            "\0modality={};strategy={strategy};duration={};seed={};precision={precision}",
            scenario.config.modality,
            scenario.duration,
            scenario.config.seed
        )
        .as_bytes(),
    );
    let record = RunRecord {
        scenario: args.scenario.display().to_string(),
        config_sha256: hex::encode(hasher.finalize()),
        seed: scenario.config.seed,
        modality: scenario.config.modality,
        duration: scenario.duration.as_f64(),
        strategy: strategy.into(),
        precision,
        format: match format {
            ExportFormat::Wav => "wav",
            ExportFormat::Csv => "csv",
            ExportFormat::Both => "both",
        },
        version: env!("CARGO_PKG_VERSION"),
    };

    info!("running {} ticks of {}", ticks, args.scenario.display());
    let mut engine = scenario.engine(HookRegistry::new())?;
    engine.run_ticks(ticks)?;
    let written = export::export_outputs(&args.out, &engine.output(), format)?;
    let stats = engine.stats();
    export::write_stats(&args.out.join("stats.json"), &stats)?;
    let record_path = args.out.join("record.json");
    let record_text = serde_json::to_string_pretty(&record).expect("record always serializes") + "\n";
    fs::write(&record_path, record_text).map_err(|e| io_err(&record_path, e))?;

    println!(
        "{} ticks, modality {}, {} files in {}",
        ticks,
        stats.modality,
        written.len() + 2,
        args.out.display()
    );
    for l in &stats.listeners {
        println!("  {:<16} rms {:.6}  peak {:.6}", l.id, l.rms, l.peak);
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let kind: ScenarioKind = args.kind.into();
    let params = GeneratorParams {
        seed: args.seed,
        duration: args.duration.unwrap_or_else(|| kind.default_duration()),
        count: args.count,
        period: args.period,
    };
    let text = render_document(&generate(kind, &params)?);
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn stats_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("stats.json")
    } else {
        p.to_path_buf()
    }
}

fn cmd_diff(args: &DiffArgs) -> Result<(), CliError> {
    let a = export::read_stats(&stats_path(&args.a))?;
    let b = export::read_stats(&stats_path(&args.b))?;
    let report = diff_runs(&a, &b)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report always serializes"));
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let text = read(&args.scenario)?;
    let base = args.scenario.parent().unwrap_or_else(|| Path::new("."));
    let s = load_scenario::<f64>(&text, base).map_err(|source| CliError::Scenario {
        path: args.scenario.clone(),
        source,
    })?;
    println!(
        "ok: {} objects, {} sources, {} listeners, {} templates, {} events, {} s at {} Hz ({})",
        s.scene.objects.len(),
        s.scene.sources.len(),
        s.scene.listeners.len(),
        s.scene.templates.len(),
        s.timeline.len(),
        s.duration,
        s.config.tick_rate,
        s.config.modality
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig {
        ticks: args.ticks,
        strategy: args.strategy.into(),
        workers: args.workers,
        seed: args.seed,
        ..BenchConfig::default()
    };
    let report = run_bench::<f64>(&cfg).map_err(CliError::Bench)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report always serializes"));
    } else {
        println!("{}", report.to_text());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
