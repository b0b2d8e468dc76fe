mod commands;
mod config;
mod error;
mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use commands::{BreaktimeArgs, EntropyArgs, ErgodicityArgs, GeneratorArgs, GrainArgs, Outputs, TimescaleArgs};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ergotau", version, about = "Entropy, ergodicity, graining and break-time pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// JSON config document (or a previous run's manifest.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON outputs and the run manifest.
    #[arg(long, short, global = true, default_value = "ergotau-out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Block entropies and the KS-entropy estimate of a map.
    Entropy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: EntropyArgs,
    },
    /// Correlation decay and its Cesàro average.
    Ergodicity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ErgodicityArgs,
    },
    /// Generator check and the cardinality window.
    Generator {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: GeneratorArgs,
    },
    /// Rigid-box graining of a phase-space region.
    Grain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: GrainArgs,
    },
    /// Logarithmic timescale ln q / h.
    Timescale {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TimescaleArgs,
    },
    /// Quantum/classical break-time sweep of the kicked rotor.
    Breaktime {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BreaktimeArgs,
    },
    /// SVG line chart of one or more output CSVs.
    Plot {
        /// CSV files written by the other subcommands.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// SVG destination.
        #[arg(long, short, default_value = "plot.svg")]
        output: PathBuf,
        #[arg(long)]
        title: Option<String>,
        /// x position of a vertical marker, e.g. a break time.
        #[arg(long)]
        marker: Option<f64>,
    },
}

fn env_seed() -> CliResult<u64> {
    match std::env::var("ERGOTAU_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("ERGOTAU_SEED `{s}` is not an unsigned integer"))),
        Err(_) => Ok(ergotau::rng::DEFAULT_SEED),
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(s) = std::env::var("ERGOTAU_THREADS") else {
        return Ok(());
    };
    let n: usize = s
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("ERGOTAU_THREADS `{s}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Merges config and flags, fills defaults, runs, and writes the manifest.
fn pipeline<T, R, F>(name: &str, common: &Common, flags: &T, resolve: R, run: F) -> CliResult<Value>
where
    T: Serialize + DeserializeOwned,
    R: FnOnce(&mut T),
    F: FnOnce(&T, &mut Outputs) -> CliResult<Value>,
{
    let started = Instant::now();
    let file = common.config.as_deref().map(|p| config::load(p, name)).transpose()?;
    let mut args: T = config::merge(file, flags)?;
    resolve(&mut args);
    let mut out = Outputs::prepare(&common.out)?;
    let summary = run(&args, &mut out)?;
    let manifest = json!({
        "tool": "ergotau",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": name,
        "config": args,
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "outputs": out.written,
    });
    out.write_json("manifest.json", &manifest)?;
    Ok(summary)
}

fn plot(inputs: &[PathBuf], output: &Path, title: Option<&str>, marker: Option<f64>) -> CliResult<Value> {
    let texts = inputs
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, text))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let chart = plot::chart(&texts)?;
    let svg = plot::render(&chart, title.unwrap_or(&chart.y_label), marker);
    std::fs::write(output, svg).map_err(|e| CliError::io(output, e))?;
    Ok(json!({ "svg": output, "series": chart.series.len() }))
}

fn run(cli: Cli) -> CliResult<Value> {
    init_threads()?;
    let seed = env_seed()?;
    match cli.command {
        Command::Entropy { common, args } => {
            pipeline("entropy", &common, &args, |a: &mut EntropyArgs| a.resolve(seed), EntropyArgs::run)
        }
        Command::Ergodicity { common, args } => {
            pipeline("ergodicity", &common, &args, |a: &mut ErgodicityArgs| a.resolve(seed), ErgodicityArgs::run)
        }
        Command::Generator { common, args } => {
            pipeline("generator", &common, &args, |a: &mut GeneratorArgs| a.resolve(seed), GeneratorArgs::run)
        }
        Command::Grain { common, args } => pipeline("grain", &common, &args, GrainArgs::resolve, GrainArgs::run),
        Command::Timescale { common, args } => {
            pipeline("timescale", &common, &args, TimescaleArgs::resolve, TimescaleArgs::run)
        }
        Command::Breaktime { common, args } => {
            pipeline("breaktime", &common, &args, |a: &mut BreaktimeArgs| a.resolve(seed), BreaktimeArgs::run)
        }
        Command::Plot {
            inputs,
            output,
            title,
            marker,
        } => plot(&inputs, &output, title.as_deref(), marker),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "InvalidArguments", "message": first }));
            std::process::exit(2);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("JSON values serialize"));
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            std::process::exit(e.exit_code());
        }
    }
}
