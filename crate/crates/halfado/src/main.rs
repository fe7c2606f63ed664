use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use halfado::core::{Implication, Mode};
use halfado::experiment::{
    generate_dataset, generate_experts, run_experiment, run_seeds, ExperimentConfig, ExpertsSpec, InputSpec, OracleSpec,
};
use serde::de::{DeserializeOwned, IntoDeserializer};

#[derive(Parser)]
#[command(name = "halfado", version, about = "Streaming human-in-the-loop anomaly detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a stream through the engine.
    Run(RunArgs),
    /// Write a generated dataset or expert pool.
    #[command(subcommand)]
    Generate(Generate),
    /// Print the effective configuration as TOML.
    Config(Settings),
}

#[derive(Subcommand)]
enum Generate {
    /// Generated stream plus its manifest.
    Data {
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generated expert pool document.
    Experts {
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    settings: Settings,
    /// Run once per listed seed and print min-max ranges.
    #[arg(long, value_delimiter = ',', conflicts_with = "repeat")]
    seeds: Vec<u64>,
    /// Run this many consecutive seeds starting at --seed.
    #[arg(long)]
    repeat: Option<u64>,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(s.into_deserializer()).map_err(|e: serde::de::value::Error| e.to_string())
}

/// Every flag mirrors a key of the TOML config; flags override the file.
#[derive(Args)]
struct Settings {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// halving | agnostic | auction
    #[arg(long, value_parser = parse_enum::<Mode>)]
    mode: Option<Mode>,
    /// File path, gen:fintech or gen:text.
    #[arg(long)]
    input: Option<InputSpec>,
    /// Pool document path, gen:trees, gen:projection or gen:auto.
    #[arg(long)]
    experts: Option<ExpertsSpec>,
    /// keyword:w1,w2 | truth | human
    #[arg(long)]
    oracle: Option<OracleSpec>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Number of generated experts.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// mistake | false_alarm | disagreement
    #[arg(long, value_parser = parse_enum::<Implication>)]
    implication: Option<Implication>,
    /// Events to generate, or the most to read.
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    vocabulary: Option<usize>,
    #[arg(long)]
    baseline_words: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-event decisions CSV.
    #[arg(long)]
    decisions: Option<PathBuf>,
    /// Precision/recall plot data CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// State document written at the end, or after --snapshot-at events.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    snapshot_at: Option<u64>,
    /// Resume from a state document.
    #[arg(long)]
    restore: Option<PathBuf>,
    /// Serve the review API at this address.
    #[arg(long)]
    serve: Option<String>,
    #[arg(long)]
    queue_capacity: Option<usize>,
}

impl Settings {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(value) = self.$field {
                    config.$field = value;
                }
            )*};
        }
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    config.$field = self.$field;
                }
            )*};
        }
        set!(
            mode,
            input,
            experts,
            theta,
            alpha,
            c,
            m,
            seed,
            implication,
            population,
            vocabulary,
            baseline_words,
            queue_capacity
        );
        set_opt!(oracle, events, report, decisions, plot, snapshot, snapshot_at, restore, serve);
        Ok(config)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let config = args.settings.resolve()?;
    let seeds: Vec<u64> = match args.repeat {
        Some(n) => (0..n).map(|i| config.seed + i).collect(),
        None => args.seeds,
    };
    if !seeds.is_empty() {
        if config.serve.is_some() {
            bail!("--serve runs a single seed");
        }
        let summary = run_seeds(&config, &seeds)?;
        let json = serde_json::to_string_pretty(&summary)?;
        match &config.report {
            Some(path) => std::fs::write(path, json + "\n")?,
            None => println!("{json}"),
        }
        return Ok(());
    }
    let report = match &config.serve {
        Some(addr) => {
            let addr: SocketAddr = addr.parse().with_context(|| format!("invalid --serve address {addr}"))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(halfado::api::run_served(config.clone(), addr))?
        }
        None => run_experiment(&config)?,
    };
    if config.report.is_none() {
        println!("{}", report.to_json_pretty());
    } else {
        eprintln!(
            "{} events, {} inspections ({:.2}%), {} active experts",
            report.events_processed,
            report.inspections,
            100.0 * report.inspection_fraction,
            report.final_active_size
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Generate(Generate::Data { settings, out }) => settings.resolve().and_then(|config| {
            let (count, manifest) = generate_dataset(&config, &out)?;
            eprintln!("wrote {count} records to {} ({})", out.display(), manifest.display());
            Ok(())
        }),
        Command::Generate(Generate::Experts { settings, out }) => settings.resolve().and_then(|config| {
            let size = generate_experts(&config, &out)?;
            eprintln!("wrote {size} experts to {}", out.display());
            Ok(())
        }),
        Command::Config(settings) => settings.resolve().map(|config| print!("{}", config.to_toml())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
