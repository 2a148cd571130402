//! `ccroute`: command-line front end for cell computation, routing,
//! Monte-Carlo batches, sweeps and spectrum balancing.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use ccroute_core::sim::{Format, SweepAxis};
use ccroute_core::traffic::CrossRoadPolicy;
use clap::{Parser, Subcommand, ValueEnum};

use config::{Config, Preset};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ccroute_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ccroute_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_routing_failure() => 3,
            CliError::Core(E::Io(_) | E::Csv(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    TwoLayer,
    Greedy,
    GreedyCc,
    ShortestTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CrossRoadArg {
    WeightedMaxMin,
    MaxTotal,
    ProportionalFair,
}

impl From<CrossRoadArg> for CrossRoadPolicy {
    fn from(c: CrossRoadArg) -> Self {
        match c {
            CrossRoadArg::WeightedMaxMin => CrossRoadPolicy::WeightedMaxMin,
            CrossRoadArg::MaxTotal => CrossRoadPolicy::MaxTotal,
            CrossRoadArg::ProportionalFair => CrossRoadPolicy::ProportionalFair,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ccroute", version, about = "Communication-constrained routing and traffic control for connected AVs")]
struct Cli {
    /// JSON config layered over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute every station's γ-rate cell for one trial's speed map.
    Cells {
        /// Rate threshold in Mbps; defaults to the scenario's.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Plan and drive one route.
    Route {
        /// Source intersection id; defaults to the trial's source.
        #[arg(long)]
        from: Option<u32>,
        /// Destination intersection id; defaults to the trial's destination.
        #[arg(long)]
        to: Option<u32>,
        #[arg(long, value_enum, default_value_t = SchemeArg::TwoLayer)]
        scheme: SchemeArg,
        /// Rate threshold in Mbps; ignored by shortest-time.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the Monte-Carlo batch and write CDFs, trips and a summary.
    Montecarlo {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Sweep one parameter; routing axes run a batch per value.
    Sweep {
        #[arg(long, value_parser = parse_axis)]
        axis: Option<SweepAxis>,
        /// Comma-separated ascending values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Trials per value for routing axes.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Balance spectrum across cells and compare with an equal split.
    Balance {
        /// Total channels.
        #[arg(long)]
        b0: Option<f64>,
        #[arg(long, value_enum)]
        cross_road: Option<CrossRoadArg>,
    },
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: ccroute_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path, cli.preset)?,
        None => Config::preset(cli.preset),
    };
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    let ctx = commands::Context {
        out: cli.out,
        format: cli.format.into(),
    };
    match cli.command {
        Command::Cells { gamma, trial } => commands::cells(&ctx, cfg, gamma, trial),
        Command::Route {
            from,
            to,
            scheme,
            gamma,
            trial,
        } => {
            let scheme = match scheme {
                SchemeArg::TwoLayer => ccroute_core::routing::Scheme::TwoLayer,
                SchemeArg::Greedy => ccroute_core::routing::Scheme::Greedy,
                SchemeArg::GreedyCc => ccroute_core::routing::Scheme::GreedyCc,
                SchemeArg::ShortestTime => ccroute_core::routing::Scheme::ShortestTime,
            };
            commands::route(&ctx, cfg, from, to, scheme, gamma, trial)
        }
        Command::Montecarlo { trials } => commands::montecarlo(&ctx, cfg, trials),
        Command::Sweep { axis, values, trials } => commands::sweep(&ctx, cfg, axis, values, trials),
        Command::Balance { b0, cross_road } => commands::balance(&ctx, cfg, b0, cross_road.map(Into::into)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
