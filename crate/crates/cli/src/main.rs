//! `sight`: simulate streams, run methods over them, and check the results.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 data contract,
//! 4 internal invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sight::ScoreKind;

mod cmd;
mod error;
mod plot;

use error::CliError;

#[derive(Parser)]
#[command(name = "sight", version, about = "Backpropagation-free test-time adaptation for activity streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic stream and the planted source head.
    Simulate(SimulateArgs),
    /// Run one method over a stream and write its report.
    Run(RunArgs),
    /// Compare methods under chronological, block-shuffled and shuffled order.
    PermTest(PermTestArgs),
    /// Time the adapter and fit its state size.
    Bench(BenchArgs),
    /// Check that boundaries are visible in feature geometry.
    ValidateGeometry(GeometryArgs),
    /// Print a default config as JSON.
    Config {
        #[arg(value_enum)]
        which: DefaultConfig,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum DefaultConfig {
    /// The default synthetic benchmark, for `simulate`.
    Benchmark,
    /// Adapter parameters, for `--config` of the sight method.
    Sight,
}

/// Where to find a stream and the head that produced it.
#[derive(Args, Clone)]
pub struct Inputs {
    /// Stream file (`.jsonl` or `.csv`).
    #[arg(long)]
    pub stream: PathBuf,
    /// Classifier weights (`.json` or `.csv`).
    #[arg(long)]
    pub weights: PathBuf,
    /// Whether records carry logits or probabilities.
    #[arg(long, value_enum, default_value = "logits")]
    pub scores: ScoreArg,
}

#[derive(clap::ValueEnum, Clone, Copy)]
pub enum ScoreArg {
    Logits,
    Probs,
}

impl From<ScoreArg> for ScoreKind {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::Logits => ScoreKind::Logits,
            ScoreArg::Probs => ScoreKind::Probs,
        }
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Simulator config (JSON); `configs/benchmark.json` is the default benchmark.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub length: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output directory; receives `stream.jsonl`, `weights.json` and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the stream as CSV.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args)]
pub struct MethodArgs {
    /// `sight`, `source-only`, `persistence` or `markov`.
    #[arg(long, default_value = "sight")]
    pub method: String,
    /// Method parameters (JSON object), e.g. `{"beta": 2.0}` for sight.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Disable one adapter mechanism; repeatable.
    #[arg(long = "ablate", value_name = "FLAG")]
    pub ablations: Vec<String>,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Report JSON.
    #[arg(long)]
    pub report: PathBuf,
    /// Per-step trace (JSON Lines).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Include the prototype bank in every trace row.
    #[arg(long, requires = "trace")]
    pub snapshots: bool,
    /// Tidy per-step CSV for plotting.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Run manifest; defaults to `<report>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct PermTestArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "source-only,sight,persistence,markov")]
    pub methods: Vec<String>,
    /// Comma-separated permutation seeds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    /// Parameters for the sight method (JSON object).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Table as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tidy CSV, one row per (method, order, seed).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Parameters for the adapter (JSON object).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Untimed steps before timing starts.
    #[arg(long, default_value_t = 100)]
    pub warmup: usize,
    /// Report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tidy CSV of the state-size sweep.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tidy CSV of per-step similarities.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Run(a) => cmd::run::run(a),
        Command::PermTest(a) => cmd::perm::run(a),
        Command::Bench(a) => cmd::bench::run(a),
        Command::ValidateGeometry(a) => cmd::geometry::run(a),
        Command::Config { which } => {
            let v = match which {
                DefaultConfig::Benchmark => serde_json::to_string_pretty(&sight::simulator::SimConfig::benchmark()),
                DefaultConfig::Sight => serde_json::to_string_pretty(&sight::SightConfig::default()),
            };
            println!("{}", v.expect("configs serialize"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Worker count for sweeps: `SIGHT_WORKERS`, else rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SIGHT_WORKERS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("SIGHT_WORKERS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}
