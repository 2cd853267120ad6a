//! Command-line front end for the experiment pipeline: each subcommand runs
//! one stage (or the sweep) for every seed in the config, with flags
//! mirroring the JSON keys for quick overrides.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlemap::harness::{
    configure_workers_from_env, run_stage, run_sweep, ExperimentConfig, LambdaSpec, Stage,
    SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "qlemap",
    version,
    about = "Spectral node embedding and classification on a simulated quantum computer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the graphs, labels, communities, and train/test splits
    Generate(StageArgs),
    /// Decompose each graph Laplacian into thresholded Pauli terms
    Decompose(StageArgs),
    /// Train the variational embedding and write manifests
    Embed(StageArgs),
    /// Train the variational classifier on the embedded states
    Classify(StageArgs),
    /// Run the classical eigenmap plus logistic-regression baseline
    Baseline(StageArgs),
    /// Run the full pipeline over a parameter grid and tabulate results
    Sweep(StageArgs),
    /// Emit 2-D scatter data for the quantum and classical embeddings
    Embedviz(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed list (repeat the flag or comma-separate)
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Override the node count
    #[arg(long)]
    n_nodes: Option<usize>,
    /// Override the intra-community edge probability
    #[arg(long)]
    p_in: Option<f64>,
    /// Override the inter-community edge probability
    #[arg(long)]
    p_out: Option<f64>,
    /// Override the embedding dimension (2 or 4)
    #[arg(long)]
    d: Option<usize>,
    /// Override the entangling-layer count
    #[arg(long)]
    k: Option<usize>,
    /// Override the penalty weight (a number, or "auto")
    #[arg(long)]
    lambda: Option<String>,
    /// Override the coefficient threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Override the optimizer restart count
    #[arg(long)]
    restarts: Option<usize>,
    /// Override the optimizer evaluation budget
    #[arg(long)]
    max_iter: Option<usize>,
    /// Override the test fraction
    #[arg(long)]
    test_fraction: Option<f64>,
}

impl StageArgs {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<(), String> {
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if !self.seeds.is_empty() {
            config.seeds = self.seeds.clone();
        }
        if let Some(n) = self.n_nodes {
            config.n_nodes = n;
        }
        if let Some(p) = self.p_in {
            config.p_in = p;
        }
        if let Some(p) = self.p_out {
            config.p_out = p;
        }
        if let Some(d) = self.d {
            config.d = d;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(lambda) = &self.lambda {
            config.lambda = if lambda == "auto" {
                LambdaSpec::Auto
            } else {
                let value: f64 = lambda
                    .parse()
                    .map_err(|e| format!("--lambda must be a number or \"auto\": {e}"))?;
                LambdaSpec::Fixed(value)
            };
        }
        if let Some(t) = self.threshold {
            config.threshold = t;
        }
        if let Some(r) = self.restarts {
            config.restarts = r;
        }
        if let Some(m) = self.max_iter {
            config.max_iter = m;
        }
        if let Some(f) = self.test_fraction {
            config.test_fraction = f;
        }
        Ok(())
    }
}

fn run_simple_stage(args: &StageArgs, stage: Stage) -> Result<(), String> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| e.to_string())?;
    args.apply(&mut config)?;
    config.validate().map_err(|e| e.to_string())?;
    run_stage(&config, stage).map_err(|e| e.to_string())?;
    println!(
        "{} finished for {} seed(s) under {}",
        stage.name(),
        config.seeds.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn run_sweep_command(args: &StageArgs) -> Result<(), String> {
    let mut config = SweepConfig::load(&args.config).map_err(|e| e.to_string())?;
    args.apply(&mut config.base)?;
    config.validate().map_err(|e| e.to_string())?;
    let cells = config.cells().len();
    let seeds = config.base.seeds.len();
    println!("sweeping {cells} cell(s) x {seeds} seed(s)...");
    let records = run_sweep(&config).map_err(|e| e.to_string())?;
    let failed = cells * seeds - records.len();
    println!(
        "sweep finished: {} record(s), {} failure(s); tables under {}",
        records.len(),
        failed,
        config.base.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    configure_workers_from_env();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(args) => run_simple_stage(args, Stage::Generate),
        Command::Decompose(args) => run_simple_stage(args, Stage::Decompose),
        Command::Embed(args) => run_simple_stage(args, Stage::Embed),
        Command::Classify(args) => run_simple_stage(args, Stage::Classify),
        Command::Baseline(args) => run_simple_stage(args, Stage::Baseline),
        Command::Sweep(args) => run_sweep_command(args),
        Command::Embedviz(args) => run_simple_stage(args, Stage::Embedviz),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
