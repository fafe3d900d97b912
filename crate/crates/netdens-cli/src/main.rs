//! `netdens`: event density estimation on linear networks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netdens_cli::run::{
    self, BenchmarkOpts, CommonOpts, EstimateOpts, SimulateOpts, TestVerticesOpts,
};

#[derive(Parser)]
#[command(name = "netdens", version, about = "Event density estimation on linear networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a density profile from a network and an events file.
    Estimate(EstimateArgs),
    /// Run only the vertex equality and smoothness tests.
    TestVertices(TestVerticesArgs),
    /// Draw one synthetic replicate as ready-to-use input files.
    Simulate(SimulateArgs),
    /// Compare estimators over many synthetic replicates.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing (default: current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Base RNG seed (NETDENS_SEED overrides; default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replicate loops (default: one per CPU).
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn into_opts(self) -> CommonOpts {
        CommonOpts {
            config: self.config,
            out_dir: self.out_dir,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Network JSON file.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Events CSV file (edge,offset).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Kernel bandwidth along the network.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Histogram bin width (default: h/4).
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Vertex pretest level; 0 disables pooling (default: 0.05).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Kernel: epanechnikov, biweight, or triangular.
    #[arg(long)]
    kernel: Option<String>,
    /// Profile grid step (default per edge: min(h/4, length/20)).
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
    /// Estimator: lplr, kde, esdk, or esck (default: lplr).
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TestVerticesArgs {
    /// Network JSON file.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Events CSV file (edge,offset).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Kernel bandwidth along the network.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Histogram bin width (default: h/4).
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Vertex pretest level; 0 disables pooling (default: 0.05).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Kernel: epanechnikov, biweight, or triangular.
    #[arg(long)]
    kernel: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario: I, II, III, or a scenario name.
    #[arg(long)]
    case: Option<String>,
    /// Events per edge (default: 1000).
    #[arg(long)]
    points: Option<usize>,
    /// Replicate index within the seed's stream (default: 0).
    #[arg(long)]
    rep: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Scenario: I, II, III, or a scenario name.
    #[arg(long)]
    case: Option<String>,
    /// Events per edge (default: 1000).
    #[arg(long)]
    points: Option<usize>,
    /// Replicates (default: 100; power study: 500).
    #[arg(long)]
    reps: Option<usize>,
    /// Bandwidth (default: per-scenario pilot value; power study: 0.45).
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Histogram bin width (default: harness value).
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Vertex pretest level (default: 0.05).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Comma-separated methods (default: lplr,kde,esdk,esck).
    #[arg(long)]
    methods: Option<String>,
    /// Kernel: epanechnikov, biweight, or triangular.
    #[arg(long)]
    kernel: Option<String>,
    /// Run the pretest power study instead of the method comparison.
    #[arg(long)]
    power_study: bool,
    /// Power-study exponent pairs, comma-separated left:right.
    #[arg(long)]
    pairs: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => run::cmd_estimate(&EstimateOpts {
            network: a.network,
            events: a.events,
            h: a.h,
            omega: a.omega,
            alpha: a.alpha,
            kernel: a.kernel,
            step: a.step,
            method: a.method,
            common: a.common.into_opts(),
        }),
        Command::TestVertices(a) => run::cmd_test_vertices(&TestVerticesOpts {
            network: a.network,
            events: a.events,
            h: a.h,
            omega: a.omega,
            alpha: a.alpha,
            kernel: a.kernel,
            common: a.common.into_opts(),
        }),
        Command::Simulate(a) => run::cmd_simulate(&SimulateOpts {
            case: a.case,
            points: a.points,
            rep: a.rep,
            common: a.common.into_opts(),
        }),
        Command::Benchmark(a) => run::cmd_benchmark(&BenchmarkOpts {
            case: a.case,
            points: a.points,
            reps: a.reps,
            h: a.h,
            omega: a.omega,
            alpha: a.alpha,
            kernel: a.kernel,
            methods: a.methods,
            power_study: a.power_study,
            pairs: a.pairs,
            common: a.common.into_opts(),
        }),
    };
    match result {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
