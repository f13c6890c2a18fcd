//! Binary entry point. All behaviour lives in [`adasgd::cli`]; this file only
//! parses flags and maps errors onto the exit-status contract (0 pass,
//! 1 assertion failure, 2 usage error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adasgd::cli::{self, BoundFlags};

#[derive(Parser)]
#[command(
    name = "adasgd",
    version,
    about = "Adaptive-stepsize SGD experiments with seeded, reproducible outputs"
)]
struct Invocation {
    /// Cap the worker-thread count for parallel trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment declared in a JSON config file.
    ///
    /// Writes effective_config.json, summary.json, and per-kind CSV artifacts
    /// into the output directory. Exit status: 0 if every declared assertion
    /// held, 1 if one failed, 2 if the config is invalid.
    RunConfig {
        /// Path to the config file (see docs/config-reference.md).
        config: PathBuf,
        /// Override the master seed declared in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory (default: the config's output_dir,
        /// then $ADASGD_OUTPUT_ROOT/<config stem>, then runs/<config stem>).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print every closed-form bound constant for one set of inputs.
    PrintBounds(BoundArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Smoothness constant of the objective.
    #[arg(long)]
    beta: f64,
    /// Additive noise scale.
    #[arg(long)]
    sigma0: f64,
    /// Multiplicative noise scale.
    #[arg(long)]
    sigma1: f64,
    /// Adaptive stepsize scale.
    #[arg(long)]
    eta: f64,
    /// Adaptive accumulator offset.
    #[arg(long)]
    gamma: f64,
    /// Number of steps.
    #[arg(long)]
    horizon: u64,
    /// Per-event confidence level in (0, 1).
    #[arg(long)]
    delta: f64,
    /// Initial suboptimality f(w1) - f*.
    #[arg(long)]
    delta1: f64,
    /// Initial distance to the minimizer (convex bounds only).
    #[arg(long, default_value_t = 0.0)]
    d1: f64,
    /// Distance scale of the tuned stepsize; enables the known-parameter rows.
    #[arg(long)]
    alpha: Option<f64>,
    /// Use the sub-Gaussian-noise gap constants in the c1/f_bound rows.
    #[arg(long)]
    sub_gaussian: bool,
}

fn main() -> ExitCode {
    let invocation = Invocation::parse();
    if let Some(jobs) = invocation.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs: must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match invocation.command {
        Command::RunConfig { config, seed, output_dir } => {
            cli::run_config(&config, seed, output_dir.as_deref()).map(|_| ())
        }
        Command::PrintBounds(args) => cli::print_bounds(&BoundFlags {
            beta: args.beta,
            sigma0: args.sigma0,
            sigma1: args.sigma1,
            eta: args.eta,
            gamma: args.gamma,
            horizon: args.horizon,
            delta: args.delta,
            delta1: args.delta1,
            d1: args.d1,
            alpha: args.alpha,
            sub_gaussian: args.sub_gaussian,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
