//! `review-pricing`: solvers, sweeps and simulations from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Format, ModeKind, PolicyKind, QualityKind};

#[derive(Debug, Parser)]
#[command(name = "review-pricing", version, about = "Optimal pricing under like/dislike reviews")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the merged configuration as TOML and exit without running.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Output format (tables default to csv, single results to json).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Two-point market.
#[derive(Debug, Clone, Default, Args)]
struct BinaryArgs {
    /// Like probability of a good product.
    #[arg(long)]
    p: Option<f64>,
    /// Like probability of a bad product.
    #[arg(long)]
    q: Option<f64>,
    /// Unit cost.
    #[arg(long)]
    c: Option<f64>,
    /// Discount factor.
    #[arg(long)]
    delta: Option<f64>,
    /// Initial prior that the product is good.
    #[arg(long)]
    x0: Option<f64>,
}

/// General-quality market with a uniform prior.
#[derive(Debug, Clone, Default, Args)]
struct ExtendedArgs {
    /// Lowest quality of the uniform prior.
    #[arg(long)]
    lo: Option<f64>,
    /// Highest quality of the uniform prior.
    #[arg(long)]
    hi: Option<f64>,
    /// Number of grid points of the prior.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Unit cost.
    #[arg(long)]
    c: Option<f64>,
    /// Discount factor.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
struct ModeArgs {
    /// Pricing regime.
    #[arg(long, value_enum)]
    mode: Option<ModeKind>,
    /// Static price (required with `--mode static`).
    #[arg(long)]
    price: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    BackwardInduction,
    InverseRecursion,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lattice dynamic program (rational slope ratios only).
    SolveDp {
        #[command(flatten)]
        model: BinaryArgs,
        #[command(flatten)]
        mode: ModeArgs,
        /// Width of the seeded band below x = 1.
        #[arg(long)]
        seed_epsilon: Option<f64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Largest denominator tried when detecting the lattice.
        #[arg(long)]
        max_denominator: Option<u64>,
    },
    /// Truncated series solver with certified error.
    SolveSeries {
        #[command(flatten)]
        model: BinaryArgs,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Static value over a grid of prices, with the efficient frontier.
    StaticSweep {
        #[command(flatten)]
        model: BinaryArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Number of grid prices.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Catalan quadrilateral counts C_m^{a,b}(l, d) for l + d <= tmax.
    Catalan {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        tmax: usize,
    },
    /// Probability of selling forever and false-negative comparison.
    Learning {
        #[command(flatten)]
        model: BinaryArgs,
        /// Prior to start from (defaults to x0).
        #[arg(long)]
        x: Option<f64>,
        /// Stopping threshold (defaults to the optimal dynamic threshold).
        #[arg(long)]
        x_stop: Option<f64>,
        /// Static price for the false-negative ratio.
        #[arg(long)]
        price: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Horizon-M program of the general-quality market.
    ExtendedSolve {
        #[command(flatten)]
        market: ExtendedArgs,
        #[command(flatten)]
        mode: ModeArgs,
        /// Horizon M.
        #[arg(long)]
        horizon: Option<usize>,
        /// Seed the outer diagonal without clamping at zero.
        #[arg(long)]
        raw_seed: bool,
    },
    /// Static revenue of the general-quality market over prices.
    ExtendedPriceSweep {
        #[command(flatten)]
        market: ExtendedArgs,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Best static and dynamic revenue of the general-quality market over costs.
    ExtendedCostSweep {
        #[command(flatten)]
        market: ExtendedArgs,
        #[arg(long)]
        horizon: Option<usize>,
        /// Prices tried per cost.
        #[arg(long)]
        points: Option<usize>,
        /// Number of costs.
        #[arg(long)]
        costs: Option<usize>,
    },
    /// Monte Carlo simulation of a pricing policy.
    Simulate {
        #[command(flatten)]
        model: BinaryArgs,
        /// Simulate the general-quality market instead of the two-point one.
        #[arg(long)]
        extended: bool,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long, value_enum)]
        policy: Option<PolicyKind>,
        /// Static price (policy static).
        #[arg(long)]
        price: Option<f64>,
        /// Threshold (policy threshold).
        #[arg(long)]
        x_stop: Option<f64>,
        #[arg(long, value_enum)]
        true_quality: Option<QualityKind>,
        /// Like probability for `--true-quality fixed`.
        #[arg(long)]
        quality: Option<f64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Periods per episode.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the CSV files behind the standard figures.
    ReproduceFigures {
        /// Output directory.
        #[arg(long, env = "REVIEW_PRICING_OUT_DIR", default_value = "figures")]
        out: PathBuf,
        /// Horizon M of the extended program.
        #[arg(long)]
        horizon: Option<usize>,
        /// Prices per sweep.
        #[arg(long)]
        points: Option<usize>,
        /// Costs in the cost sweep.
        #[arg(long)]
        costs: Option<usize>,
        /// Grid points of the extended prior.
        #[arg(long)]
        grid_points: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
