//! `densets`: evaluate set expressions, write density reports, and run the
//! identity suites from the command line.
//!
//! Exit codes: 0 ok, 1 a law was violated, 2 usage or parse error,
//! 3 budget or evaluation error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Format;

#[derive(Parser, Debug)]
#[command(
    name = "densets",
    version,
    about = "Densities of computably presented subsets of the natural numbers"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Largest natural number any query may decide. Overrides DENSETS_BUDGET.
    #[arg(long, global = true, value_name = "N")]
    pub budget_value: Option<u64>,
    /// Largest enumeration index any query may reach. Overrides DENSETS_BUDGET.
    #[arg(long, global = true, value_name = "N")]
    pub budget_index: Option<u64>,
    /// Default budget as `value[,index]`.
    #[arg(
        long = "budget-env",
        env = "DENSETS_BUDGET",
        hide = true,
        global = true
    )]
    pub budget_env: Option<String>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the elements of a set below N.
    Eval {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 100)]
        prefix: u64,
    },
    /// Density checkpoints of a set.
    Density {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_n: u64,
        /// `geometric[:n0=..,ratio=..]`, `linear:step=..` or `points:a,b,..`.
        #[arg(long, default_value = "geometric")]
        grid: String,
        #[arg(long, value_enum, default_value_t = Estimator::Counting)]
        estimator: Estimator,
        /// Number of elements used by the principal estimator.
        #[arg(long, default_value_t = 10_000)]
        k: u64,
    },
    /// Check an identity suite on seeded random sets.
    Identities {
        /// core, weakening, partition or permutation.
        #[arg(long, default_value = "core")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        prefix: u64,
    },
    /// Densities of a set under a family of permutations.
    Probe {
        #[arg(long)]
        expr: String,
        /// `default` or specs separated by `|`.
        #[arg(long, default_value = "default")]
        family: String,
        #[arg(long, default_value = "geometric")]
        grid: String,
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
        /// Spread above which the set is flagged unstable.
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
    },
    /// Densities of the pieces A_i of a partition.
    Partition {
        /// `seed:<n>[,mode=derived|pairing]` or `column=<set>`.
        #[arg(long, default_value = "seed:1")]
        source: String,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
        #[arg(long, default_value = "geometric")]
        grid: String,
    },
    /// Density of X_r built from a partition.
    ConstructXr {
        /// `p/q`, `0.ddd` or `seed:<n>`.
        #[arg(long)]
        real: String,
        #[arg(long, default_value = "seed:1")]
        source: String,
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
        #[arg(long, default_value = "geometric")]
        grid: String,
        /// Pieces summed by the truncated additivity check.
        #[arg(long, default_value_t = 8)]
        levels: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Counting,
    Principal,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Eval { expr, prefix } => run::eval(&cli.common, &expr, prefix),
        Command::Density {
            expr,
            max_n,
            grid,
            estimator,
            k,
        } => run::density(&cli.common, &expr, max_n, &grid, estimator, k),
        Command::Identities {
            suite,
            trials,
            seed,
            prefix,
        } => run::identities(&cli.common, &suite, trials, seed, prefix),
        Command::Probe {
            expr,
            family,
            grid,
            max_n,
            threshold,
        } => run::probe(&cli.common, &expr, &family, &grid, max_n, threshold),
        Command::Partition {
            source,
            levels,
            max_n,
            grid,
        } => run::partition(&cli.common, &source, levels, max_n, &grid),
        Command::ConstructXr {
            real,
            source,
            max_n,
            grid,
            levels,
        } => run::construct_xr(&cli.common, &real, &source, max_n, &grid, levels),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("densets: {e}");
            ExitCode::from(e.code())
        }
    }
}
