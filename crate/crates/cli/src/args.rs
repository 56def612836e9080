use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gauss_collocation::ocp::BUILTIN_NAMES;

#[derive(Debug, Parser)]
#[command(
    name = "gausscol",
    version,
    about = "Gauss collocation for unconstrained optimal control problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print Legendre-Gauss nodes (with both endpoints) and weights.
    Rule {
        /// Number of collocation points.
        #[arg(long, value_parser = parse_single_n)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the norm bounds of the differentiation matrices.
    Certify {
        /// Orders to certify: `25`, `25,50,75` or `start:end[:step]`.
        #[arg(long, value_parser = parse_n_list)]
        n: NList,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve one problem and dump the discrete solution.
    Solve {
        #[arg(long, value_parser = parse_single_n, default_value = "10")]
        n: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve over a range of orders and fit exponential decay rates.
    Sweep {
        #[arg(long, value_parser = parse_n_list, default_value = "5:25:2")]
        n: NList,
        #[command(flatten)]
        solver: SolverArgs,
        /// Start every order from the constant guess instead of the previous solution.
        #[arg(long)]
        no_warm_start: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Builtin problem name.
    #[arg(long, default_value = "hager-example", value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
    pub problem: String,
    /// Newton stopping threshold on the residual sup-norm.
    #[arg(long, default_value = "1e-10", value_parser = parse_tolerance)]
    pub tolerance: f64,
    #[arg(long, default_value = "50", value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iterations: u64,
    /// Replace the problem's analytic derivatives by finite differences.
    #[arg(long)]
    pub finite_differences: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Destination file, or `-` for standard output.
    #[arg(long, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Sorted, duplicate-free list of collocation orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("N must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

pub fn parse_n_list(s: &str) -> Result<NList, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_positive(single)?),
            [start, end] | [start, end, _] => {
                let (start, end) = (parse_positive(start)?, parse_positive(end)?);
                let step = match parts.get(2) {
                    Some(step) => {
                        parse_positive(step).map_err(|_| format!("invalid step in `{item}`"))?
                    }
                    None => 1,
                };
                if start > end {
                    return Err(format!("empty range `{item}`"));
                }
                out.extend((start..=end).step_by(step));
            }
            _ => return Err(format!("cannot parse `{item}` as N or start:end[:step]")),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(NList(out))
}

fn parse_single_n(s: &str) -> Result<usize, String> {
    parse_positive(s)
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("tolerance must be a positive number, got `{s}`")),
    }
}
