//! `arctic`: exact lattice counts, rate convergence tables, tangent-method
//! curves and property suites for the Aztec diamond and ASM path models.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use arctic_core::{Error, NumericSettings};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "arctic",
    version,
    about = "Arctic curves of path models: exact counts, rates and envelopes"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format (default: json for `properties`, csv otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Omit the timestamp so identical runs give identical files.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Aztec diamond partition functions.
    Aztec {
        #[command(subcommand)]
        command: AztecCommand,
    },
    /// Lattice rates against the predicted entropy, for a list of orders.
    Converge(ConvergeArgs),
    /// Arctic curve as the envelope of tangent lines.
    Tangent(TangentArgs),
    /// Concavity, monotonicity, branch continuity and permutation suites.
    Properties(PropertiesArgs),
    /// The Lagrangean L(t) of a step model.
    Lagrangean {
        #[command(subcommand)]
        command: LagrangeanCommand,
    },
    /// Exact ASM counts.
    Asm {
        #[command(subcommand)]
        command: AsmCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum AztecCommand {
    /// Z_{n+m}/Z_n for the refinement (k, l); without --k/--l, Z_n itself.
    Exact(ExactArgs),
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: u64,
    /// Weight of the level steps, exact: `2`, `1/3` or `0.25`.
    #[arg(long, default_value = "1")]
    pub w: String,
    /// Refined start positions, comma separated and increasing.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u64>,
    /// Refined end positions, comma separated and increasing.
    #[arg(long, value_delimiter = ',')]
    pub l: Vec<u64>,
    /// Also count the path families directly (LGV) and compare.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Aztec,
    Asm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// Aztec: one row per (r, s) in the product of the grids.
    Grid,
    /// Aztec: the grids taken together as one multirefinement (r_a, s_a).
    Multi,
    /// ASM: first-row refinement, predicted by S(r, 1/2).
    FirstRow,
    /// ASM: the corner refinement A_{n+1}(1|1)/A_n, predicted by S(0, 0).
    Corner,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Orders, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long, default_value = "1")]
    pub w: String,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,1,1.5")]
    pub r_grid: Vec<f64>,
    /// Defaults to the r grid.
    #[arg(long, value_delimiter = ',')]
    pub s_grid: Option<Vec<f64>>,
    /// Default: grid for aztec, first-row for asm.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// Exit 1 if the largest |difference| at the largest order exceeds this.
    #[arg(long)]
    pub check: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Closed,
    Lattice,
}

#[derive(Debug, Args)]
#[command(
    after_help = "The Aztec boundary refinement moves the start point (-1-r, r) and keeps the \
exit pinned at its unrefined position s = 0, so S(r) = S(r, 0). The ASM first-row refinement uses S(r, 1/2)."
)]
pub struct TangentArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value = "1")]
    pub w: String,
    #[arg(long, value_enum, default_value = "closed")]
    pub source: Source,
    /// Lattice order (required with --source lattice).
    #[arg(long)]
    pub n: Option<u64>,
    /// Number of evenly spaced r values.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Explicit r values; overrides --points.
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PropertiesArgs {
    /// Seed of the random permutation tuples.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Number of random tuples.
    #[arg(long, default_value_t = 10_000)]
    pub tuples: usize,
    /// Slopes per Lagrangean in the concavity check.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum LagrangeanCommand {
    /// Evaluate x(t), y(t), L(t) and L'(t) on a list of slopes.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LagrangeanModel {
    Aztec,
    Asm,
    Sixvertex,
    Custom,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub model: LagrangeanModel,
    #[arg(long, default_value = "1")]
    pub w: String,
    #[arg(long)]
    pub w1: Option<f64>,
    #[arg(long)]
    pub w2: Option<f64>,
    /// Steps `u,v,weight` separated by `;` (custom model).
    #[arg(long)]
    pub steps: Option<String>,
    /// Slopes, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub t: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum AsmCommand {
    /// A_n, or A_n(k|-) with --k.
    Count(CountArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u64>,
    /// Compare with exhaustive enumeration (n <= 7).
    #[arg(long)]
    pub oracle: bool,
}

/// Why a run stopped; each maps to an exit code.
#[derive(Debug)]
pub enum Failure {
    Check(String),
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::QuadratureFailure { .. }
            | Error::DegenerateEnvelope { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("cannot write output: {e}"))
    }
}

fn setup(common: &Common) -> Result<(), Failure> {
    if let Ok(spec) = std::env::var("ARCTIC_NUMERIC_TOL") {
        let settings = NumericSettings::current()
            .with_override(&spec)
            .map_err(|e| Failure::Usage(format!("ARCTIC_NUMERIC_TOL: {e}")))?;
        settings.install();
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = setup(&cli.common).and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(m) => eprintln!("check failed: {m}"),
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numeric(m) => eprintln!("numeric failure: {m}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
