use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "insitu",
    version,
    about = "Exact and asymptotic cost analysis of the in-situ cycle-leader permutation algorithm"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub config: RunConfig,

    /// Worker threads (does not change results).
    #[arg(long, global = true, env = "INSITU_THREADS")]
    pub threads: Option<usize>,

    /// Output path (default: standard output). Written atomically.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Exact law of the cost X_n from the split recurrence.
    Dist,
    /// Moment table of X_n with asymptotic residuals.
    Moments,
    /// Run the in-place algorithm on a permutation (--perm-file or stdin).
    Algo,
    /// Brute-force law over all n! permutations, checked against `dist`.
    Brute,
    /// Limit constants and a population sample of the limit law.
    Limit,
    /// Zolotarev bound series and the fitted rate constant.
    Rate,
    /// Monte Carlo samples of the cost X_n or of Y_n = (X_n - E X_n) / n.
    Sample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dist => "dist",
            Command::Moments => "moments",
            Command::Algo => "algo",
            Command::Brute => "brute",
            Command::Limit => "limit",
            Command::Rate => "rate",
            Command::Sample => "sample",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::Dist | Command::Algo | Command::Limit => Format::Json,
            Command::Moments | Command::Rate => Format::Csv,
            Command::Brute | Command::Sample => Format::Lines,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Lines,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    /// Search-step counts of random permutations.
    Cost,
    /// Normalized costs sampled from the split recurrence.
    Yn,
}

/// Every flag that can change an emitted artifact. Serialized verbatim into
/// the metadata of each output.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    #[arg(long, global = true, env = "INSITU_N")]
    pub n: Option<usize>,

    #[arg(long, global = true, env = "INSITU_NMAX")]
    pub nmax: Option<usize>,

    /// Log-spaced grid `a:b:steps`, or a single size.
    #[arg(long, global = true, env = "INSITU_GRID")]
    pub grid: Option<String>,

    #[arg(long, global = true, env = "INSITU_TRIALS")]
    pub trials: Option<usize>,

    #[arg(long, global = true, env = "INSITU_POOL", default_value_t = 100_000)]
    pub pool: usize,

    #[arg(long, global = true, env = "INSITU_GENERATIONS", default_value_t = 50)]
    pub generations: u64,

    #[arg(long, global = true, env = "INSITU_SEED", default_value_t = 1)]
    pub seed: u64,

    /// Quadrature tolerance for the limit constants.
    #[arg(long, global = true, env = "INSITU_TOL", default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long, global = true, value_enum, env = "INSITU_FORMAT")]
    pub format: Option<Format>,

    /// Exact rational moments (moments, n_max <= 200).
    #[arg(long, global = true)]
    pub exact: bool,

    #[arg(long, global = true, value_enum, default_value_t = SampleKind::Yn)]
    pub kind: SampleKind,

    /// Whitespace-separated 1-based permutation (default: stdin).
    #[arg(long, global = true)]
    pub perm_file: Option<PathBuf>,
}

impl RunConfig {
    pub fn format_for(&self, command: Command) -> Format {
        self.format.unwrap_or(command.default_format())
    }

    pub fn require_n(&self) -> Result<usize> {
        self.n.context("--n is required for this subcommand")
    }

    pub fn grid_values(&self) -> Result<Option<Vec<usize>>> {
        self.grid.as_deref().map(parse_grid).transpose()
    }
}

/// `a:b:steps` gives `steps` sizes log-spaced from `a` to `b` inclusive,
/// rounded and deduplicated; a bare integer gives that single size.
pub fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .with_context(|| format!("invalid grid component {s:?} in {spec:?}"))
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [a, b, steps] => {
            let (a, b, steps) = (num(a)?, num(b)?, num(steps)?);
            ensure!(a >= 1 && a <= b, "grid needs 1 <= a <= b, got {a}:{b}");
            ensure!(steps >= 1, "grid needs at least one step");
            if steps == 1 || a == b {
                return Ok(vec![a]);
            }
            let (la, lb) = ((a as f64).ln(), (b as f64).ln());
            let mut out: Vec<usize> = (0..steps)
                .map(|i| {
                    let t = i as f64 / (steps - 1) as f64;
                    ((la + t * (lb - la)).exp().round() as usize).clamp(a, b)
                })
                .collect();
            out.dedup();
            Ok(out)
        }
        _ => bail!("grid must look like a:b:steps, got {spec:?}"),
    }
}
