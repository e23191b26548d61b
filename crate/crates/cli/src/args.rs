//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrdproc::StrategyChoice;

/// Exact probabilities, sampling and statistical checks for a finite-state
/// process with per-state long-range dependence.
///
/// Every flag can also be set through an environment variable named after it
/// with the `LRD_` prefix, e.g. `LRD_SEED=7` or `LRD_CAP_FRONTIER=1000000`.
#[derive(Debug, Parser)]
#[command(name = "lrdproc", version)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Parameter file (`m`, `H`, `p`, `c` keys).
    #[arg(long, global = true, env = "LRD_PARAMS")]
    pub params: Option<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "LRD_OUT")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, env = "LRD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Path length or trial count.
    #[arg(long, global = true, env = "LRD_N")]
    pub n: Option<usize>,

    #[arg(long, global = true, env = "LRD_REPLICATES")]
    pub replicates: Option<usize>,

    /// Lags as a list (`1,2,5`) or an inclusive range (`1..10`).
    #[arg(long, global = true, env = "LRD_LAGS")]
    pub lags: Option<String>,

    /// Hurst block sizes, same syntax as `--lags`; dyadic from 8 by default.
    #[arg(long, global = true, env = "LRD_BLOCKS")]
    pub blocks: Option<String>,

    #[arg(long, global = true, env = "LRD_STRATEGY", default_value = "auto")]
    pub strategy: StrategyChoice,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "LRD_PARALLELISM", default_value_t = 1)]
    pub parallelism: usize,

    /// Largest number of base-state times the recursion accepts.
    #[arg(long, global = true, env = "LRD_CAP_A0", default_value_t = 18)]
    pub cap_a0: usize,

    /// Largest forward-scan frontier, in slots.
    #[arg(long, global = true, env = "LRD_CAP_FRONTIER", default_value_t = 10_000_000)]
    pub cap_frontier: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormat {
    /// `replicate,index,state` rows.
    Csv,
    /// One digit string per replicate.
    Compact,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check the parameter file against the admissibility condition.
    Validate,

    /// Joint probability of an occupancy pattern.
    Prob {
        /// File of `index state` pairs (one per line or separated by `/`), or a
        /// compact total assignment such as `1021`.
        #[arg(long, conflicts_with = "pattern_text")]
        pattern: Option<PathBuf>,

        /// The pattern given inline, e.g. `"1 1 / 2 0"` or `1021`.
        #[arg(long, env = "LRD_PATTERN_TEXT")]
        pattern_text: Option<String>,
    },

    /// Sample independent paths (default n = 50, one replicate).
    Sample {
        #[arg(long, value_enum, default_value_t = SampleFormat::Csv)]
        format: SampleFormat,
    },

    /// Covariances, Hurst estimates and inter-arrival summaries of sampled
    /// paths (default 16 paths of length 4096).
    Analyze {
        /// Paths written by `sample` in CSV form instead of fresh samples.
        #[arg(long, env = "LRD_INPUT")]
        input: Option<PathBuf>,

        /// Long-format curve file (block variances, survival curves).
        #[arg(long, env = "LRD_CURVES")]
        curves: Option<PathBuf>,
    },

    /// Count moments and variance growth over a grid of trial counts
    /// (default 2^6..2^12, 1000 replicates).
    Fracmult {
        /// Trial counts, same syntax as `--lags`.
        #[arg(long, env = "LRD_GRID")]
        grid: Option<String>,

        #[arg(long, env = "LRD_CURVES")]
        curves: Option<PathBuf>,
    },

    /// Exact probabilities of every path of length `--n` (default 4).
    Enumerate,

    /// Run the invariant suite at desk scale.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Prob { .. } => "prob",
            Self::Sample { .. } => "sample",
            Self::Analyze { .. } => "analyze",
            Self::Fracmult { .. } => "fracmult",
            Self::Enumerate => "enumerate",
            Self::Selftest => "selftest",
        }
    }
}

/// Parses `1,2,5` or `1..10` (inclusive).
pub fn parse_list(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| format!("bad range start in `{text}`"))?;
        let hi: u64 = b.trim().parse().map_err(|_| format!("bad range end in `{text}`"))?;
        if lo > hi {
            return Err(format!("empty range `{text}`"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("bad list entry `{v}`")))
        .collect()
}
