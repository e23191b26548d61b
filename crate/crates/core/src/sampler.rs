//! Exact sequential path sampling.
//!
//! `X_1` is drawn from `(p_0, ..., p_m)`; every later `X_i` is drawn from its
//! exact conditional law given the realised prefix, read off a rescaled
//! [`DpFrontier`] that is advanced one observation at a time.
//!
//! # Randomness
//!
//! Each path owns a `ChaCha8Rng` seeded with `seed_from_u64(seed)`. Replicate
//! `r` of a batch uses [`derive_seed`]`(base_seed, r)`, the SplitMix64
//! finaliser applied to `base_seed + (r + 1) * 0x9E3779B97F4A7C15`, so a
//! batch is bit-identical whatever the degree of parallelism. Draws use
//! inverse-CDF sampling with states visited in ascending order. Streams are
//! reproducible for a fixed crate version only.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{DpFrontier, EngineConfig, EngineError};
use crate::model::ModelParams;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampling supports at most 255 non-base states, got {0}")]
    TooManyStates(usize),

    #[error("conditional law at time {time} is not a distribution: {probs:?}")]
    BadConditional { time: u64, probs: Vec<f64> },

    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error("worker pool: {0}")]
    Pool(String),
}

/// SplitMix64 mix of a base seed and a replicate index.
pub fn derive_seed(base_seed: u64, replicate: u64) -> u64 {
    let mut z = base_seed.wrapping_add(replicate.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl AsRef<[u8]> for PathSample {
    fn as_ref(&self) -> &[u8] {
        &self.states
    }
}

/// Sampler limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Hard cap on frontier slots; exceeding it fails the path cleanly.
    pub frontier_cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            frontier_cap: EngineConfig::default().frontier_cap,
        }
    }
}

/// One realised path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSample {
    pub states: Vec<u8>,
    pub seed: u64,
    pub params_hash: String,
    /// Frontier slot updates spent generating the path.
    pub work: u64,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Digit string, `X_1` first.
    pub fn compact(&self) -> String {
        self.states.iter().map(|&s| char::from(b'0' + s)).collect()
    }
}

/// Incremental sampler; yields `X_1, X_2, ...` one at a time.
#[derive(Debug, Clone)]
pub struct PathSampler<'a, T: Scalar> {
    frontier: DpFrontier<'a, T>,
    rng: ChaCha8Rng,
    time: u64,
}

impl<'a, T: Scalar> PathSampler<'a, T> {
    pub fn new(params: &'a ModelParams<T>, n: u64, seed: u64, config: &SamplerConfig) -> Result<Self, SampleError> {
        if params.m() > 255 {
            return Err(SampleError::TooManyStates(params.m()));
        }
        let engine = EngineConfig {
            horizon: n.max(1),
            frontier_cap: config.frontier_cap,
            rescale: true,
            ..EngineConfig::default()
        };
        Ok(Self {
            frontier: DpFrontier::new(params, engine),
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: 0,
        })
    }

    /// Draws the next state and advances the frontier.
    pub fn next_state(&mut self) -> Result<u8, SampleError> {
        let time = self.time + 1;
        let (probs, _) = self.frontier.conditional(time)?;
        let u: f64 = self.rng.random();
        let state = pick(&probs, u).ok_or_else(|| SampleError::BadConditional {
            time,
            probs: probs.iter().map(|p| p.as_f64()).collect(),
        })?;
        self.frontier.observe(time, state)?;
        self.time = time;
        Ok(state as u8)
    }

    /// Fixes the next state instead of drawing it; later draws are
    /// conditioned on it.
    pub fn force(&mut self, state: u8) -> Result<(), SampleError> {
        let time = self.time + 1;
        self.frontier.observe(time, state as usize)?;
        self.time = time;
        Ok(())
    }

    pub fn work(&self) -> u64 {
        self.frontier.work()
    }

    /// Current frontier size in slots.
    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Natural log of the probability of the prefix drawn so far.
    pub fn ln_prob(&self) -> T {
        self.frontier.ln_total()
    }
}

fn pick<T: Scalar>(probs: &[T], u: f64) -> Option<usize> {
    if probs.iter().any(|p| !p.is_finite() || p.as_f64() < -1e-9) {
        return None;
    }
    let mut cum = 0.0;
    let mut last_positive = None;
    for (s, p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            last_positive = Some(s);
        }
        cum += p.max(0.0);
        if u < cum {
            return Some(s);
        }
    }
    // rounding left u above the accumulated mass
    last_positive
}

/// Samples one path of length `n`.
pub fn sample_path<T: Scalar>(
    params: &ModelParams<T>,
    n: usize,
    seed: u64,
    config: &SamplerConfig,
) -> Result<PathSample, SampleError> {
    if n == 0 {
        return Err(SampleError::InvalidArgument("path length must be at least 1".into()));
    }
    let mut sampler = PathSampler::new(params, n as u64, seed, config)?;
    let states = (0..n)
        .map(|_| sampler.next_state())
        .collect::<Result<Vec<u8>, _>>()?;
    Ok(PathSample {
        states,
        seed,
        params_hash: params.digest(),
        work: sampler.work(),
    })
}

/// Independent replicate paths.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub n: usize,
    pub base_seed: u64,
    pub params_hash: String,
    pub paths: Vec<PathSample>,
    pub elapsed: Duration,
}

impl SampleBatch {
    pub fn replicates(&self) -> usize {
        self.paths.len()
    }

    pub fn total_work(&self) -> u64 {
        self.paths.iter().map(|p| p.work).sum()
    }

    /// One compact state string per line.
    pub fn write_compact<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for p in &self.paths {
            writeln!(out, "{}", p.compact())?;
        }
        Ok(())
    }

    /// Long format `replicate,index,state`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "replicate,index,state")?;
        for (r, p) in self.paths.iter().enumerate() {
            for (i, s) in p.states.iter().enumerate() {
                writeln!(out, "{r},{},{s}", i + 1)?;
            }
        }
        Ok(())
    }
}

/// Evaluates `run(r)` for `r in 0..replicates`, in replicate order.
fn for_each_replicate<R, F>(replicates: usize, parallelism: usize, run: F) -> Result<Vec<R>, SampleError>
where
    R: Send,
    F: Fn(usize) -> Result<R, SampleError> + Sync,
{
    if parallelism <= 1 {
        return (0..replicates).map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SampleError::Pool(e.to_string()))?;
    pool.install(|| (0..replicates).into_par_iter().map(&run).collect())
}

/// Runs `f` on every replicate path and returns the results in replicate
/// order. Paths are dropped after `f` sees them.
pub fn map_replicates<T, R, F>(
    params: &ModelParams<T>,
    n: usize,
    replicates: usize,
    base_seed: u64,
    parallelism: usize,
    config: &SamplerConfig,
    f: F,
) -> Result<Vec<R>, SampleError>
where
    T: Scalar,
    R: Send,
    F: Fn(PathSample) -> R + Sync,
{
    if replicates == 0 {
        return Err(SampleError::InvalidArgument("replicates must be at least 1".into()));
    }
    if n == 0 {
        return Err(SampleError::InvalidArgument("path length must be at least 1".into()));
    }
    for_each_replicate(replicates, parallelism, |r| {
        sample_path(params, n, derive_seed(base_seed, r as u64), config).map(&f)
    })
}

/// Time from a visit to state `k` until the next one, drawn from the law of
/// the process given `X_1 = k`. `None` when no visit occurs within `max_gap`
/// steps.
pub fn sample_return_time<T: Scalar>(
    params: &ModelParams<T>,
    k: usize,
    max_gap: u64,
    seed: u64,
    config: &SamplerConfig,
) -> Result<Option<u64>, SampleError> {
    if k == 0 || k > params.m() {
        return Err(SampleError::InvalidArgument(format!("state {k} is not in 1..={}", params.m())));
    }
    let mut sampler = PathSampler::new(params, max_gap.saturating_add(1), seed, config)?;
    sampler.force(k as u8)?;
    for gap in 1..=max_gap {
        if sampler.next_state()? as usize == k {
            return Ok(Some(gap));
        }
    }
    Ok(None)
}

/// `count` independent return times to state `k`; draw `r` uses
/// [`derive_seed`]`(base_seed, r)`.
pub fn sample_return_times<T: Scalar>(
    params: &ModelParams<T>,
    k: usize,
    count: usize,
    max_gap: u64,
    base_seed: u64,
    parallelism: usize,
    config: &SamplerConfig,
) -> Result<Vec<Option<u64>>, SampleError> {
    if max_gap == 0 {
        return Err(SampleError::InvalidArgument("max_gap must be at least 1".into()));
    }
    for_each_replicate(count, parallelism, |r| {
        sample_return_time(params, k, max_gap, derive_seed(base_seed, r as u64), config)
    })
}

/// Samples `replicates` independent paths of length `n`.
pub fn sample_batch<T: Scalar>(
    params: &ModelParams<T>,
    n: usize,
    replicates: usize,
    base_seed: u64,
    parallelism: usize,
    config: &SamplerConfig,
) -> Result<SampleBatch, SampleError> {
    let start = Instant::now();
    let paths = map_replicates(params, n, replicates, base_seed, parallelism, config, |p| p)?;
    Ok(SampleBatch {
        n,
        base_seed,
        params_hash: params.digest(),
        paths,
        elapsed: start.elapsed(),
    })
}
