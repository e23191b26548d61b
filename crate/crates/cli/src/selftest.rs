//! Invariant suite and the random case generators it shares with the
//! acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrdproc::analytics::chi_square_against;
use lrdproc::engine::two_point_probability;
use lrdproc::{
    conditional_next, d_star_dp, d_star_recursive, enumerate_all, sample_batch, verify_conditional_inequalities,
    CovarianceTable, EngineConfig, OccupancyPattern, Params, SamplerConfig,
};

/// Outcome of one invariant.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn failed(name: &'static str, detail: impl std::fmt::Display) -> Self {
        Self::new(name, false, detail.to_string())
    }
}

/// The reference parameter set used when no file is given.
pub fn canonical() -> Params {
    Params::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).expect("canonical parameters are admissible")
}

/// A random admissible parameter set with `m` non-base states.
pub fn random_params(rng: &mut ChaCha8Rng, m: usize) -> Params {
    loop {
        let h: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(0.02..0.9 / m as f64)).collect();
        let c: Vec<f64> = p.iter().map(|&pk| rng.random_range(0.01..1.0) * pk.min(1.0 - pk)).collect();
        if let Ok(params) = Params::new(h, p, c) {
            return params;
        }
    }
}

/// A random partial pattern on times `1..=horizon` with `size` entries of
/// which at most `max_zeros` are base-state times.
pub fn random_pattern(rng: &mut ChaCha8Rng, m: usize, horizon: u64, size: usize, max_zeros: usize) -> OccupancyPattern {
    let mut times: Vec<u64> = (1..=horizon).collect();
    for i in 0..size.min(times.len()) {
        let j = rng.random_range(i..times.len());
        times.swap(i, j);
    }
    let mut pattern = OccupancyPattern::new();
    let mut zeros = 0;
    for &t in times.iter().take(size) {
        let mut s = rng.random_range(0..=m);
        if s == 0 && zeros == max_zeros {
            s = rng.random_range(1..=m);
        }
        zeros += usize::from(s == 0);
        pattern = pattern.with(t, s);
    }
    pattern
}

/// A total history on `1..=n` whose last visit to `ell` comes after its last
/// base-state time, with the gap `d` from that visit to `query`.
#[derive(Debug, Clone)]
pub struct MarkovCase {
    pub history: OccupancyPattern,
    pub ell: usize,
    pub query: u64,
    pub gap: u64,
}

pub fn markov_case(rng: &mut ChaCha8Rng, m: usize) -> MarkovCase {
    let ell = rng.random_range(1..=m);
    let mut states: Vec<usize> = (0..rng.random_range(0..8)).map(|_| rng.random_range(0..=m)).collect();
    states.push(ell);
    // after the last visit to ell only other non-base states may appear
    if m > 1 {
        for _ in 0..rng.random_range(0..4) {
            let mut s = rng.random_range(1..m);
            if s >= ell {
                s += 1;
            }
            states.push(s);
        }
    }
    let n = states.len() as u64;
    let last = states.iter().rposition(|&s| s == ell).map_or(0, |i| i as u64 + 1);
    let query = n + rng.random_range(1..=3);
    MarkovCase {
        history: OccupancyPattern::from_path(&states),
        ell,
        query,
        gap: query - last,
    }
}

/// A total history in which a base-state time falls after the last visit to
/// `ell`, and query times `i1` and `i2 > i3` beyond it.
#[derive(Debug, Clone)]
pub struct InequalityCase {
    pub history: OccupancyPattern,
    pub ell: usize,
    pub queries: (u64, u64, u64),
}

pub fn inequality_case(rng: &mut ChaCha8Rng, m: usize) -> InequalityCase {
    let ell = rng.random_range(1..=m);
    let mut states: Vec<usize> = (0..rng.random_range(0..6)).map(|_| rng.random_range(0..=m)).collect();
    states.push(ell);
    let tail = rng.random_range(0..4);
    let zero_at = rng.random_range(0..=tail);
    for i in 0..=tail {
        if i == zero_at {
            states.push(0);
        } else {
            let mut s = rng.random_range(0..m);
            if s >= ell {
                s += 1;
            }
            states.push(s);
        }
    }
    let n = states.len() as u64;
    let i1 = n + rng.random_range(1..=3);
    let i3 = n + rng.random_range(1..=4);
    let i2 = i3 + rng.random_range(1..=4);
    InequalityCase {
        history: OccupancyPattern::from_path(&states),
        ell,
        queries: (i1, i2, i3),
    }
}

fn largest_n(m: usize, cells: usize, max: usize) -> usize {
    (1..=max).take_while(|&n| (m + 1).pow(n as u32) <= cells).last().unwrap_or(1)
}

fn normalization(params: &Params) -> Check {
    let n = largest_n(params.m(), 4096, 6);
    match enumerate_all(params, n) {
        Ok(t) => {
            let (min, total) = (t.min(), t.total());
            Check::new(
                "normalization",
                min > 0.0 && (total - 1.0).abs() <= 1e-10,
                format!("n={n} min={min:.3e} |sum-1|={:.3e}", (total - 1.0).abs()),
            )
        }
        Err(e) => Check::failed("normalization", e),
    }
}

fn oracle_equivalence(params: &Params, engine: &EngineConfig) -> Check {
    let n = largest_n(params.m(), 729, 6);
    let table = match enumerate_all(params, n) {
        Ok(t) => t,
        Err(e) => return Check::failed("oracle_equivalence", e),
    };
    let mut worst = 0.0f64;
    for code in 0..table.probs.len() {
        let pat = OccupancyPattern::from_path(&table.path(code));
        for value in [d_star_dp(params, &pat, engine), d_star_recursive(params, &pat, engine)] {
            match value {
                Ok(v) => worst = worst.max((v.value - table.probs[code]).abs()),
                Err(e) => return Check::failed("oracle_equivalence", e),
            }
        }
    }
    Check::new("oracle_equivalence", worst <= 1e-10, format!("n={n} max_abs_diff={worst:.3e}"))
}

fn kolmogorov_consistency(params: &Params) -> Check {
    let n = largest_n(params.m(), 729, 5).max(2);
    let (long, short) = match (enumerate_all(params, n), enumerate_all(params, n - 1)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Check::failed("kolmogorov_consistency", e),
    };
    let mut worst = 0.0f64;
    for coordinate in [n, 1] {
        match long.marginalize(coordinate) {
            Ok(t) => {
                for (a, b) in t.probs.iter().zip(&short.probs) {
                    worst = worst.max((a - b).abs());
                }
            }
            Err(e) => return Check::failed("kolmogorov_consistency", e),
        }
    }
    Check::new("kolmogorov_consistency", worst <= 1e-12, format!("n={n} max_abs_diff={worst:.3e}"))
}

fn recursion_vs_dp(params: &Params, engine: &EngineConfig, rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let size = rng.random_range(1..=14);
        let pat = random_pattern(rng, params.m(), 30, size, 10);
        match (d_star_dp(params, &pat, engine), d_star_recursive(params, &pat, engine)) {
            (Ok(a), Ok(b)) => worst = worst.max((a.value - b.value).abs()),
            (Err(e), _) | (_, Err(e)) => return Check::failed("recursion_vs_dp", e),
        }
    }
    Check::new("recursion_vs_dp", worst <= 1e-10, format!("patterns=100 max_abs_diff={worst:.3e}"))
}

/// Largest deviation of the exact two-point law from the closed-form
/// covariances over `lags`, relative to each covariance (absolute where the
/// covariance is zero).
pub fn covariance_deviation(params: &Params, lags: impl IntoIterator<Item = u64>, engine: &EngineConfig) -> Result<f64, lrdproc::EngineError> {
    let m = params.m();
    let mut worst = 0.0f64;
    for lag in lags {
        let table = CovarianceTable::theoretical(params, lag);
        let mut process = 0.0;
        for a in 0..=m {
            for b in 0..=m {
                let joint = two_point_probability(params, a, b, lag, engine)?.value;
                let cov = joint - params.prob(a) * params.prob(b);
                let theory = table.get(a, b);
                let dev = if theory == 0.0 { cov.abs() } else { ((cov - theory) / theory).abs() };
                worst = worst.max(dev);
                process += (a * b) as f64 * joint;
            }
        }
        let mean: f64 = (1..=m).map(|k| k as f64 * params.prob(k)).sum();
        let cov = process - mean * mean;
        worst = worst.max(((cov - table.process) / table.process).abs());
    }
    Ok(worst)
}

fn covariance_identities(params: &Params, engine: &EngineConfig) -> Check {
    match covariance_deviation(params, 1..=10, engine) {
        Ok(worst) => Check::new("covariance_identities", worst <= 1e-12, format!("lags=1..10 max_rel_diff={worst:.3e}")),
        Err(e) => Check::failed("covariance_identities", e),
    }
}

fn markov_property(params: &Params, engine: &EngineConfig, rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let case = markov_case(rng, params.m());
        match conditional_next(params, &case.history, case.query, engine) {
            Ok(d) => worst = worst.max((d.prob(case.ell) - params.kernel(case.ell, case.gap)).abs()),
            Err(e) => return Check::failed("markov_property", e),
        }
    }
    Check::new("markov_property", worst <= 1e-10, format!("histories=50 max_abs_diff={worst:.3e}"))
}

fn conditional_inequalities(params: &Params, engine: &EngineConfig, rng: &mut ChaCha8Rng) -> Check {
    let (mut min_a, mut min_b) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..50 {
        let case = inequality_case(rng, params.m());
        match verify_conditional_inequalities(params, &case.history, case.ell, case.queries, engine) {
            Ok(r) => {
                min_a = min_a.min(r.margin_a);
                min_b = min_b.min(r.margin_b);
            }
            Err(e) => return Check::failed("conditional_inequalities", e),
        }
    }
    Check::new(
        "conditional_inequalities",
        min_a > 0.0 && min_b > 0.0,
        format!("configurations=50 min_margin_a={min_a:.3e} min_margin_b={min_b:.3e}"),
    )
}

fn sampler_chi_square(params: &Params, seed: u64, parallelism: usize, sampler: &SamplerConfig) -> Check {
    let n = largest_n(params.m(), 256, 4);
    let table = match enumerate_all(params, n) {
        Ok(t) => t,
        Err(e) => return Check::failed("sampler_chi_square", e),
    };
    match sample_batch(params, n, 20_000, seed, parallelism, sampler) {
        Ok(batch) => {
            let t = chi_square_against(&table, &batch.paths);
            Check::new(
                "sampler_chi_square",
                t.passes(1e-3),
                format!("n={n} paths=20000 stat={:.2} dof={} p={:.4}", t.statistic, t.dof, t.p_value),
            )
        }
        Err(e) => Check::failed("sampler_chi_square", e),
    }
}

fn determinism(params: &Params, seed: u64, sampler: &SamplerConfig) -> Check {
    let run = |threads| sample_batch(params, 40, 8, seed, threads, sampler).map(|b| b.paths);
    match (run(1), run(4)) {
        (Ok(a), Ok(b)) => Check::new("determinism", a == b, "threads=1 vs 4".into()),
        (Err(e), _) | (_, Err(e)) => Check::failed("determinism", e),
    }
}

/// Runs every invariant; all run even after a failure.
pub fn run(params: &Params, seed: u64, parallelism: usize, engine: &EngineConfig, sampler: &SamplerConfig) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        Check::new("validation", params.is_validated(), format!("sum={:.6}", params.validation_sum())),
        normalization(params),
        oracle_equivalence(params, engine),
        kolmogorov_consistency(params),
        recursion_vs_dp(params, engine, &mut rng),
        covariance_identities(params, engine),
        markov_property(params, engine, &mut rng),
        conditional_inequalities(params, engine, &mut rng),
        sampler_chi_square(params, seed, parallelism, sampler),
        determinism(params, seed, sampler),
    ]
}
