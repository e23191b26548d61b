//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and exits
//! nonzero when any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrdproc::analytics::{
    chi_square_against, covariance_report, fractional_multinomial, hurst_of_state, moments_from_table,
    return_time_summary, variance_growth,
};
use lrdproc::{
    conditional_next, d_star_dp, d_star_recursive, enumerate_all, map_replicates, sample_batch,
    verify_conditional_inequalities, EngineConfig, OccupancyPattern, Params, SamplerConfig,
};
use lrdproc_cli::selftest::{canonical, covariance_deviation, inequality_case, markov_case, random_params, random_pattern};

const SEED: u64 = 20_261_019;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, std::num::NonZero::get)
}

/// Parameter sets cycling through one, two and three non-base states.
fn random_sets(count: usize, seed: u64) -> Vec<Params> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| random_params(&mut rng, 1 + i % 3)).collect()
}

fn normalization() -> Outcome {
    let mut sets = vec![canonical()];
    sets.extend(random_sets(25, SEED + 1));
    let (mut min, mut worst) = (f64::INFINITY, 0.0f64);
    for p in &sets {
        for n in 1..=6 {
            let t = enumerate_all(p, n).expect("enumeration fits");
            min = min.min(t.min());
            worst = worst.max((t.total() - 1.0).abs());
        }
    }
    Outcome::new(
        min > 0.0 && worst <= 1e-10,
        format!("sets={} n=1..6 min_prob={min:.3e} max|sum-1|={worst:.3e}", sets.len()),
    )
}

fn oracle_equivalence() -> Outcome {
    let p = canonical();
    let engine = EngineConfig::default();
    let mut worst = 0.0f64;
    let mut paths = 0;
    for n in 1..=8 {
        let t = enumerate_all(&p, n).expect("enumeration fits");
        for code in 0..t.probs.len() {
            let pat = OccupancyPattern::from_path(&t.path(code));
            let dp = d_star_dp(&p, &pat, &engine).expect("dp").value;
            let rec = d_star_recursive(&p, &pat, &engine).expect("recursion").value;
            worst = worst.max((dp - t.probs[code]).abs()).max((rec - t.probs[code]).abs());
            paths += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut partial = 0.0f64;
    let mut max_zeros = 0;
    for _ in 0..500 {
        let size = rng.random_range(1..=24);
        let pat = random_pattern(&mut rng, 2, 40, size, 14);
        max_zeros = max_zeros.max(pat.count(0));
        let dp = d_star_dp(&p, &pat, &engine).expect("dp").value;
        let rec = d_star_recursive(&p, &pat, &engine).expect("recursion").value;
        partial = partial.max((dp - rec).abs());
    }
    Outcome::new(
        worst <= 1e-10 && partial <= 1e-10,
        format!(
            "total paths={paths} max_abs_diff={worst:.3e}; partial patterns=500 max|A0|={max_zeros} max_abs_diff={partial:.3e}"
        ),
    )
}

fn covariance_identities() -> Outcome {
    let engine = EngineConfig::default();
    let worst = covariance_deviation(&canonical(), 1..=10, &engine).expect("two-point law");
    // other sets are reported only: tiny covariances lose relative accuracy
    // to the subtraction of much larger probabilities
    let others = random_sets(6, SEED + 3)
        .iter()
        .map(|p| covariance_deviation(p, 1..=10, &engine).expect("two-point law"))
        .fold(0.0f64, f64::max);
    Outcome::new(
        worst <= 1e-12,
        format!("canonical lags=1..10 max_rel_diff={worst:.3e}; 6 random sets max_rel_diff={others:.3e} (informational)"),
    )
}

fn markov_property() -> Outcome {
    let mut sets = vec![canonical()];
    sets.extend(random_sets(9, SEED + 4));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 40);
    let engine = EngineConfig::default();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let p = &sets[i % sets.len()];
        let case = markov_case(&mut rng, p.m());
        let d = conditional_next(p, &case.history, case.query, &engine).expect("conditional");
        worst = worst.max((d.prob(case.ell) - p.kernel(case.ell, case.gap)).abs());
    }
    Outcome::new(worst <= 1e-10, format!("histories=200 max_abs_diff={worst:.3e}"))
}

fn conditional_inequalities() -> Outcome {
    let mut sets = vec![canonical()];
    sets.extend(random_sets(9, SEED + 5));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 50);
    let engine = EngineConfig::default();
    let (mut min_a, mut min_b) = (f64::INFINITY, f64::INFINITY);
    for i in 0..200 {
        let p = &sets[i % sets.len()];
        let case = inequality_case(&mut rng, p.m());
        let r = verify_conditional_inequalities(p, &case.history, case.ell, case.queries, &engine).expect("inequalities");
        min_a = min_a.min(r.margin_a);
        min_b = min_b.min(r.margin_b);
    }
    Outcome::new(
        min_a > 0.0 && min_b > 0.0,
        format!("configurations=200 min_margin_a={min_a:.3e} min_margin_b={min_b:.3e}"),
    )
}

fn sampler_fidelity() -> Outcome {
    let p = canonical();
    let cfg = SamplerConfig::default();
    let table = enumerate_all(&p, 6).expect("enumeration fits");
    let short = sample_batch(&p, 6, 100_000, SEED + 6, parallelism(), &cfg).expect("sampling");
    let chi = chi_square_against(&table, &short.paths);
    let long = sample_batch(&p, 50, 100_000, SEED + 60, parallelism(), &cfg).expect("sampling");
    let pairs: Vec<(usize, usize)> = (0..=2).flat_map(|a| (a..=2).map(move |b| (a, b))).collect();
    let lags: Vec<u64> = (1..=10).collect();
    let covs = covariance_report(&p, &long.paths, &pairs, &lags).expect("covariances");
    let worst_z = covs.iter().map(|c| c.estimate.z(c.theoretical).abs()).fold(0.0f64, f64::max);
    let within = covs.iter().filter(|c| c.estimate.within(c.theoretical, 3.0)).count();
    Outcome::new(
        chi.passes(1e-3) && within == covs.len(),
        format!(
            "chi2={:.2} dof={} p={:.4}; covariances {within}/{} within 3 stderr (max |z|={worst_z:.2})",
            chi.statistic,
            chi.dof,
            chi.p_value,
            covs.len()
        ),
    )
}

fn inter_arrival() -> Outcome {
    let p = Params::new(vec![0.8, 0.6], vec![0.2, 0.2], vec![0.2, 0.1]).expect("admissible");
    let cfg = SamplerConfig::default();
    let mut passed = true;
    let mut parts = Vec::new();
    for k in 1..=2 {
        let s = return_time_summary(&p, k, 30_000, 1 << 16, SEED + 7 + k as u64, parallelism(), &cfg).expect("return times");
        let slope = s.tail_slope();
        let ok_mean = s.mean.within(s.theoretical_mean, 3.0);
        let ok_slope = (slope - s.theoretical_exponent).abs() <= 0.3;
        passed &= ok_mean && ok_slope;
        parts.push(format!(
            "H={} mean={:.3}±{:.3} (1/p={:.3}) slope={slope:.3} (2H-3={:.2}) window={:?} censored={}",
            p.hurst(k),
            s.mean.value,
            s.mean.stderr,
            s.theoretical_mean,
            s.theoretical_exponent,
            s.window,
            s.censored
        ));
    }
    Outcome::new(passed, parts.join("; "))
}

fn hurst_recovery() -> Outcome {
    let cfg = SamplerConfig::default();
    let estimate = |p: &Params, seed: u64| {
        let paths = map_replicates(p, 4096, 256, seed, parallelism(), &cfg, |s| s.states).expect("sampling");
        hurst_of_state(&paths, 1).expect("hurst").estimate
    };
    let h08 = estimate(&canonical(), SEED + 8);
    let h06 = estimate(&Params::new(vec![0.6], vec![0.2], vec![0.1]).expect("admissible"), SEED + 80);
    let iid = Params::new_unchecked(vec![0.8], vec![0.3], vec![0.0]).expect("well formed");
    let h_iid = estimate(&iid, SEED + 81);
    Outcome::new(
        (h08 - 0.8).abs() <= 0.1 && (h06 - 0.6).abs() <= 0.1 && (h_iid - 0.5).abs() <= 0.1,
        format!("pooled=2^20 H=0.8 -> {h08:.3}; H=0.6 -> {h06:.3}; iid -> {h_iid:.3}"),
    )
}

fn fractional_multinomial_checks() -> Outcome {
    let cfg = SamplerConfig::default();
    let mixed = Params::new(vec![0.8, 0.3], vec![0.2, 0.3], vec![0.1, 0.1]).expect("admissible");
    let mut passed = true;
    let mut parts = Vec::new();

    let plain = Params::new_unchecked(vec![0.8, 0.3], vec![0.2, 0.3], vec![0.0, 0.0]).expect("well formed");
    let (_, report) = fractional_multinomial(&plain, 50, 10_000, SEED + 9, parallelism(), &cfg).expect("counts");
    let mut ok = report.states.iter().all(|s| s.mean.within(s.theory_mean, 3.0) && s.variance.within(s.theory_variance, 3.0));
    ok &= report.covariances.iter().all(|c| c.estimate.within(c.theory, 3.0));
    passed &= ok;
    parts.push(format!("c=0 multinomial moments {}", if ok { "ok" } else { "off" }));

    let ns: Vec<usize> = (6..=12).map(|e| 1 << e).collect();
    let growth = variance_growth(&mixed, &ns, 10_000, SEED + 90, parallelism(), &cfg).expect("growth");
    for k in 1..=2 {
        let f = growth.fit(k);
        let target = if mixed.hurst(k) > 0.5 { 2.0 * mixed.hurst(k) } else { 1.0 };
        let ok = (f.fit.slope - target).abs() <= 0.15;
        passed &= ok;
        parts.push(format!("Y{k} slope={:.3} target={target:.2}", f.fit.slope));
    }
    let f0 = growth.fit(0);
    parts.push(format!("Y0 slope={:.3} (exact {:.3}, informational)", f0.fit.slope, f0.exact_fit.slope));

    let mut worst = 0.0f64;
    for n in 1..=8 {
        let (_, cov) = moments_from_table(&enumerate_all(&mixed, n).expect("enumeration fits"));
        let expect = -(n as f64) * mixed.prob(1) * mixed.prob(2);
        worst = worst.max((cov[1][2] - expect).abs());
    }
    passed &= worst <= 1e-12;
    parts.push(format!("enumerated cov(Y1,Y2) max_abs_diff={worst:.1e}"));

    let (_, report) = fractional_multinomial(&mixed, 50, 10_000, SEED + 91, parallelism(), &cfg).expect("counts");
    let cov = report.covariances.iter().find(|c| (c.a, c.b) == (1, 2)).expect("pair present");
    let ok = cov.estimate.within(cov.theory, 3.0);
    passed &= ok;
    parts.push(format!(
        "n=50 cov(Y1,Y2)={:.3}±{:.3} (theory {:.3})",
        cov.estimate.value, cov.estimate.stderr, cov.theory
    ));
    Outcome::new(passed, parts.join("; "))
}

fn run_cli(bin: &Path, dir: &Path, tag: &str, args: &[&str], threads: usize) -> Vec<u8> {
    let out = dir.join(format!("{tag}-{threads}.out"));
    let status = Command::new(bin)
        .args(args)
        .arg("--parallelism")
        .arg(threads.to_string())
        .arg("--out")
        .arg(&out)
        .env_clear()
        .status()
        .expect("binary runs");
    assert!(status.success(), "{tag} exited with {status}");
    std::fs::read(&out).expect("output written")
}

fn determinism() -> Outcome {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_lrdproc"));
    let dir = std::env::temp_dir().join(format!("lrdproc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let params = dir.join("params.toml");
    std::fs::write(&params, canonical().to_toml_string()).expect("params written");
    let params = params.to_str().expect("utf-8 path").to_owned();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("validate", vec!["validate"]),
        ("prob", vec!["prob", "--pattern-text", "1 1\n3 0\n4 2\n9 0"]),
        ("sample", vec!["sample", "--n", "200", "--replicates", "16"]),
        ("analyze", vec!["analyze", "--n", "1024", "--replicates", "8", "--lags", "1,2,5"]),
        ("fracmult", vec!["fracmult", "--grid", "8,16,32,64", "--replicates", "200"]),
        ("enumerate", vec!["enumerate", "--n", "4"]),
        ("selftest", vec!["selftest"]),
    ];
    let mut differing = Vec::new();
    for (tag, mut args) in runs {
        args.extend(["--params", params.as_str(), "--seed", "7"]);
        let a = run_cli(&bin, &dir, tag, &args, 1);
        let b = run_cli(&bin, &dir, tag, &args, 8);
        let again = run_cli(&bin, &dir, &format!("{tag}-again"), &args, 1);
        if a != b || a != again || a.is_empty() {
            differing.push(tag);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            "7 commands byte-identical across reruns and --parallelism 1 vs 8".to_owned()
        } else {
            format!("outputs differ for {differing:?}")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("normalization and positivity", normalization),
        ("oracle equivalence", oracle_equivalence),
        ("covariance identities", covariance_identities),
        ("generalized Markov property", markov_property),
        ("conditional inequalities", conditional_inequalities),
        ("sampler fidelity", sampler_fidelity),
        ("inter-arrival law", inter_arrival),
        ("Hurst recovery", hurst_recovery),
        ("fractional multinomial", fractional_multinomial_checks),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        failures += usize::from(!outcome.passed);
        println!("{verdict} criterion {} ({name}): {} [{:.1?}]", i + 1, outcome.detail, start.elapsed());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
