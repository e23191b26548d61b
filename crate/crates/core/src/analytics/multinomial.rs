//! Counts of each state over `n` trials.

use crate::model::ModelParams;
use crate::oracle::EnumerationTable;
use crate::sampler::{map_replicates, SamplerConfig};
use crate::scalar::KahanSum;

use super::report::{CurvePoint, ReportRow};
use super::stats::{covariance_estimate, fit_line, mean_estimate, variance_estimate, Estimate, LinearFit};
use super::AnalyticsError;

/// `(Y_0, ..., Y_m)` for one path of `n` trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsVector {
    pub n: usize,
    pub counts: Vec<u64>,
}

impl CountsVector {
    pub fn from_path(path: &[u8], m: usize) -> Self {
        let mut counts = vec![0u64; m + 1];
        for &x in path {
            counts[x as usize] += 1;
        }
        Self { n: path.len(), counts }
    }

    /// Counts over each prefix length in `ns` (ascending, at most the path
    /// length), in one pass.
    pub fn prefixes(path: &[u8], m: usize, ns: &[usize]) -> Vec<Self> {
        let mut counts = vec![0u64; m + 1];
        let mut out = Vec::with_capacity(ns.len());
        let mut done = 0;
        for &n in ns {
            for &x in &path[done..n] {
                counts[x as usize] += 1;
            }
            done = n;
            out.push(Self { n, counts: counts.clone() });
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Growth regime of `var(Y_k)`, fixed by comparing the Hurst index with 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `H < 1/2`: variance linear in `n`.
    Short,
    /// `H = 1/2`: variance of order `n ln n`.
    Critical,
    /// `H > 1/2`: variance of order `n^(2H)`.
    Long,
}

impl Regime {
    pub fn of(h: f64) -> Self {
        if h < 0.5 {
            Self::Short
        } else if h == 0.5 {
            Self::Critical
        } else {
            Self::Long
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Short => "short",
            Self::Critical => "critical",
            Self::Long => "long",
        }
    }
}

/// Non-base states driving the variance of `state`: itself, or for the base
/// state every non-base state.
fn drivers(params: &ModelParams<f64>, state: usize) -> Vec<usize> {
    if state == 0 {
        (1..=params.m()).collect()
    } else {
        vec![state]
    }
}

/// Largest Hurst index among the drivers of `state`, and the drivers tied at it.
fn dominant(params: &ModelParams<f64>, state: usize) -> (f64, Vec<usize>) {
    let ks = drivers(params, state);
    let top = ks.iter().map(|&k| params.hurst(k)).fold(f64::NEG_INFINITY, f64::max);
    (top, ks.into_iter().filter(|&k| params.hurst(k) == top).collect())
}

/// `sum over i != j in 1..=n of p_k c_k |i - j|^(2H_k - 2)`.
pub fn pair_sum(params: &ModelParams<f64>, k: usize, n: usize) -> f64 {
    let weight = params.prob(k) * params.coupling(k);
    let e = 2.0 * params.hurst(k) - 2.0;
    let acc: KahanSum<f64> = (1..n).map(|d| (n - d) as f64 * (d as f64).powf(e)).collect();
    2.0 * weight * acc.value()
}

/// Exact finite-`n` mean vector and covariance matrix of the counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTheory {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl CountTheory {
    pub fn variance(&self, state: usize) -> f64 {
        self.cov[state][state]
    }
}

pub fn count_theory(params: &ModelParams<f64>, n: usize) -> CountTheory {
    let m = params.m();
    let nf = n as f64;
    let mean = (0..=m).map(|k| nf * params.prob(k)).collect();
    let mut cov = vec![vec![0.0; m + 1]; m + 1];
    for k in 1..=m {
        for j in 1..=m {
            cov[k][j] = if k == j {
                nf * params.prob(k) * (1.0 - params.prob(k)) + pair_sum(params, k, n)
            } else {
                -nf * params.prob(k) * params.prob(j)
            };
        }
    }
    // Y_0 = n - (Y_1 + ... + Y_m)
    for k in 1..=m {
        let c0k = -(1..=m).map(|j| cov[j][k]).sum::<f64>();
        cov[0][k] = c0k;
        cov[k][0] = c0k;
    }
    cov[0][0] = (1..=m).flat_map(|k| (1..=m).map(move |j| (k, j))).map(|(k, j)| cov[k][j]).sum();
    CountTheory { n, mean, cov }
}

/// Riemann zeta on `s > 1` by Euler-Maclaurin summation.
fn zeta(s: f64) -> f64 {
    const N: usize = 20;
    let head: f64 = (1..N).map(|j| (j as f64).powf(-s)).sum();
    let n = N as f64;
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0
}

/// Leading large-`n` term of `var(Y_state)` and its regime.
///
/// With `c'_k = p_k c_k` and `H` the largest Hurst index among the states
/// driving `Y_state`:
///
/// * `H > 1/2`: `sum c'_k n^(2H) / (H (2H - 1))` over states tied at `H`;
/// * `H = 1/2`: `2 sum c'_k n ln n` over the tied states;
/// * `H < 1/2`: `(p (1 - p) + 2 sum c'_k zeta(2 - 2H_k)) n` over all drivers.
pub fn variance_leading(params: &ModelParams<f64>, state: usize, n: usize) -> (Regime, f64) {
    let (top, tied) = dominant(params, state);
    let regime = Regime::of(top);
    let nf = n as f64;
    let cprime = |k: usize| params.prob(k) * params.coupling(k);
    let value = match regime {
        Regime::Long => tied.iter().map(|&k| cprime(k)).sum::<f64>() * nf.powf(2.0 * top) / (top * (2.0 * top - 1.0)),
        Regime::Critical => 2.0 * tied.iter().map(|&k| cprime(k)).sum::<f64>() * nf * nf.ln(),
        Regime::Short => {
            let p = params.prob(state);
            let memory: f64 = drivers(params, state)
                .iter()
                .map(|&k| 2.0 * cprime(k) * zeta(2.0 - 2.0 * params.hurst(k)))
                .sum();
            (p * (1.0 - p) + memory) * nf
        }
    };
    (regime, value)
}

/// Over-dispersion `var / (n p (1 - p)) - 1` implied by [`variance_leading`].
pub fn psi_asymptotic(params: &ModelParams<f64>, state: usize, n: usize) -> f64 {
    let p = params.prob(state);
    variance_leading(params, state, n).1 / (n as f64 * p * (1.0 - p)) - 1.0
}

/// Exponent of `n` in the growth of `var(Y_state)`: `2H` in the long-memory
/// regime with nonzero coupling, otherwise 1.
pub fn growth_exponent(params: &ModelParams<f64>, state: usize) -> f64 {
    let (top, tied) = dominant(params, state);
    let coupled = tied.iter().any(|&k| params.coupling(k) != 0.0);
    if Regime::of(top) == Regime::Long && coupled {
        2.0 * top
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDispersion {
    pub state: usize,
    pub regime: Regime,
    pub mean: Estimate,
    pub theory_mean: f64,
    pub variance: Estimate,
    /// Exact finite-`n` variance.
    pub theory_variance: f64,
    /// `var / (n p (1 - p)) - 1` from the sample.
    pub psi: Estimate,
    /// The same ratio from the exact variance.
    pub psi_exact: f64,
    /// The same ratio from the leading asymptotic term.
    pub psi_asymptotic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEntry {
    pub a: usize,
    pub b: usize,
    pub estimate: Estimate,
    pub theory: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverdispersionReport {
    pub n: usize,
    pub replicates: usize,
    pub states: Vec<StateDispersion>,
    /// Every pair `a < b`.
    pub covariances: Vec<CovarianceEntry>,
}

impl OverdispersionReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let at = self.n as u64;
        let mut rows = Vec::new();
        for s in &self.states {
            let state = s.state.to_string();
            let mut push = |metric: &str, e: Estimate, theory: f64| {
                rows.push(ReportRow {
                    metric: metric.into(),
                    state: state.clone(),
                    at,
                    empirical: e.value,
                    stderr: e.stderr,
                    theoretical: theory,
                })
            };
            push("count_mean", s.mean, s.theory_mean);
            push("count_var", s.variance, s.theory_variance);
            push("psi_exact", s.psi, s.psi_exact);
            push(&format!("psi_asymptotic_{}", s.regime.name()), s.psi, s.psi_asymptotic);
        }
        for c in &self.covariances {
            rows.push(ReportRow {
                metric: "count_cov".into(),
                state: format!("{}:{}", c.a, c.b),
                at,
                empirical: c.estimate.value,
                stderr: c.estimate.stderr,
                theoretical: c.theory,
            });
        }
        rows
    }
}

fn regime_of_state(params: &ModelParams<f64>, state: usize) -> Regime {
    Regime::of(dominant(params, state).0)
}

/// Compares replicate counts (all for the same `n`) with the exact moments.
pub fn summarize_counts(
    params: &ModelParams<f64>,
    counts: &[CountsVector],
) -> Result<OverdispersionReport, AnalyticsError> {
    if counts.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!("{} replicates; need at least 2", counts.len())));
    }
    let n = counts[0].n;
    let m = params.m();
    if counts.iter().any(|c| c.n != n || c.counts.len() != m + 1) {
        return Err(AnalyticsError::InsufficientData("count vectors differ in n or in state count".into()));
    }
    let theory = count_theory(params, n);
    let columns: Vec<Vec<f64>> = (0..=m)
        .map(|k| counts.iter().map(|c| c.counts[k] as f64).collect())
        .collect();
    let states = (0..=m)
        .map(|k| {
            let p = params.prob(k);
            let scale = n as f64 * p * (1.0 - p);
            let variance = variance_estimate(&columns[k]);
            StateDispersion {
                state: k,
                regime: regime_of_state(params, k),
                mean: mean_estimate(&columns[k]),
                theory_mean: theory.mean[k],
                variance,
                theory_variance: theory.variance(k),
                psi: Estimate {
                    value: variance.value / scale - 1.0,
                    stderr: variance.stderr / scale,
                },
                psi_exact: theory.variance(k) / scale - 1.0,
                psi_asymptotic: psi_asymptotic(params, k, n),
            }
        })
        .collect();
    let mut covariances = Vec::new();
    for a in 0..=m {
        for b in a + 1..=m {
            covariances.push(CovarianceEntry {
                a,
                b,
                estimate: covariance_estimate(&columns[a], &columns[b]),
                theory: theory.cov[a][b],
            });
        }
    }
    Ok(OverdispersionReport {
        n,
        replicates: counts.len(),
        states,
        covariances,
    })
}

/// Samples `replicates` paths of length `n` and summarises their counts.
pub fn fractional_multinomial(
    params: &ModelParams<f64>,
    n: usize,
    replicates: usize,
    seed: u64,
    parallelism: usize,
    config: &SamplerConfig,
) -> Result<(Vec<CountsVector>, OverdispersionReport), AnalyticsError> {
    let m = params.m();
    let counts = map_replicates(params, n, replicates, seed, parallelism, config, |p| {
        CountsVector::from_path(&p.states, m)
    })?;
    let report = summarize_counts(params, &counts)?;
    Ok((counts, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub state: usize,
    pub regime: Regime,
    pub variances: Vec<Estimate>,
    /// Exact finite-`n` variances.
    pub theory: Vec<f64>,
    /// Fit of `ln var` on `ln n` for the sample variances.
    pub fit: LinearFit,
    /// The same fit through the exact variances.
    pub exact_fit: LinearFit,
    pub expected_exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceGrowth {
    pub ns: Vec<usize>,
    pub replicates: usize,
    /// Moment comparison at each `n`.
    pub reports: Vec<OverdispersionReport>,
    pub fits: Vec<GrowthFit>,
}

impl VarianceGrowth {
    /// The moment rows at every `n` followed by one `growth_slope` summary
    /// row per state (with `lag_n` 0).
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows: Vec<ReportRow> = self.reports.iter().flat_map(|r| r.rows()).collect();
        for f in &self.fits {
            rows.push(ReportRow {
                metric: format!("growth_slope_{}", f.regime.name()),
                state: f.state.to_string(),
                at: 0,
                empirical: f.fit.slope,
                stderr: f.fit.slope_stderr,
                theoretical: f.expected_exponent,
            });
        }
        rows
    }

    pub fn curve(&self) -> Vec<CurvePoint> {
        let mut out = Vec::new();
        for f in &self.fits {
            for (i, &n) in self.ns.iter().enumerate() {
                for (curve, y) in [("var_empirical", f.variances[i].value), ("var_exact", f.theory[i])] {
                    out.push(CurvePoint {
                        curve: curve.into(),
                        state: f.state.to_string(),
                        x: n as f64,
                        y,
                    });
                }
            }
        }
        out
    }

    pub fn fit(&self, state: usize) -> &GrowthFit {
        &self.fits[state]
    }
}

/// Fits the growth of `var(Y_k)` over the trial counts `ns`. Each replicate
/// is one path of length `max(ns)` whose prefixes give the counts at every
/// `n`, so the points share paths but replicates stay independent.
pub fn variance_growth(
    params: &ModelParams<f64>,
    ns: &[usize],
    replicates: usize,
    seed: u64,
    parallelism: usize,
    config: &SamplerConfig,
) -> Result<VarianceGrowth, AnalyticsError> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 || ns[0] == 0 {
        return Err(AnalyticsError::InsufficientData("need at least two positive trial counts".into()));
    }
    if replicates < 2 {
        return Err(AnalyticsError::InsufficientData(format!("{replicates} replicates; need at least 2")));
    }
    let m = params.m();
    let top = *ns.last().unwrap_or(&1);
    let per_path = map_replicates(params, top, replicates, seed, parallelism, config, |p| {
        CountsVector::prefixes(&p.states, m, &ns)
    })?;
    let reports = (0..ns.len())
        .map(|i| {
            let at_n: Vec<CountsVector> = per_path.iter().map(|c| c[i].clone()).collect();
            summarize_counts(params, &at_n)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let theories: Vec<CountTheory> = ns.iter().map(|&n| count_theory(params, n)).collect();
    let ln_n: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let mut fits = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let variances: Vec<Estimate> = (0..ns.len())
            .map(|i| {
                let col: Vec<f64> = per_path.iter().map(|c| c[i].counts[k] as f64).collect();
                variance_estimate(&col)
            })
            .collect();
        let theory: Vec<f64> = theories.iter().map(|t| t.variance(k)).collect();
        let ln_v: Vec<f64> = variances.iter().map(|v| v.value.ln()).collect();
        let ln_t: Vec<f64> = theory.iter().map(|v| v.ln()).collect();
        let fit = fit_line(&ln_n, &ln_v)
            .ok_or_else(|| AnalyticsError::InsufficientData(format!("no variance fit for state {k}")))?;
        let exact_fit = fit_line(&ln_n, &ln_t)
            .ok_or_else(|| AnalyticsError::InsufficientData(format!("no variance fit for state {k}")))?;
        fits.push(GrowthFit {
            state: k,
            regime: regime_of_state(params, k),
            variances,
            theory,
            fit,
            exact_fit,
            expected_exponent: growth_exponent(params, k),
        });
    }
    Ok(VarianceGrowth {
        ns,
        replicates,
        reports,
        fits,
    })
}

/// Exact mean vector and covariance matrix of the counts by summing over an
/// enumeration table.
pub fn moments_from_table(table: &EnumerationTable<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let s = table.m + 1;
    let mut first = vec![KahanSum::new(); s];
    let mut second = vec![vec![KahanSum::new(); s]; s];
    for (code, &p) in table.probs.iter().enumerate() {
        let y = CountsVector::from_path(&table.path(code), table.m);
        for a in 0..s {
            first[a].add(p * y.counts[a] as f64);
            for b in 0..s {
                second[a][b].add(p * (y.counts[a] * y.counts[b]) as f64);
            }
        }
    }
    let mean: Vec<f64> = first.iter().map(|k| k.value()).collect();
    let cov = (0..s)
        .map(|a| (0..s).map(|b| second[a][b].value() - mean[a] * mean[b]).collect())
        .collect();
    (mean, cov)
}
