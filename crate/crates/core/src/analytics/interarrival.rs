//! Inter-arrival times of a single state.

use crate::model::ModelParams;
use crate::sampler::{sample_return_times, SamplerConfig};

use super::report::{CurvePoint, ReportRow};
use super::stats::{fit_line, mean_estimate, Estimate, LinearFit};
use super::AnalyticsError;

/// Default minimum number of completed gaps.
pub const MIN_GAPS: usize = 10_000;

/// Smallest gap used in the tail fit.
const TAIL_START: u64 = 3;

/// Fraction of the largest gaps left out of the tail fit.
const TAIL_TRIM: f64 = 0.01;

/// Fit points per decade of `t`.
const POINTS_PER_DECADE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InterArrivalSummary {
    pub state: usize,
    /// Number of completed gaps.
    pub count: usize,
    /// Gaps cut off before completion and left out of every statistic.
    pub censored: usize,
    pub mean: Estimate,
    /// `(t, P(T > t))` for `t = 0 ..= max gap`.
    pub survival: Vec<(u64, f64)>,
    /// Inclusive range of `t` used by the tail fit.
    pub window: (u64, u64),
    /// Fit of `ln S(t)` on `ln t`; `None` when the window holds too few points.
    pub tail_fit: Option<LinearFit>,
    pub theoretical_mean: f64,
    pub theoretical_exponent: f64,
}

impl InterArrivalSummary {
    pub fn tail_slope(&self) -> f64 {
        self.tail_fit.map_or(f64::NAN, |f| f.slope)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let state = self.state.to_string();
        vec![
            ReportRow {
                metric: "interarrival_mean".into(),
                state: state.clone(),
                at: self.count as u64,
                empirical: self.mean.value,
                stderr: self.mean.stderr,
                theoretical: self.theoretical_mean,
            },
            ReportRow {
                metric: "tail_slope".into(),
                state,
                at: self.count as u64,
                empirical: self.tail_slope(),
                stderr: self.tail_fit.map_or(f64::NAN, |f| f.slope_stderr),
                theoretical: self.theoretical_exponent,
            },
        ]
    }

    pub fn curve(&self) -> Vec<CurvePoint> {
        self.survival
            .iter()
            .map(|&(t, s)| CurvePoint {
                curve: "survival".into(),
                state: self.state.to_string(),
                x: t as f64,
                y: s,
            })
            .collect()
    }
}

/// Gaps between consecutive visits to `k` within each path. The wait for the
/// first visit is discarded, and so is the censored tail after the last one.
pub fn completed_gaps<P: AsRef<[u8]>>(paths: &[P], k: usize) -> Vec<u64> {
    let mut gaps = Vec::new();
    for p in paths {
        let mut last: Option<usize> = None;
        for (i, &x) in p.as_ref().iter().enumerate() {
            if x as usize == k {
                if let Some(prev) = last {
                    gaps.push((i - prev) as u64);
                }
                last = Some(i);
            }
        }
    }
    gaps
}

/// [`inter_arrival_summary_with`] requiring [`MIN_GAPS`] gaps.
pub fn inter_arrival_summary<P: AsRef<[u8]>>(
    params: &ModelParams<f64>,
    paths: &[P],
    k: usize,
) -> Result<InterArrivalSummary, AnalyticsError> {
    inter_arrival_summary_with(params, paths, k, MIN_GAPS)
}

/// Mean, survival curve and log-log tail slope of the gaps of state `k`
/// observed in sampled paths.
///
/// Gaps longer than the remaining path cannot be observed, so with heavy
/// tails the sample mean is biased low for short paths; see
/// [`return_time_summary`] for an uncensored alternative.
pub fn inter_arrival_summary_with<P: AsRef<[u8]>>(
    params: &ModelParams<f64>,
    paths: &[P],
    k: usize,
    min_gaps: usize,
) -> Result<InterArrivalSummary, AnalyticsError> {
    if k == 0 || k > params.m() {
        return Err(AnalyticsError::InsufficientData(format!("state {k} has no inter-arrival law")));
    }
    summarize_gaps(params, k, completed_gaps(paths, k), 0, min_gaps)
}

/// Summary of `count` return times to `k`, each drawn forward from a visit
/// until the next one. Draws still running after `max_gap` steps are
/// counted as censored.
pub fn return_time_summary(
    params: &ModelParams<f64>,
    k: usize,
    count: usize,
    max_gap: u64,
    seed: u64,
    parallelism: usize,
    config: &SamplerConfig,
) -> Result<InterArrivalSummary, AnalyticsError> {
    let draws = sample_return_times(params, k, count, max_gap, seed, parallelism, config)?;
    let censored = draws.iter().filter(|d| d.is_none()).count();
    let gaps = draws.into_iter().flatten().collect();
    summarize_gaps(params, k, gaps, censored, MIN_GAPS.min(count))
}

/// Mean, survival curve and tail fit of a set of gaps.
///
/// The tail fit runs from `t = 3` to the 99th percentile of the gaps; when
/// that span exceeds a decade it is narrowed to the decade centred on it
/// geometrically. Fit points are spread evenly in `ln t`.
pub fn summarize_gaps(
    params: &ModelParams<f64>,
    k: usize,
    mut gaps: Vec<u64>,
    censored: usize,
    min_gaps: usize,
) -> Result<InterArrivalSummary, AnalyticsError> {
    if gaps.len() < min_gaps.max(2) {
        return Err(AnalyticsError::InsufficientData(format!(
            "{} completed gaps; need {}",
            gaps.len(),
            min_gaps.max(2)
        )));
    }
    let as_f64: Vec<f64> = gaps.iter().map(|&g| g as f64).collect();
    let mean = mean_estimate(&as_f64);
    gaps.sort_unstable();
    let count = gaps.len();
    let max = *gaps.last().unwrap_or(&0);
    let mut survival = Vec::with_capacity(max as usize + 1);
    let mut idx = 0;
    for t in 0..=max {
        while idx < count && gaps[idx] <= t {
            idx += 1;
        }
        survival.push((t, (count - idx) as f64 / count as f64));
    }

    let keep = ((1.0 - TAIL_TRIM) * count as f64).ceil() as usize;
    let top = gaps[keep.clamp(1, count) - 1];
    let (mut lo, mut hi) = (TAIL_START, top);
    if hi > 10 * lo {
        let centre = ((lo as f64) * (hi as f64)).sqrt();
        lo = (centre / 10f64.sqrt()).ceil() as u64;
        hi = (centre * 10f64.sqrt()).floor() as u64;
    }
    let mut ts: Vec<u64> = Vec::new();
    if hi > lo {
        let steps = (POINTS_PER_DECADE * (hi as f64 / lo as f64).log10()).ceil() as usize;
        for j in 0..=steps {
            let t = ((lo as f64) * (hi as f64 / lo as f64).powf(j as f64 / steps as f64)).round() as u64;
            if ts.last() != Some(&t) {
                ts.push(t.clamp(lo, hi));
            }
        }
        ts.dedup();
    }
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .filter_map(|&t| {
            let s = survival.get(t as usize).map_or(0.0, |p| p.1);
            (s > 0.0).then(|| ((t as f64).ln(), s.ln()))
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let tail_fit = if xs.len() >= 3 { fit_line(&xs, &ys) } else { None };

    Ok(InterArrivalSummary {
        state: k,
        count,
        censored,
        mean,
        survival,
        window: (lo, hi),
        tail_fit,
        theoretical_mean: 1.0 / params.prob(k),
        theoretical_exponent: 2.0 * params.hurst(k) - 3.0,
    })
}
