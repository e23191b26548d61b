//! Aggregated-variance Hurst estimation.

use super::report::CurvePoint;
use super::stats::{fit_line, LinearFit};
use super::AnalyticsError;

/// Smallest pooled length accepted.
pub const MIN_POOLED_LEN: usize = 1 << 10;

/// Smallest block size used by [`default_block_sizes`].
const MIN_BLOCK: usize = 8;

/// Fewest pooled blocks a block size must yield to be used by default.
const MIN_BLOCKS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate {
    /// State whose indicator was analysed, when known.
    pub state: Option<usize>,
    pub estimate: f64,
    pub block_sizes: Vec<usize>,
    /// Sample variance of the block means at each block size.
    pub variances: Vec<f64>,
    /// Fit of `ln variance` on `ln block size`.
    pub fit: LinearFit,
    /// Whether the estimate lies in `(0, 1)`.
    pub in_range: bool,
}

impl HurstEstimate {
    pub fn curve(&self) -> Vec<CurvePoint> {
        let state = self.state.map_or_else(|| "-".to_string(), |k| k.to_string());
        self.block_sizes
            .iter()
            .zip(&self.variances)
            .map(|(&s, &v)| CurvePoint {
                curve: "block_variance".into(),
                state: state.clone(),
                x: s as f64,
                y: v,
            })
            .collect()
    }
}

/// Dyadic block sizes from 8 upward while every series holds a full block
/// and the series together hold at least 64 blocks.
pub fn default_block_sizes(lengths: &[usize]) -> Vec<usize> {
    let shortest = lengths.iter().copied().min().unwrap_or(0);
    let mut sizes = Vec::new();
    let mut s = MIN_BLOCK;
    while s <= shortest && lengths.iter().map(|l| l / s).sum::<usize>() >= MIN_BLOCKS {
        sizes.push(s);
        s *= 2;
    }
    sizes
}

/// Aggregated-variance estimate over [`default_block_sizes`].
pub fn estimate_hurst<S: AsRef<[f64]>>(series: &[S]) -> Result<HurstEstimate, AnalyticsError> {
    let lengths: Vec<usize> = series.iter().map(|s| s.as_ref().len()).collect();
    estimate_hurst_with(series, &default_block_sizes(&lengths))
}

/// Aggregated-variance estimate: the variance of non-overlapping block means
/// scales as `s^(2H - 2)`, so `H = (slope + 2) / 2`. Blocks from all series
/// are pooled; a trailing partial block is dropped.
pub fn estimate_hurst_with<S: AsRef<[f64]>>(
    series: &[S],
    block_sizes: &[usize],
) -> Result<HurstEstimate, AnalyticsError> {
    let pooled: usize = series.iter().map(|s| s.as_ref().len()).sum();
    if pooled < MIN_POOLED_LEN {
        return Err(AnalyticsError::InsufficientData(format!(
            "pooled length {pooled} is below {MIN_POOLED_LEN}"
        )));
    }
    let first = series.iter().find_map(|s| s.as_ref().first().copied());
    if series.iter().all(|s| s.as_ref().iter().all(|&v| Some(v) == first)) {
        return Err(AnalyticsError::DegenerateSeries);
    }
    if block_sizes.len() < 3 {
        return Err(AnalyticsError::InsufficientData(format!(
            "{} usable block sizes; need at least 3",
            block_sizes.len()
        )));
    }
    let mut variances = Vec::with_capacity(block_sizes.len());
    for &s in block_sizes {
        let means: Vec<f64> = series
            .iter()
            .flat_map(|x| x.as_ref().chunks_exact(s).map(|b| b.iter().sum::<f64>() / s as f64))
            .collect();
        if means.len() < 2 {
            return Err(AnalyticsError::InsufficientData(format!("block size {s} yields fewer than 2 blocks")));
        }
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        if var <= 0.0 {
            return Err(AnalyticsError::DegenerateSeries);
        }
        variances.push(var);
    }
    let xs: Vec<f64> = block_sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| AnalyticsError::InsufficientData("block sizes are not distinct".into()))?;
    let estimate = (fit.slope + 2.0) / 2.0;
    Ok(HurstEstimate {
        state: None,
        estimate,
        block_sizes: block_sizes.to_vec(),
        variances,
        fit,
        in_range: estimate > 0.0 && estimate < 1.0,
    })
}

/// `I{X_i = k}` for every path.
pub fn indicator_series<P: AsRef<[u8]>>(paths: &[P], k: usize) -> Vec<Vec<f64>> {
    paths
        .iter()
        .map(|p| p.as_ref().iter().map(|&x| f64::from(u8::from(x as usize == k))).collect())
        .collect()
}

/// Hurst estimate of the indicator of state `k`.
pub fn hurst_of_state<P: AsRef<[u8]>>(paths: &[P], k: usize) -> Result<HurstEstimate, AnalyticsError> {
    let mut est = estimate_hurst(&indicator_series(paths, k))?;
    est.state = Some(k);
    Ok(est)
}
