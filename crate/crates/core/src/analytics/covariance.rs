//! Empirical indicator covariances.

use crate::engine::CovarianceTable;
use crate::model::ModelParams;

use super::report::ReportRow;
use super::stats::Estimate;
use super::AnalyticsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub a: usize,
    pub b: usize,
    pub lag: u64,
    pub estimate: Estimate,
    pub theoretical: f64,
}

impl CovarianceEstimate {
    pub fn row(&self) -> ReportRow {
        ReportRow {
            metric: "indicator_cov".into(),
            state: format!("{}:{}", self.a, self.b),
            at: self.lag,
            empirical: self.estimate.value,
            stderr: self.estimate.stderr,
            theoretical: self.theoretical,
        }
    }
}

/// Estimates `cov(I{X_i = a}, I{X_{i+lag} = b})` from independent paths.
///
/// Each replicate contributes the window averages of `I_a(X_i) I_b(X_{i+lag})`,
/// `I_a(X_i)` and `I_b(X_{i+lag})` over every valid `i`; the estimate is
/// `mean(ab) - mean(a) mean(b)` across replicates and its standard error comes
/// from the delta method on the replicate triples.
pub fn empirical_indicator_cov<P: AsRef<[u8]>>(
    params: &ModelParams<f64>,
    paths: &[P],
    a: usize,
    b: usize,
    lag: u64,
) -> Result<CovarianceEstimate, AnalyticsError> {
    if paths.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "{} replicates; need at least 2",
            paths.len()
        )));
    }
    let m = params.m();
    if a > m || b > m || lag == 0 {
        return Err(AnalyticsError::InsufficientData(format!(
            "states ({a}, {b}) at lag {lag} are not estimable with m = {m}"
        )));
    }
    let lag = lag as usize;
    let (a8, b8) = (a as u8, b as u8);
    let mut triples = Vec::with_capacity(paths.len());
    for p in paths {
        let x = p.as_ref();
        if x.len() <= lag {
            return Err(AnalyticsError::InsufficientData(format!(
                "path of length {} has no pairs at lag {lag}",
                x.len()
            )));
        }
        let w = (x.len() - lag) as f64;
        let (mut ab, mut ia, mut ib) = (0u64, 0u64, 0u64);
        for (&u, &v) in x.iter().zip(&x[lag..]) {
            let (hu, hv) = (u == a8, v == b8);
            ia += hu as u64;
            ib += hv as u64;
            ab += (hu && hv) as u64;
        }
        triples.push((ab as f64 / w, ia as f64 / w, ib as f64 / w));
    }
    let r = triples.len() as f64;
    let mab = triples.iter().map(|t| t.0).sum::<f64>() / r;
    let ma = triples.iter().map(|t| t.1).sum::<f64>() / r;
    let mb = triples.iter().map(|t| t.2).sum::<f64>() / r;
    let value = mab - ma * mb;
    // influence of one replicate on the estimate
    let infl: Vec<f64> = triples
        .iter()
        .map(|&(x, y, z)| (x - mab) - mb * (y - ma) - ma * (z - mb))
        .collect();
    let spread = infl.iter().map(|v| v * v).sum::<f64>() / (r - 1.0);
    Ok(CovarianceEstimate {
        a,
        b,
        lag: lag as u64,
        estimate: Estimate {
            value,
            stderr: (spread / r).sqrt(),
        },
        theoretical: CovarianceTable::theoretical(params, lag as u64).get(a, b),
    })
}

/// Estimates for every state pair in `pairs` at every lag in `lags`.
pub fn covariance_report<P: AsRef<[u8]>>(
    params: &ModelParams<f64>,
    paths: &[P],
    pairs: &[(usize, usize)],
    lags: &[u64],
) -> Result<Vec<CovarianceEstimate>, AnalyticsError> {
    let mut out = Vec::with_capacity(pairs.len() * lags.len());
    for &(a, b) in pairs {
        for &lag in lags {
            out.push(empirical_indicator_cov(params, paths, a, b, lag)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn canonical() -> ModelParams<f64> {
        ModelParams::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
    }

    #[test]
    fn independent_draws_have_no_covariance() {
        let p = canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let paths: Vec<Vec<u8>> = (0..4000)
            .map(|_| (0..20).map(|_| rng.random_range(0..3u8)).collect())
            .collect();
        let est = empirical_indicator_cov(&p, &paths, 1, 1, 2).unwrap();
        assert!(est.estimate.within(0.0, 4.0), "{est:?}");
        assert!(est.estimate.stderr > 0.0);
        assert!((est.theoretical - 0.015_157_165_665_103_98).abs() < 1e-12);
    }

    #[test]
    fn alternating_paths_are_anticorrelated() {
        let p = canonical();
        let paths: Vec<Vec<u8>> = (0..10)
            .map(|r| (0..40).map(|i| ((i + r) % 2) as u8).collect())
            .collect();
        let est = empirical_indicator_cov(&p, &paths, 1, 1, 1).unwrap();
        assert!((est.estimate.value + 0.25).abs() < 1e-12);
    }

    #[test]
    fn insufficient_data() {
        let p = canonical();
        let empty: Vec<Vec<u8>> = Vec::new();
        assert!(matches!(
            empirical_indicator_cov(&p, &empty, 1, 1, 1),
            Err(AnalyticsError::InsufficientData(_))
        ));
        let short = vec![vec![0u8, 1], vec![1, 1]];
        assert!(empirical_indicator_cov(&p, &short, 1, 1, 2).is_err());
        assert_eq!(covariance_report(&p, &short, &[(1, 1), (0, 2)], &[1]).unwrap().len(), 2);
    }
}
