//! Statistical checks on sampled paths against the model's closed forms.
//!
//! Everything here works in `f64` on realised paths (`&[P]` with
//! `P: AsRef<[u8]>`, so both [`PathSample`](crate::PathSample) and plain byte
//! vectors are accepted). Estimates carry standard errors computed across
//! independent replicates.

mod covariance;
mod hurst;
mod interarrival;
mod multinomial;
mod report;
mod stats;

use thiserror::Error;

use crate::oracle::EnumerationTable;
use crate::sampler::SampleError;

pub use covariance::{covariance_report, empirical_indicator_cov, CovarianceEstimate};
pub use hurst::{
    default_block_sizes, estimate_hurst, estimate_hurst_with, hurst_of_state, indicator_series,
    HurstEstimate,
};
pub use interarrival::{
    completed_gaps, inter_arrival_summary, inter_arrival_summary_with, return_time_summary, summarize_gaps,
    InterArrivalSummary,
    MIN_GAPS,
};
pub use multinomial::{
    count_theory, fractional_multinomial, growth_exponent, moments_from_table, pair_sum,
    psi_asymptotic, summarize_counts, variance_growth, variance_leading, CountTheory,
    CountsVector, CovarianceEntry, GrowthFit, OverdispersionReport, Regime, StateDispersion,
    VarianceGrowth,
};
pub use report::{write_curves, write_rows, CurvePoint, ReportRow};
pub use stats::{
    chi_square_test, covariance_estimate, fit_line, mean_estimate, variance_estimate,
    ChiSquareTest, Estimate, LinearFit,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("series is constant; no variance to scale")]
    DegenerateSeries,

    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Counts of each length-`n` path, indexed like an [`EnumerationTable`].
pub fn path_histogram<P: AsRef<[u8]>>(paths: &[P], m: usize, n: usize) -> Vec<u64> {
    let s = m + 1;
    let mut counts = vec![0u64; s.pow(n as u32)];
    for p in paths {
        let code = p.as_ref()[..n]
            .iter()
            .fold(0usize, |acc, &x| acc * s + x as usize);
        counts[code] += 1;
    }
    counts
}

/// Pearson test of sampled length-`table.n` prefixes against exact path
/// probabilities.
pub fn chi_square_against<P: AsRef<[u8]>>(table: &EnumerationTable<f64>, paths: &[P]) -> ChiSquareTest {
    chi_square_test(&path_histogram(paths, table.m, table.n), &table.probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_uses_table_codes() {
        let paths = vec![vec![1u8, 0], vec![1, 0], vec![2, 2]];
        let h = path_histogram(&paths, 2, 2);
        assert_eq!(h[3], 2);
        assert_eq!(h[8], 1);
        assert_eq!(h.iter().sum::<u64>(), 3);
    }
}
