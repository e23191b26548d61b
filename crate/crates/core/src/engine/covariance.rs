//! Closed-form two-point covariances.

use crate::model::{ModelParams, OccupancyPattern};
use crate::scalar::Scalar;

use super::{joint_probability, EngineConfig, EngineError, ExactProbability, StrategyChoice};

/// Covariances at a fixed lag.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTable<T> {
    pub lag: u64,
    /// `indicator[a][b] = cov(I{X_i = a}, I{X_{i+lag} = b})` for `a, b` in `0..=m`.
    pub indicator: Vec<Vec<T>>,
    /// `cov(X_i, X_{i+lag})` with states valued `0..=m`.
    pub process: T,
}

impl<T: Scalar> CovarianceTable<T> {
    /// Theoretical covariances at `lag >= 1`.
    pub fn theoretical(params: &ModelParams<T>, lag: u64) -> Self {
        assert!(lag >= 1, "lag must be positive");
        let m = params.m();
        let own: Vec<T> = (1..=m)
            .map(|k| params.prob(k) * (params.kernel(k, lag) - params.prob(k)))
            .collect();
        let mut indicator = vec![vec![T::zero(); m + 1]; m + 1];
        for k in 1..=m {
            indicator[k][k] = own[k - 1];
            indicator[k][0] = -own[k - 1];
            indicator[0][k] = -own[k - 1];
        }
        indicator[0][0] = own.iter().copied().sum();
        let process = (1..=m)
            .map(|k| T::of_u64((k * k) as u64) * own[k - 1])
            .sum();
        Self {
            lag,
            indicator,
            process,
        }
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.indicator[a][b]
    }
}

/// Leading term of `cov(I{X_i = 0}, I{X_j = 0})` for large lags: the sum of
/// `p_k c_k lag^(2H_k - 2)` over every state sharing the largest `H_k`.
pub fn base_state_leading_term<T: Scalar>(params: &ModelParams<T>, lag: u64) -> T {
    let top = params
        .hurst_vec()
        .iter()
        .copied()
        .fold(T::neg_infinity(), T::max);
    (1..=params.m())
        .filter(|&k| params.hurst(k) == top)
        .map(|k| params.prob(k) * (params.kernel(k, lag) - params.prob(k)))
        .sum()
}

/// `P(X_1 = a, X_{1 + lag} = b)` from the exact engine.
pub fn two_point_probability<T: Scalar>(
    params: &ModelParams<T>,
    a: usize,
    b: usize,
    lag: u64,
    config: &EngineConfig,
) -> Result<ExactProbability<T>, EngineError> {
    let pattern = OccupancyPattern::new().with(1, a).with(1 + lag, b);
    joint_probability(params, &pattern, StrategyChoice::Dp, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> ModelParams<f64> {
        ModelParams::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let p = canonical();
        let t2 = CovarianceTable::theoretical(&p, 2);
        // 0.2 * 0.1 * 2^-0.4
        assert_relative_eq!(t2.get(1, 1), 0.015_157_165_665_103_98, max_relative = 1e-13);
        assert_eq!(t2.get(1, 2), 0.0);
        assert_eq!(t2.get(2, 1), 0.0);
        let t1 = CovarianceTable::theoretical(&p, 1);
        assert_relative_eq!(t1.process, 0.14, max_relative = 1e-13);
        assert_relative_eq!(t1.get(0, 0), 0.05, max_relative = 1e-13);
        assert_relative_eq!(t1.get(2, 0), -0.03, max_relative = 1e-13);
    }

    #[test]
    fn exact_engine_reproduces_table() {
        let p = canonical();
        let cfg = EngineConfig::default();
        for lag in [1, 3, 10] {
            let t = CovarianceTable::theoretical(&p, lag);
            for a in 0..=2 {
                for b in 0..=2 {
                    let joint = two_point_probability(&p, a, b, lag, &cfg).unwrap().value;
                    let cov = joint - p.prob(a) * p.prob(b);
                    assert!((cov - t.get(a, b)).abs() <= 1e-14, "lag {lag} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn tied_hurst_leading_term_sums_the_ties() {
        let p = ModelParams::new(vec![0.7, 0.7, 0.4], vec![0.1, 0.15, 0.1], vec![0.05, 0.05, 0.05]).unwrap();
        let lag = 1000;
        let expect = 0.1 * 0.05 * 1000f64.powf(-0.6) + 0.15 * 0.05 * 1000f64.powf(-0.6);
        assert_relative_eq!(base_state_leading_term(&p, lag), expect, max_relative = 1e-12);
    }
}
