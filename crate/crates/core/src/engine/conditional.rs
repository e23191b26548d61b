//! Conditional laws of the next (or any later) observation.

use crate::model::{ModelParams, OccupancyPattern};
use crate::scalar::Scalar;

use super::{joint_probability, scan, EngineConfig, EngineError, StrategyChoice};

/// `P(X_t = s | history)` for `s` in `0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution<T> {
    pub time: u64,
    pub probs: Vec<T>,
    /// `closed_form[k - 1]`: state `k` came from the generalized Markov closed
    /// form (no base state since the last `k`).
    pub closed_form: Vec<bool>,
    pub tainted: bool,
}

impl<T: Scalar> ConditionalDistribution<T> {
    pub fn prob(&self, state: usize) -> T {
        self.probs[state]
    }
}

/// Conditional law of `X_query` given a total history on `1..=n`.
///
/// Builds the history's frontier once and evaluates every extension from it.
pub fn conditional_next<T: Scalar>(
    params: &ModelParams<T>,
    history: &OccupancyPattern,
    query: u64,
    config: &EngineConfig,
) -> Result<ConditionalDistribution<T>, EngineError> {
    let n = history.max_index().unwrap_or(0);
    if !history.is_total_on(n) {
        return Err(EngineError::PreconditionUnmet(
            "history must assign every time in 1..=n".into(),
        ));
    }
    conditional_given(params, history, query, config)
}

/// Conditional law of `X_query` given an arbitrary (partial) pattern.
///
/// Queries beyond the pattern reuse one forward scan; earlier unassigned
/// times fall back to ratios of joint probabilities.
pub fn conditional_given<T: Scalar>(
    params: &ModelParams<T>,
    pattern: &OccupancyPattern,
    query: u64,
    config: &EngineConfig,
) -> Result<ConditionalDistribution<T>, EngineError> {
    if query == 0 || pattern.state_at(query).is_some() {
        return Err(EngineError::PreconditionUnmet(format!(
            "query time {query} must be a positive time outside the pattern"
        )));
    }
    let tainted = !params.is_validated();
    if query > pattern.max_index().unwrap_or(0) {
        let frontier = scan(params, pattern, config)?;
        let (probs, closed_form) = frontier.conditional(query)?;
        return Ok(ConditionalDistribution {
            time: query,
            probs,
            closed_form,
            tainted,
        });
    }
    let denom = joint_probability(params, pattern, StrategyChoice::Dp, config)?.value;
    if !(denom > T::of(1e-300).max(T::min_positive_value())) {
        return Err(EngineError::ZeroDenominator {
            value: denom.as_f64(),
        });
    }
    let probs = (0..=params.m())
        .map(|s| {
            let extended = pattern.clone().with(query, s);
            joint_probability(params, &extended, StrategyChoice::Dp, config).map(|p| p.value / denom)
        })
        .collect::<Result<Vec<T>, _>>()?;
    Ok(ConditionalDistribution {
        time: query,
        probs,
        closed_form: vec![false; params.m()],
        tainted,
    })
}

/// Both sides of the two conditional inequalities that hold when a base
/// state has interrupted state `ell` since its last occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport<T> {
    pub ell: usize,
    pub last_ell: u64,
    pub last_zero: u64,
    /// `p + c (i1 - last_ell)^(2H-2)`, the uninterrupted value.
    pub bound: T,
    /// `P(X_i1 = ell | history)`.
    pub exact: T,
    /// `bound - exact`; positive when the first inequality holds.
    pub margin_a: T,
    /// `P(X_i2 = ell | history) / P(X_i3 = ell | history)`.
    pub exact_ratio: T,
    /// Ratio of the uninterrupted closed forms at `i2` and `i3`.
    pub closed_ratio: T,
    /// `exact_ratio - closed_ratio`; positive when the second inequality holds.
    pub margin_b: T,
}

impl<T: Scalar> InequalityReport<T> {
    pub fn holds(&self) -> bool {
        self.margin_a > T::zero() && self.margin_b > T::zero()
    }
}

/// Evaluates both inequalities exactly for a qualifying configuration.
///
/// Requires `A_ell` nonempty with `max A_ell < max A_0`, all query times
/// beyond `max A_0` and outside the pattern, and `i2 > i3`.
pub fn verify_conditional_inequalities<T: Scalar>(
    params: &ModelParams<T>,
    history: &OccupancyPattern,
    ell: usize,
    queries: (u64, u64, u64),
    config: &EngineConfig,
) -> Result<InequalityReport<T>, EngineError> {
    let (i1, i2, i3) = queries;
    if ell == 0 || ell > params.m() {
        return Err(EngineError::PreconditionUnmet(format!("state {ell} is not in 1..=m")));
    }
    let last_ell = history
        .set(ell)
        .last()
        .copied()
        .ok_or_else(|| EngineError::PreconditionUnmet(format!("state {ell} never observed")))?;
    let last_zero = history
        .set(0)
        .last()
        .copied()
        .ok_or_else(|| EngineError::PreconditionUnmet("no base-state observation".into()))?;
    if last_ell > last_zero {
        return Err(EngineError::PreconditionUnmet(format!(
            "last {ell} at {last_ell} is after the last 0 at {last_zero}"
        )));
    }
    for t in [i1, i2, i3] {
        if t <= last_zero || history.state_at(t).is_some() {
            return Err(EngineError::PreconditionUnmet(format!(
                "query time {t} must be after {last_zero} and unassigned"
            )));
        }
    }
    if i2 <= i3 {
        return Err(EngineError::PreconditionUnmet(format!("need i2 > i3, got {i2} <= {i3}")));
    }
    let at = |t: u64| conditional_given(params, history, t, config).map(|d| d.prob(ell));
    let closed = |t: u64| params.kernel(ell, t - last_ell);
    let exact = at(i1)?;
    let bound = closed(i1);
    let exact_ratio = at(i2)? / at(i3)?;
    let closed_ratio = closed(i2) / closed(i3);
    Ok(InequalityReport {
        ell,
        last_ell,
        last_zero,
        bound,
        exact,
        margin_a: bound - exact,
        exact_ratio,
        closed_ratio,
        margin_b: exact_ratio - closed_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> ModelParams<f64> {
        ModelParams::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
    }

    #[test]
    fn closed_form_after_uninterrupted_state() {
        let p = canonical();
        let h = OccupancyPattern::new().with(1, 1);
        let d = conditional_next(&p, &h, 3, &EngineConfig::default()).unwrap();
        // 0.2 + 0.1 * 2^-0.4
        assert_relative_eq!(d.prob(1), 0.275_785_828_325_519_9, max_relative = 1e-14);
        assert!(d.closed_form[0]);
        let next = conditional_next(&p, &h, 2, &EngineConfig::default()).unwrap();
        assert_relative_eq!(next.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(next.prob(2), 0.3, max_relative = 1e-15);
    }

    #[test]
    fn interrupting_zero_lowers_the_chance() {
        let p = canonical();
        let h = OccupancyPattern::new().with(1, 1).with(2, 0);
        let d = conditional_next(&p, &h, 3, &EngineConfig::default()).unwrap();
        assert!(d.prob(1) < 0.2 + 0.1 * 2f64.powf(-0.4));
        assert!(!d.closed_form[0]);
    }

    #[test]
    fn partial_history_matches_joint_ratio() {
        let p = canonical();
        let h = OccupancyPattern::from_sets(&[vec![2, 9], vec![4], vec![7]]).unwrap();
        let inner = conditional_given(&p, &h, 5, &EngineConfig::default()).unwrap();
        assert_relative_eq!(inner.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let after = conditional_given(&p, &h, 12, &EngineConfig::default()).unwrap();
        let direct = joint_probability(&p, &h.clone().with(12, 2), StrategyChoice::Recursive, &EngineConfig::default())
            .unwrap()
            .value
            / joint_probability(&p, &h, StrategyChoice::Recursive, &EngineConfig::default()).unwrap().value;
        assert_relative_eq!(after.prob(2), direct, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_queries() {
        let p = canonical();
        let h = OccupancyPattern::new().with(1, 1).with(3, 0);
        assert!(conditional_next(&p, &h, 4, &EngineConfig::default()).is_err());
        assert!(conditional_given(&p, &h, 3, &EngineConfig::default()).is_err());
    }

    #[test]
    fn inequality_examples() {
        let p = canonical();
        let h = OccupancyPattern::new().with(1, 1).with(2, 0);
        let r = verify_conditional_inequalities(&p, &h, 1, (3, 5, 4), &EngineConfig::default()).unwrap();
        assert!(r.margin_a > 0.0, "{r:?}");
        assert!(r.margin_b > 0.0, "{r:?}");
        assert!(r.holds());

        let uninterrupted = OccupancyPattern::new().with(1, 0).with(2, 1);
        assert!(matches!(
            verify_conditional_inequalities(&p, &uninterrupted, 1, (3, 5, 4), &EngineConfig::default()),
            Err(EngineError::PreconditionUnmet(_))
        ));
        assert!(matches!(
            verify_conditional_inequalities(&p, &h, 1, (3, 4, 5), &EngineConfig::default()),
            Err(EngineError::PreconditionUnmet(_))
        ));
    }
}
