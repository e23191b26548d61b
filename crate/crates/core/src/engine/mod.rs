//! Exact joint and conditional probabilities.
//!
//! Two independent evaluators of `D*` share one contract:
//!
//! * [`d_star_recursive`] peels the latest base-state time and recurses; it
//!   costs `(m + 1)^(|A_0| - 1)` leaves and serves as the reference.
//! * [`d_star_dp`] scans times forward over a [`DpFrontier`]; its cost is
//!   polynomial in the number of times for a fixed `m`.
//!
//! [`joint_probability`] dispatches between them and the closed forms.

mod conditional;
mod covariance;
mod frontier;
mod recursion;

use thiserror::Error;

use crate::model::{l_star, ModelParams, OccupancyPattern, PatternError};
use crate::scalar::Scalar;

pub use conditional::{
    conditional_given, conditional_next, verify_conditional_inequalities, ConditionalDistribution,
    InequalityReport,
};
pub use covariance::{base_state_leading_term, two_point_probability, CovarianceTable};
pub use frontier::DpFrontier;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("|A_0| = {size} exceeds the recursion cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("time {time} is beyond the evaluation horizon {horizon}")]
    HorizonExceeded { time: u64, horizon: u64 },

    #[error("frontier would hold {entries} entries, cap is {cap}")]
    FrontierOverflow { entries: usize, cap: usize },

    #[error("time {time} does not follow the last processed time {horizon}")]
    OutOfOrder { time: u64, horizon: u64 },

    #[error("conditioning event has probability {value:e}; use the rescaled frontier")]
    ZeroDenominator { value: f64 },

    #[error("hypothesis not met: {0}")]
    PreconditionUnmet(String),

    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Limits shared by the evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Largest `|A_0|` the recursion accepts.
    pub cap_a0: usize,
    /// Largest time index the forward scan accepts.
    pub horizon: u64,
    /// Largest frontier size, in slots.
    pub frontier_cap: usize,
    /// Keep frontier weights near one with a shared log-scale offset.
    pub rescale: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            cap_a0: 18,
            horizon: 10_000,
            frontier_cap: 10_000_000,
            rescale: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Recursion,
    DynamicProgram,
    ClosedForm,
}

/// Which evaluator [`joint_probability`] should use when `A_0` is nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrategyChoice {
    Recursive,
    Dp,
    #[default]
    Auto,
}

impl std::str::FromStr for StrategyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "recursive" => Ok(Self::Recursive),
            "dp" => Ok(Self::Dp),
            "auto" => Ok(Self::Auto),
            other => Err(format!("unknown strategy `{other}` (recursive, dp, auto)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactProbability<T> {
    pub value: T,
    /// Natural log of `value`; finite even when `value` underflows.
    pub ln_value: T,
    pub strategy: Strategy,
    /// `|A_0|` of the evaluated pattern.
    pub condition_count: usize,
    /// `sum |w| / |sum w|` over the final frontier (1 for closed forms).
    pub condition_estimate: f64,
    /// Parameters bypassed validation; positivity is not guaranteed.
    pub tainted: bool,
}

impl<T: Scalar> ExactProbability<T> {
    fn closed(value: T, tainted: bool) -> Self {
        Self {
            value,
            ln_value: value.ln(),
            strategy: Strategy::ClosedForm,
            condition_count: 0,
            condition_estimate: 1.0,
            tainted,
        }
    }

    /// Cancellation worth surfacing to the user.
    pub fn ill_conditioned(&self) -> bool {
        self.condition_estimate > 1e6
    }
}

/// `D*` by recursive peeling of `max A_0`.
pub fn d_star_recursive<T: Scalar>(
    params: &ModelParams<T>,
    pattern: &OccupancyPattern,
    config: &EngineConfig,
) -> Result<ExactProbability<T>, EngineError> {
    let m = params.m();
    pattern.check_states(m)?;
    let mut sets = pattern.sets(m);
    let zeros = std::mem::take(&mut sets[0]);
    if zeros.len() > config.cap_a0 {
        return Err(EngineError::CapExceeded {
            size: zeros.len(),
            cap: config.cap_a0,
        });
    }
    let value = recursion::d_star(params, &mut sets[1..], &zeros);
    Ok(ExactProbability {
        value,
        ln_value: value.ln(),
        strategy: Strategy::Recursion,
        condition_count: zeros.len(),
        condition_estimate: f64::NAN,
        tainted: !params.is_validated(),
    })
}

/// Runs the forward scan over a pattern and returns the final frontier.
pub fn scan<'a, T: Scalar>(
    params: &'a ModelParams<T>,
    pattern: &OccupancyPattern,
    config: &EngineConfig,
) -> Result<DpFrontier<'a, T>, EngineError> {
    pattern.check_states(params.m())?;
    let mut frontier = DpFrontier::new(params, *config);
    for (t, s) in pattern.iter() {
        frontier.observe(t, s)?;
    }
    Ok(frontier)
}

/// `D*` by the forward signed-weight scan.
pub fn d_star_dp<T: Scalar>(
    params: &ModelParams<T>,
    pattern: &OccupancyPattern,
    config: &EngineConfig,
) -> Result<ExactProbability<T>, EngineError> {
    let frontier = scan(params, pattern, config)?;
    Ok(ExactProbability {
        value: frontier.total(),
        ln_value: frontier.ln_total(),
        strategy: Strategy::DynamicProgram,
        condition_count: frontier.zeros_seen(),
        condition_estimate: frontier.condition_estimate(),
        tainted: !params.is_validated(),
    })
}

/// `P(X_i = k for every (i, k) in the pattern)`.
///
/// Patterns without base-state times use the `L*` closed forms; otherwise the
/// chosen evaluator runs (`Auto` picks the forward scan).
pub fn joint_probability<T: Scalar>(
    params: &ModelParams<T>,
    pattern: &OccupancyPattern,
    strategy: StrategyChoice,
    config: &EngineConfig,
) -> Result<ExactProbability<T>, EngineError> {
    let m = params.m();
    pattern.check_states(m)?;
    let sets = pattern.sets(m);
    let tainted = !params.is_validated();
    if sets[0].is_empty() {
        let value = (1..=m).fold(T::one(), |acc, k| acc * l_star(params, k, &sets[k]));
        return Ok(ExactProbability::closed(value, tainted));
    }
    match strategy {
        StrategyChoice::Recursive => d_star_recursive(params, pattern, config),
        StrategyChoice::Dp | StrategyChoice::Auto => d_star_dp(params, pattern, config),
    }
}
