//! Exact inference and simulation for a finite-state stationary process whose
//! states carry their own Hurst index.
//!
//! The process lives on states `0..=m`. State `k >= 1` is seen at time `i`
//! with probability `p_k`, and the indicator sequence of state `k` has
//! covariance `p_k c_k |i - j|^(2 H_k - 2)`. Joint laws are built from the
//! product weight [`l_star`] and the inclusion-exclusion operator `D*`,
//! evaluated here by a recursive reference ([`d_star_recursive`]) and a
//! forward signed-weight scan ([`d_star_dp`]).
//!
//! The exact layer is generic over the [`Scalar`] type; the aliases at the
//! crate root fix it to `f64`. The [`analytics`] layer works in `f64` on
//! sampled paths.

pub mod analytics;
pub mod engine;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod scalar;

pub use analytics::AnalyticsError;
pub use engine::{
    conditional_given, conditional_next, d_star_dp, d_star_recursive, joint_probability,
    verify_conditional_inequalities, CovarianceTable, DpFrontier, EngineConfig, EngineError,
    ExactProbability, Strategy, StrategyChoice,
};
pub use model::{l_star, ModelParams, OccupancyPattern, ParamError, PatternError};
pub use oracle::{enumerate_all, EnumerationTable, OracleError};
pub use sampler::{derive_seed, map_replicates, sample_batch, sample_path, sample_return_time, sample_return_times, PathSample, PathSampler, SampleBatch, SampleError, SamplerConfig};
pub use scalar::Scalar;

/// Double-precision parameter set.
pub type Params = ModelParams<f64>;
/// Single-precision parameter set.
pub type Params32 = ModelParams<f32>;
pub type Probability = ExactProbability<f64>;
pub type Frontier<'a> = DpFrontier<'a, f64>;
pub type Table = EnumerationTable<f64>;
pub type Covariances = CovarianceTable<f64>;
