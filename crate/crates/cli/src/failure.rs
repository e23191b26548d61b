//! Exit codes and the invariant named on failure.

use std::fmt;
use std::io;

use lrdproc::analytics::AnalyticsError;
use lrdproc::{EngineError, OracleError, ParamError, PatternError, SampleError};

pub const EXIT_IO: i32 = 1;
pub const EXIT_PARAMS: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_SELFTEST: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    /// Name of the first invariant that failed.
    pub invariant: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, invariant: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            code,
            invariant: invariant.into(),
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(EXIT_IO, "arguments", message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.message)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::new(EXIT_IO, "io", e)
    }
}

impl From<ParamError> for Failure {
    fn from(e: ParamError) -> Self {
        let (code, name) = match e {
            ParamError::Parse(_) => (EXIT_IO, "params.parse"),
            ParamError::EmptyModel | ParamError::LengthMismatch { .. } | ParamError::NonFinite { .. } => {
                (EXIT_PARAMS, "params.shape")
            }
            ParamError::RangeViolation { .. } => (EXIT_PARAMS, "params.range"),
            ParamError::SimplexViolation { .. } => (EXIT_PARAMS, "params.simplex"),
            ParamError::AssumptionViolation { .. } => (EXIT_PARAMS, "params.validation_sum"),
        };
        Self::new(code, name, e)
    }
}

impl From<PatternError> for Failure {
    fn from(e: PatternError) -> Self {
        Self::new(EXIT_IO, "pattern.parse", e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let (code, name) = match &e {
            EngineError::CapExceeded { .. } => (EXIT_CAP, "cap.a0"),
            EngineError::FrontierOverflow { .. } => (EXIT_CAP, "cap.frontier"),
            EngineError::HorizonExceeded { .. } => (EXIT_CAP, "cap.horizon"),
            EngineError::Pattern(_) => (EXIT_IO, "pattern.states"),
            EngineError::OutOfOrder { .. } => (EXIT_IO, "engine.order"),
            EngineError::ZeroDenominator { .. } => (EXIT_IO, "engine.zero_denominator"),
            EngineError::PreconditionUnmet(_) => (EXIT_IO, "engine.precondition"),
        };
        Self::new(code, name, e)
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::SizeExceeded { .. } => Self::new(EXIT_CAP, "cap.table", e),
            OracleError::BadCoordinate { .. } => Self::new(EXIT_IO, "oracle.coordinate", e),
        }
    }
}

impl From<SampleError> for Failure {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Engine(inner) => inner.into(),
            SampleError::InvalidArgument(_) => Self::new(EXIT_IO, "arguments", e),
            SampleError::TooManyStates(_) => Self::new(EXIT_PARAMS, "params.states", e),
            SampleError::BadConditional { .. } => Self::new(EXIT_IO, "sampler.conditional", e),
            SampleError::Pool(_) => Self::new(EXIT_IO, "sampler.pool", e),
        }
    }
}

impl From<AnalyticsError> for Failure {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Sample(inner) => inner.into(),
            AnalyticsError::InsufficientData(_) => Self::new(EXIT_IO, "analytics.insufficient_data", e),
            AnalyticsError::DegenerateSeries => Self::new(EXIT_IO, "analytics.degenerate_series", e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        let f: Failure = EngineError::CapExceeded { size: 25, cap: 18 }.into();
        assert_eq!((f.code, f.invariant.as_str()), (EXIT_CAP, "cap.a0"));
        let f: Failure = ParamError::AssumptionViolation { sum: 1.2 }.into();
        assert_eq!(f.code, EXIT_PARAMS);
        let f: Failure = ParamError::Parse("x".into()).into();
        assert_eq!(f.code, EXIT_IO);
        let f: Failure = SampleError::Engine(EngineError::FrontierOverflow { entries: 9, cap: 5 }).into();
        assert_eq!((f.code, f.invariant.as_str()), (EXIT_CAP, "cap.frontier"));
    }
}
