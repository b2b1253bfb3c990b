//! Error type shared across the crate.

use std::fmt;

use crate::geometry::Point;

/// Errors reported by geometry, projector, and iteration routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Two values were expected to live in the same ambient dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A coordinate was NaN or infinite.
    NonFinite,
    /// A parameter violated a documented invariant.
    InvalidParameter(String),
    /// Evaluation outside the compact domain of a flat function family.
    DomainExceeded { x: f64, delta: f64 },
    /// A halfspace system could not be certified feasible at construction.
    Infeasible { max_violation: f64 },
    /// The row count exceeds the exhaustive enumeration cap.
    RowCapExceeded { rows: usize, cap: usize },
    /// An iterative solver exhausted its budget. Carries the last iterate
    /// when the caller may want to inspect it.
    IterationBudget {
        op: &'static str,
        iterations: usize,
        last: Option<Point>,
    },
    /// A point expected to belong to a set violates it by more than the
    /// activity tolerance.
    PointOutsideSet { violation: f64 },
    /// Failure inside an iteration, tagged with the step at which it occurred.
    StepFailed { step: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Self::NonFinite => write!(f, "non-finite coordinate (NaN or infinity)"),
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::DomainExceeded { x, delta } => {
                write!(f, "argument {x} outside function domain [-{delta}, {delta}]")
            }
            Self::Infeasible { max_violation } => {
                write!(f, "halfspace system infeasible at the supplied witness (violation {max_violation:e})")
            }
            Self::RowCapExceeded { rows, cap } => {
                write!(
                    f,
                    "{rows} rows exceed the exhaustive enumeration cap of {cap}; \
                     use the Dykstra projector for larger systems"
                )
            }
            Self::IterationBudget { op, iterations, .. } => {
                write!(f, "{op} did not converge within {iterations} iterations")
            }
            Self::PointOutsideSet { violation } => {
                write!(f, "point lies outside the set (violation {violation:e})")
            }
            Self::StepFailed { step, source } => write!(f, "step {step} failed: {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::StepFailed { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
