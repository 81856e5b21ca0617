//! Error types shared across the crate.
//!
//! Divergent integrals are a first-class outcome here, not a numerical
//! accident: several estimators must *assert* divergence (a weight falling
//! out of its Muckenhoupt class, a function missing a Lebesgue space), so
//! the verdict carries a witness exponent and a monotone tail certificate.

use thiserror::Error;

/// Certificate attached to a divergence verdict.
///
/// `partials` holds pairs `(delta, integral over the region kept at distance
/// >= delta from the singular face)`. For a genuinely divergent integral the
/// sequence grows monotonically as `delta` shrinks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DivergenceVerdict {
    pub axis: usize,
    pub at: f64,
    pub exponent: f64,
    pub partials: Vec<(f64, f64)>,
}

impl std::fmt::Display for DivergenceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "axis {} at {} with exponent {} (power test: exponent <= -1)",
            self.axis, self.at, self.exponent
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what} at point {point:?}")]
    NonFinite { what: &'static str, point: Vec<f64> },

    #[error("integral diverges: {0}")]
    Divergent(DivergenceVerdict),

    #[error("degenerate ball: {what} has zero or non-positive mass (center {center:?}, radius {radius})")]
    DegenerateBall {
        what: &'static str,
        center: Vec<f64>,
        radius: f64,
    },

    #[error("matrix not nonnegative-definite at {point:?}: eigenvalue {eigenvalue} below tolerance")]
    NotNonnegDefinite { point: Vec<f64>, eigenvalue: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("radius too large: closure of the dilated ball at {center:?} (radius {radius}) exits the domain")]
    RadiusTooLarge { center: Vec<f64>, radius: f64 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl Error {
    /// True if this is a divergence verdict (as opposed to a usage error).
    pub fn is_divergent(&self) -> bool {
        matches!(self, Error::Divergent(_))
    }

    pub fn divergence(&self) -> Option<&DivergenceVerdict> {
        match self {
            Error::Divergent(v) => Some(v),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
