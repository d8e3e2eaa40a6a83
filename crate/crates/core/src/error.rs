//! Crate-wide error type.

use crate::model::ValidationReport;
use crate::numerics::QuadratureError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("junction validation failed:\n{0}")]
    InvalidJunction(ValidationReport),

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("Green's function near-singular at omega = {omega:.6e} (rcond = {rcond:.3e})")]
    NearSingular { omega: f64, rcond: f64 },

    #[error("identity minus transfer map is numerically singular; the monitored feedback is non-contractive, which signals quadrature or model corruption")]
    NonContractiveMap,

    #[error("fixed-point iteration did not converge within {max_iter} iterations (last residual {residual:.3e})")]
    IterationLimit { max_iter: usize, residual: f64 },

    #[error("correlation matrix violates physicality: eigenvalue {eigenvalue:.6e} outside [0, 1] beyond tolerance")]
    UnphysicalCorrelation { eigenvalue: f64 },

    #[error("correlation residual {residual:.3e} exceeds solver tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("particle conservation violated: |J0_L + J0_R| = {defect:.3e} exceeds {limit:.3e}")]
    ConservationViolation { defect: f64, limit: f64 },

    #[error("stopping voltage requires a finite zero-bias current")]
    NoZeroBiasCurrent,

    #[error("no sign change of the current found within bias bracket |dmu| <= {bracket:.3e}")]
    NoStoppingVoltage { bracket: f64 },

    #[error("coefficient of performance undefined: J1_R + J1_L vanishes")]
    UndefinedCop,

    #[error("degenerate denominator in the two-site occupation formula (|N| = {denominator:.3e})")]
    DegenerateDenominator { denominator: f64 },

    #[error("discretization band [{lo:.3}, {hi:.3}] does not cover resonance at {resonance:.3}")]
    BandCoverage { lo: f64, hi: f64, resonance: f64 },

    #[error("degenerate discretization: stationary operator is singular ({0})")]
    DegenerateDiscretization(String),

    #[error("dense steady-state solve limited to {limit} total modes, got {size}")]
    DenseSolveTooLarge { size: usize, limit: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
