use thiserror::Error;

/// Errors raised by the simulation and calibration routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("scattering matrix is not unitary: max |SS\u{2020} - I| = {defect:.3e}")]
    NonUnitary { defect: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid mode selection: {0}")]
    InvalidModes(String),

    #[error(
        "infeasible internal phase: |cos(phi/2)| = {lhs:.6} > alpha/(1-alpha) = {bound:.6} \
         (phi = {phi}, alpha = {alpha_loss})"
    )]
    InfeasiblePhase {
        phi: f64,
        alpha_loss: f64,
        lhs: f64,
        bound: f64,
    },

    #[error("{name} = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("visibility undefined: distinguishable coincidence probability is zero")]
    UndefinedVisibility,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("target unreachable: {0}")]
    Unreachable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Accepts `value` in `[0, 1]`.
pub(crate) fn unit_closed(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}

/// Accepts `value` in `[0, 1)`.
pub(crate) fn unit_half_open(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            domain: "[0, 1)",
        })
    }
}
