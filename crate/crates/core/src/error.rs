use thiserror::Error;

/// Errors raised by samplers, evaluators and model validation.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The drift lacks the structure a sampler needs (e.g. bounded or piecewise-linear `A`).
    #[error("unsupported drift: {0}")]
    UnsupportedDrift(String),

    /// A drift failed one of the model checks.
    #[error("drift validation failed: {0}")]
    Validation(String),

    /// A rejection ratio left `[0, 1]`; the envelope or bound feeding it is wrong.
    #[error("{sampler}: acceptance ratio {ratio} outside [0, 1]")]
    AcceptanceRatio { sampler: &'static str, ratio: f64 },

    /// The endpoint mixture bound `K` does not dominate the tilted law at a proposal.
    #[error("mixture envelope violated at (b = {b}, l = {l}): ratio {ratio} exceeds 1")]
    EnvelopeViolation { b: f64, l: f64, ratio: f64 },

    /// The retrospective rejection loop hit its round cap.
    #[error(
        "no skeleton accepted after {rounds} rounds (acceptance probability estimate < {bound:e}); \
         check kappa/M of the drift"
    )]
    RoundLimit { rounds: u64, bound: f64 },

    /// Adaptive quadrature could not meet its tolerance.
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Rounding slack tolerated above 1 before a ratio counts as a violated bound.
pub(crate) const RATIO_SLACK: f64 = 1e-12;

/// Checks a rejection ratio before it is compared against a uniform.
#[inline]
pub(crate) fn check_ratio(sampler: &'static str, ratio: f64) -> Result<f64> {
    if (0.0..=1.0 + RATIO_SLACK).contains(&ratio) {
        Ok(ratio.min(1.0))
    } else {
        Err(Error::AcceptanceRatio { sampler, ratio })
    }
}
