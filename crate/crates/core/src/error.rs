//! Crate-wide error type.
//!
//! Domain errors (invalid parameters, out-of-range arguments) and numeric
//! errors (quadrature that failed to meet its tolerance) share one enum so
//! callers can match on the failure class without juggling conversions.

use thiserror::Error;

/// Errors produced by model evaluation, optimization, and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Persistence times are defined on `[0, ∞)`.
    #[error("negative time {t} is outside the model domain")]
    NegativeTime { t: f64 },

    /// Detection intervals must be strictly positive.
    #[error("detection interval must be positive and finite, got {t}")]
    InvalidInterval { t: f64 },

    /// A model parameter violates its invariants.
    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },

    /// An interarrival distribution violates its invariants.
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    /// Solver tolerance outside the accepted range.
    #[error("relative tolerance {value} must lie in (0, {max}]")]
    InvalidTolerance { value: f64, max: f64 },

    /// Adaptive quadrature hit its depth limit before meeting the tolerance.
    #[error(
        "quadrature did not converge on [{a}, {b}]: residual {residual:e} \
         exceeds target {target:e} at max depth {max_depth}"
    )]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        max_depth: u32,
        residual: f64,
        target: f64,
    },

    /// The survival-weighted resolution integral has no usable truncation point.
    #[error("survival-weighted cost integral did not admit a finite truncation (t_max grew past {t_max:e})")]
    NonIntegrable { t_max: f64 },

    /// Monte Carlo estimation needs a minimum number of cycles.
    #[error("at least {min} cycles required, got {got}")]
    TooFewCycles { min: u64, got: u64 },

    /// Slope fitting needs enough points to be meaningful.
    #[error("asymptotic fit needs at least {min} n-values, got {got}")]
    TooFewPoints { min: usize, got: usize },

    /// Slope fitting needs the n-values to span a wide range.
    #[error("asymptotic fit needs n-values spanning at least {min_decades} decades, got {got_decades:.2}")]
    InsufficientSpan { min_decades: f64, got_decades: f64 },

    /// A fit row had no interior optimum; the asymptotic regime is not reached.
    #[error("no interior optimum at n = {n}; enlarge n or the formation rate")]
    NoInteriorOptimumInFit { n: u64 },

    /// Solved intervals of 1 s or more are outside the small-interval regime
    /// the asymptotic law is derived for.
    #[error("t_star = {t_star} at n = {n} is not in the small-interval regime (need t_star < 1)")]
    OutsideAsymptoticRegime { n: u64, t_star: f64 },

    /// A comparison distribution's mean does not match the fixed interval.
    #[error("distribution mean {mean} does not match fixed interval {expected} (relative error {rel:e})")]
    MeanMismatch { mean: f64, expected: f64, rel: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
