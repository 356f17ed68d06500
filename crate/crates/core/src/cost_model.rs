//! Cost model for deadlock-detection scheduling.
//!
//! A distributed system with `n` processes forms independent deadlocks as a
//! Poisson process with rate `λ`. Detection sweeps run every `T` seconds and
//! cost `C_D` messages each; a deadlock that has persisted for `t` seconds
//! costs `C_R(t)` messages to resolve, where `C_R` is nondecreasing because
//! a deadlock traps more processes the longer it lives. The long-run mean
//! average cost per unit time is
//!
//! ```text
//! C(T) = C_D / T + λ · (∫₀ᵀ C_R(t) dt) / T
//! ```
//!
//! The sign carrier for its derivative,
//!
//! ```text
//! φ(T) = T² C′(T) = −C_D + λ·T·C_R(T) − λ·∫₀ᵀ C_R(t) dt,
//! ```
//!
//! is nondecreasing with `φ(0⁺) = −C_D`, so `C` has at most one interior
//! minimum: the root of `φ` when one exists.
//!
//! Uncoordinated scheduling draws detection intervals from a distribution
//! `H` with survival function `H̄` and finite mean; its long-run cost is
//!
//! ```text
//! C_H = C_D / E(Y) + λ · (∫₀^∞ C_R(t) H̄(t) dt) / E(Y),
//! ```
//!
//! which is never below `C(T)` when `E(Y) = T`, with equality exactly for
//! the degenerate (deterministic) distribution.
//!
//! All evaluations are pure functions of their inputs. Integrals use closed
//! forms for every shipped resolution family; the survival-weighted integral
//! for `C_H` falls back to adaptive Simpson quadrature with a rigorous tail
//! truncation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Relative tolerance for adaptive quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;

/// The truncated tail of the survival-weighted integral is kept below this
/// fraction of the result.
pub const TAIL_REL_BOUND: f64 = 1e-12;

#[inline]
fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeTime { t })
    }
}

#[inline]
fn check_interval(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInterval { t })
    }
}

/// `e^{−x} − 1 + x` for `x ≥ 0`, i.e. `∫₀ˣ (1 − e^{−u}) du`, evaluated
/// without cancellation near zero.
fn sat_gap(x: f64) -> f64 {
    if x >= 0.5 {
        return x - 1.0 + (-x).exp();
    }
    // Σ_{k≥2} (−x)^k / k!
    let mut term = 0.5 * x * x;
    let mut sum = term;
    for k in 3..32 {
        term *= -x / k as f64;
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum
}

/// `∫₀ˣ (1 − e^{−u})² du = x + 2(e^{−x} − 1) − (e^{−2x} − 1)/2`, evaluated
/// without cancellation near zero (leading behavior `x³/3`).
fn sat_sq_gap(x: f64) -> f64 {
    if x >= 0.5 {
        return x + 2.0 * ((-x).exp() - 1.0) - 0.5 * ((-2.0 * x).exp() - 1.0);
    }
    // Σ_{k≥3} (−1)^k (2 − 2^{k−1}) x^k / k!  =  x³/3 − x⁴/4 + 7x⁵/60 − ...
    let mut pow = x * x * x; // x^k
    let mut fact = 6.0; // k!
    let mut two_pow = 4.0; // 2^{k−1}
    let mut sign = -1.0; // (−1)^k
    let mut sum = 0.0;
    for k in 3..40 {
        let term = sign * (2.0 - two_pow) * pow / fact;
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
        pow *= x;
        fact *= (k + 1) as f64;
        two_pow *= 2.0;
        sign = -sign;
    }
    sum
}

// ---------------------------------------------------------------------------
// Deadlock size models
// ---------------------------------------------------------------------------

/// Deadlock size as a continuous function of persistence time.
///
/// Every family satisfies `n_D(0) = 0`, is nondecreasing, and is bounded by
/// the process count `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DeadlockSizeModel {
    /// `n_D(t) = n·(1 − e^{−rate·t})`.
    Saturating { n: u64, rate: f64 },
    /// `n_D(t) = n·(1 − e^{−rate·t})^{1/2}`.
    ///
    /// This is the size model for which `c·n·n_D(t)²` reproduces the
    /// saturating cubic resolution family exactly.
    SqrtSaturating { n: u64, rate: f64 },
    /// `n_D(t) = min(n, Σ_{i=1..k} coeffs[i−1]·tⁱ)`, a truncated power
    /// series capped at the process count. Requires `coeffs[0] > 0` and all
    /// coefficients nonnegative; the truncation order is `coeffs.len()`.
    Polynomial { n: u64, coeffs: Vec<f64> },
}

impl DeadlockSizeModel {
    pub fn saturating(n: u64, rate: f64) -> Result<Self> {
        let m = Self::Saturating { n, rate };
        m.validate()?;
        Ok(m)
    }

    pub fn sqrt_saturating(n: u64, rate: f64) -> Result<Self> {
        let m = Self::SqrtSaturating { n, rate };
        m.validate()?;
        Ok(m)
    }

    pub fn polynomial(n: u64, coeffs: Vec<f64>) -> Result<Self> {
        let m = Self::Polynomial { n, coeffs };
        m.validate()?;
        Ok(m)
    }

    /// Total process count bounding the deadlock size.
    pub fn n(&self) -> u64 {
        match self {
            Self::Saturating { n, .. }
            | Self::SqrtSaturating { n, .. }
            | Self::Polynomial { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidModel { reason });
        match self {
            Self::Saturating { n, rate } | Self::SqrtSaturating { n, rate } => {
                if *n == 0 {
                    return fail("process count n must be at least 1".into());
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return fail(format!("size growth rate must be positive, got {rate}"));
                }
            }
            Self::Polynomial { n, coeffs } => {
                if *n == 0 {
                    return fail("process count n must be at least 1".into());
                }
                if coeffs.is_empty() {
                    return fail("polynomial size model needs at least one coefficient".into());
                }
                if !(coeffs[0].is_finite() && coeffs[0] > 0.0) {
                    return fail(format!(
                        "leading polynomial coefficient must be positive, got {}",
                        coeffs[0]
                    ));
                }
                if let Some(bad) = coeffs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
                    return fail(format!("polynomial coefficients must be >= 0, got {bad}"));
                }
            }
        }
        Ok(())
    }

    /// Deadlock size after persistence time `t` (continuous approximation).
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            Self::Saturating { n, rate } => *n as f64 * (-(-rate * t).exp_m1()),
            Self::SqrtSaturating { n, rate } => *n as f64 * (-(-rate * t).exp_m1()).sqrt(),
            Self::Polynomial { n, coeffs } => {
                let p = horner_from_t(coeffs, t);
                p.min(*n as f64)
            }
        }
    }

    /// Time at which a polynomial size model reaches the bound `n`.
    ///
    /// The uncapped series is strictly increasing and unbounded (its leading
    /// coefficient is positive), so the crossing exists and is unique.
    pub(crate) fn cap_time(&self) -> Option<f64> {
        match self {
            Self::Polynomial { n, coeffs } => {
                let nf = *n as f64;
                let g = |t: f64| horner_from_t(coeffs, t) - nf;
                let mut hi = 1.0;
                while g(hi) < 0.0 {
                    hi *= 2.0;
                }
                Some(numeric::bisect_monotone(&g, 0.0, hi, 1e-15))
            }
            _ => None,
        }
    }
}

/// `Σ coeffs[i−1] tⁱ` with the series starting at the linear term.
#[inline]
fn horner_from_t(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc * t
}

// ---------------------------------------------------------------------------
// Message-complexity presets
// ---------------------------------------------------------------------------

/// Worst-case message complexities of published distributed detection
/// algorithms, paired with the probe-based resolution algorithm whose
/// message complexity is `O(n·n_D²)`.
///
/// Edge count uses the worst-case wait-for graph, `e = n(n−1)`, and the
/// sink count its worst-case bound `l = n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexityPreset {
    /// Two-phase probe algorithm: `4e` messages.
    BrachaToueg,
    /// Two-phase diffusion algorithm: `6e` messages.
    Wang,
    /// Single-phase algorithm: `4e − 2n + 2l` messages.
    KshemkalyaniSinghal94,
    /// Single-phase algorithm, best known: `2e` messages.
    KshemkalyaniSinghal99,
    /// Best-known complexity written as a polynomial of n: `2n²` messages.
    WorstCase,
}

impl ComplexityPreset {
    pub const ALL: [ComplexityPreset; 5] = [
        Self::BrachaToueg,
        Self::Wang,
        Self::KshemkalyaniSinghal94,
        Self::KshemkalyaniSinghal99,
        Self::WorstCase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::BrachaToueg => "bracha-toueg",
            Self::Wang => "wang",
            Self::KshemkalyaniSinghal94 => "kshemkalyani-singhal-94",
            Self::KshemkalyaniSinghal99 => "kshemkalyani-singhal-99",
            Self::WorstCase => "worst-case",
        }
    }

    /// Worst-case edge count of a wait-for graph on `n` processes.
    pub fn edges(n: u64) -> f64 {
        let nf = n as f64;
        nf * (nf - 1.0)
    }

    /// `4e − 2n + 2l` with an explicit sink count `l`.
    pub fn kshemkalyani_singhal_94_messages(n: u64, sinks: u64) -> f64 {
        4.0 * Self::edges(n) - 2.0 * n as f64 + 2.0 * sinks as f64
    }

    /// Messages per detection run for `n` processes.
    pub fn detection_messages(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            Self::BrachaToueg => 4.0 * Self::edges(n),
            Self::Wang => 6.0 * Self::edges(n),
            Self::KshemkalyaniSinghal94 => Self::kshemkalyani_singhal_94_messages(n, n),
            Self::KshemkalyaniSinghal99 => 2.0 * Self::edges(n),
            Self::WorstCase => 2.0 * nf * nf,
        }
    }

    /// Exponent β of the eventual resolution cost `C_R(∞) = Θ(n^β)`.
    ///
    /// All presets pair with the probe-based resolution algorithm, whose
    /// worst case is `c·n·n_D²` with `n_D` bounded by `n`.
    pub fn resolution_exponent(&self) -> f64 {
        3.0
    }
}

impl std::fmt::Display for ComplexityPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Resolution cost models
// ---------------------------------------------------------------------------

/// Closed-form resolution cost families given directly rather than built
/// from a size model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClosedFormResolution {
    /// `C_R(t) = amplitude·(1 − e^{−rate·t})`.
    Saturating { amplitude: f64, rate: f64 },
}

/// Resolution cost `C_R(t)` in messages as a function of persistence time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ResolutionCostModel {
    /// `C_R(t) = c·n·n_D(t)²` — the probe-based resolution shape driven by a
    /// size model.
    FromSize {
        size: DeadlockSizeModel,
        preset: ComplexityPreset,
        c: f64,
    },
    /// A closed-form family given directly.
    ClosedForm(ClosedFormResolution),
}

impl ResolutionCostModel {
    pub fn from_size(size: DeadlockSizeModel, preset: ComplexityPreset, c: f64) -> Result<Self> {
        let m = Self::FromSize { size, preset, c };
        m.validate()?;
        Ok(m)
    }

    /// The saturating cubic family `C_R(t) = n³·(1 − e^{−t})`.
    pub fn saturating_cubic(n: u64) -> Self {
        let nf = n as f64;
        Self::ClosedForm(ClosedFormResolution::Saturating {
            amplitude: nf * nf * nf,
            rate: 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FromSize { size, c, .. } => {
                size.validate()?;
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidModel {
                        reason: format!("resolution scale constant must be positive, got {c}"),
                    });
                }
            }
            Self::ClosedForm(ClosedFormResolution::Saturating { amplitude, rate }) => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::InvalidModel {
                        reason: format!("resolution amplitude must be positive, got {amplitude}"),
                    });
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidModel {
                        reason: format!("resolution rate must be positive, got {rate}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Resolution cost after persistence time `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            Self::FromSize { size, c, .. } => {
                let nd = size.eval_unchecked(t);
                c * size.n() as f64 * nd * nd
            }
            Self::ClosedForm(ClosedFormResolution::Saturating { amplitude, rate }) => {
                amplitude * (-(-rate * t).exp_m1())
            }
        }
    }

    /// Eventual resolution cost `C_R(∞)`.
    pub fn sup(&self) -> f64 {
        match self {
            Self::FromSize { size, c, .. } => {
                let nf = size.n() as f64;
                c * nf * nf * nf
            }
            Self::ClosedForm(ClosedFormResolution::Saturating { amplitude, .. }) => *amplitude,
        }
    }

    /// `∫₀ᵀ C_R(t) dt` via the family's antiderivative.
    ///
    /// The saturating families integrate in closed form; the polynomial
    /// family integrates term-wise up to its cap time and linearly beyond.
    pub fn integral(&self, t_end: f64) -> Result<f64> {
        check_interval(t_end)?;
        Ok(self.integral_unchecked(t_end))
    }

    pub(crate) fn integral_unchecked(&self, t_end: f64) -> f64 {
        match self {
            Self::ClosedForm(ClosedFormResolution::Saturating { amplitude, rate }) => {
                amplitude * sat_gap(rate * t_end) / rate
            }
            Self::FromSize { size, c, .. } => {
                let nf = size.n() as f64;
                match size {
                    DeadlockSizeModel::Saturating { rate, .. } => {
                        c * nf * nf * nf * sat_sq_gap(rate * t_end) / rate
                    }
                    DeadlockSizeModel::SqrtSaturating { rate, .. } => {
                        c * nf * nf * nf * sat_gap(rate * t_end) / rate
                    }
                    DeadlockSizeModel::Polynomial { coeffs, .. } => {
                        let cap = size.cap_time().expect("polynomial model has a cap");
                        let s = t_end.min(cap);
                        let head = poly_square_integral(coeffs, s);
                        let flat = if t_end > cap {
                            (t_end - cap) * nf * nf
                        } else {
                            0.0
                        };
                        c * nf * (head + flat)
                    }
                }
            }
        }
    }

    /// `∫₀ᵀ C_R(t) dt` by adaptive quadrature — the slow reference path used
    /// to validate the antiderivatives.
    pub fn integral_quadrature(&self, t_end: f64, rel_tol: f64) -> Result<f64> {
        check_interval(t_end)?;
        match self {
            // The polynomial integrand has a derivative kink at the cap;
            // split there so each piece is smooth.
            Self::FromSize {
                size: size @ DeadlockSizeModel::Polynomial { .. },
                ..
            } => {
                let cap = size.cap_time().expect("polynomial model has a cap");
                if t_end > cap {
                    let head =
                        numeric::integrate(&|t| self.eval_unchecked(t), 0.0, cap, rel_tol)?;
                    let tail =
                        numeric::integrate(&|t| self.eval_unchecked(t), cap, t_end, rel_tol)?;
                    Ok(head + tail)
                } else {
                    numeric::integrate(&|t| self.eval_unchecked(t), 0.0, t_end, rel_tol)
                }
            }
            _ => numeric::integrate(&|t| self.eval_unchecked(t), 0.0, t_end, rel_tol),
        }
    }
}

/// `∫₀ˢ (Σ cᵢ tⁱ)² dt` expanded term-wise; exact power-rule integration.
fn poly_square_integral(coeffs: &[f64], s: f64) -> f64 {
    let k = coeffs.len();
    // powers[p] = s^p, needed up to 2k + 1
    let mut powers = vec![1.0; 2 * k + 2];
    for p in 1..powers.len() {
        powers[p] = powers[p - 1] * s;
    }
    let mut sum = 0.0;
    for (a, ca) in coeffs.iter().enumerate() {
        for (b, cb) in coeffs.iter().enumerate() {
            let p = a + b + 3; // (a+1) + (b+1) + 1
            sum += ca * cb * powers[p] / p as f64;
        }
    }
    sum
}

/// Regularized upper incomplete gamma `Q(a, z)`; statrs rejects `z = 0`.
#[inline]
fn gamma_upper_regularized(a: f64, z: f64) -> f64 {
    if z <= 0.0 {
        1.0
    } else {
        statrs::function::gamma::gamma_ur(a, z)
    }
}

// ---------------------------------------------------------------------------
// Interarrival distributions for uncoordinated scheduling
// ---------------------------------------------------------------------------

/// Interarrival distribution of detection initiations under uncoordinated
/// scheduling. Every member has a finite positive mean and a closed-form
/// survival function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum IntervalDistribution {
    /// Point mass at `value`; equivalent to the fixed policy.
    Deterministic { value: f64 },
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Gamma with the given shape and scale (mean `shape·scale`).
    Gamma { shape: f64, scale: f64 },
}

impl IntervalDistribution {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidDistribution { reason });
        match self {
            Self::Deterministic { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return fail(format!("deterministic interval must be positive, got {value}"));
                }
            }
            Self::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return fail(format!("exponential mean must be positive, got {mean}"));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                    return fail(format!("uniform bounds must satisfy 0 <= lo < hi, got [{lo}, {hi})"));
                }
            }
            Self::Gamma { shape, scale } => {
                if !(shape.is_finite() && scale.is_finite() && *shape > 0.0 && *scale > 0.0) {
                    return fail(format!(
                        "gamma shape and scale must be positive, got shape {shape}, scale {scale}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// First moment `E(Y)`.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Deterministic { value } => *value,
            Self::Exponential { mean } => *mean,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Gamma { shape, scale } => shape * scale,
        }
    }

    /// Survival function `H̄(t) = 1 − H(t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            Self::Deterministic { value } => {
                if t < *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Exponential { mean } => (-t / mean).exp(),
            Self::Uniform { lo, hi } => {
                if t <= *lo {
                    1.0
                } else if t >= *hi {
                    0.0
                } else {
                    (hi - t) / (hi - lo)
                }
            }
            Self::Gamma { shape, scale } => gamma_upper_regularized(*shape, t / scale),
        }
    }

    /// Tail integral `∫ₓ^∞ H̄(t) dt`, closed form per member.
    pub fn tail_integral(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::Deterministic { value } => (value - x).max(0.0),
            Self::Exponential { mean } => mean * (-x / mean).exp(),
            Self::Uniform { lo, hi } => {
                if x >= *hi {
                    0.0
                } else if x <= *lo {
                    (lo - x) + 0.5 * (hi - lo)
                } else {
                    let w = hi - x;
                    0.5 * w * w / (hi - lo)
                }
            }
            // E[(Y − x)⁺] = k·θ·Q(k+1, x/θ) − x·Q(k, x/θ)
            Self::Gamma { shape, scale } => {
                let z = x / scale;
                shape * scale * gamma_upper_regularized(shape + 1.0, z)
                    - x * gamma_upper_regularized(*shape, z)
            }
        }
    }

    /// Short identifier for table output.
    pub fn label(&self) -> String {
        match self {
            Self::Deterministic { value } => format!("deterministic({value})"),
            Self::Exponential { mean } => format!("exponential(mean={mean})"),
            Self::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            Self::Gamma { shape, scale } => format!("gamma(shape={shape},scale={scale})"),
        }
    }
}

// ---------------------------------------------------------------------------
// The cost model bundle
// ---------------------------------------------------------------------------

/// Bundle defining the long-run cost functional `C(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Messages per detection run, `C_D > 0`.
    pub detection_cost: f64,
    /// Deadlock formation rate `λ ≥ 0` (1/seconds).
    pub lambda: f64,
    /// Resolution cost `C_R(t)`.
    pub resolution: ResolutionCostModel,
    /// Total process count.
    pub n: u64,
}

impl CostModel {
    pub fn new(
        detection_cost: f64,
        lambda: f64,
        resolution: ResolutionCostModel,
        n: u64,
    ) -> Result<Self> {
        let m = Self {
            detection_cost,
            lambda,
            resolution,
            n,
        };
        m.validate()?;
        Ok(m)
    }

    /// The library's running example: `C_R(t) = n³(1 − e^{−t})`, `C_D = n²`.
    pub fn example(n: u64, lambda: f64) -> Result<Self> {
        let nf = n as f64;
        Self::new(
            nf * nf,
            lambda,
            ResolutionCostModel::saturating_cubic(n),
            n,
        )
    }

    /// Model with detection cost taken from a complexity preset and the
    /// probe-based resolution shape `c·n·n_D(t)²`.
    pub fn from_preset(
        size: DeadlockSizeModel,
        preset: ComplexityPreset,
        c: f64,
        lambda: f64,
    ) -> Result<Self> {
        let n = size.n();
        Self::new(
            preset.detection_messages(n),
            lambda,
            ResolutionCostModel::from_size(size, preset, c)?,
            n,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.detection_cost.is_finite() && self.detection_cost > 0.0) {
            return Err(Error::InvalidModel {
                reason: format!("detection cost must be positive, got {}", self.detection_cost),
            });
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidModel {
                reason: format!("formation rate must be >= 0, got {}", self.lambda),
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidModel {
                reason: "process count n must be at least 1".into(),
            });
        }
        self.resolution.validate()?;
        if let ResolutionCostModel::FromSize { size, .. } = &self.resolution {
            if size.n() != self.n {
                return Err(Error::InvalidModel {
                    reason: format!(
                        "size model process count {} disagrees with model n = {}",
                        size.n(),
                        self.n
                    ),
                });
            }
        }
        Ok(())
    }

    /// Long-run mean average cost `C(T)` for fixed-interval scheduling.
    pub fn mean_cost_rate(&self, t: f64) -> Result<f64> {
        check_interval(t)?;
        let integral = self.resolution.integral_unchecked(t);
        Ok((self.detection_cost + self.lambda * integral) / t)
    }

    /// `φ(T) = T²C′(T) = −C_D + λ·T·C_R(T) − λ·∫₀ᵀ C_R`.
    ///
    /// Shares the sign of `C′(T)`, tends to `−C_D` as `T → 0⁺`, and is
    /// nondecreasing, so its unique root (when one exists) is the optimal
    /// detection interval.
    pub fn phi(&self, t: f64) -> Result<f64> {
        check_interval(t)?;
        let cr = self.resolution.eval_unchecked(t);
        let integral = self.resolution.integral_unchecked(t);
        Ok(self.lambda * (t * cr - integral) - self.detection_cost)
    }

    /// Long-run mean average cost `C_H` under uncoordinated scheduling with
    /// interarrival distribution `dist`.
    ///
    /// The deterministic member routes through [`Self::mean_cost_rate`], so
    /// the degenerate case agrees bit for bit with the fixed policy. Other
    /// members integrate `C_R·H̄` by adaptive quadrature on `[0, t_max]`,
    /// with `t_max` grown until the truncated tail is provably below
    /// [`TAIL_REL_BOUND`] of the result.
    pub fn random_schedule_cost(&self, dist: &IntervalDistribution) -> Result<f64> {
        self.validate()?;
        dist.validate()?;
        if let IntervalDistribution::Deterministic { value } = dist {
            return self.mean_cost_rate(*value);
        }
        let mean = dist.mean();
        if self.lambda == 0.0 {
            return Ok(self.detection_cost / mean);
        }
        let sup = self.resolution.sup();
        // sup·tail(t_max) <= bound·C_D/λ implies the dropped tail is below
        // bound·C_H·E(Y)/λ, i.e. below bound relative to the result.
        let target = TAIL_REL_BOUND * self.detection_cost / self.lambda;
        let mut t_max = mean.max(f64::MIN_POSITIVE);
        let mut doublings = 0;
        while sup * dist.tail_integral(t_max) > target {
            t_max *= 2.0;
            doublings += 1;
            if doublings > 500 {
                return Err(Error::NonIntegrable { t_max });
            }
        }
        let weighted = |t: f64| self.resolution.eval_unchecked(t) * dist.survival(t);
        let j = match dist {
            // H̄ ≡ 1 up to lo and has a kink there; use the antiderivative on
            // the flat part and integrate each smooth piece separately.
            IntervalDistribution::Uniform { lo, hi } => {
                let head = if *lo > 0.0 {
                    self.resolution.integral_unchecked(*lo)
                } else {
                    0.0
                };
                head + numeric::integrate(&weighted, *lo, hi.min(t_max), QUAD_REL_TOL)?
            }
            _ => numeric::integrate(&weighted, 0.0, t_max, QUAD_REL_TOL)?,
        };
        Ok((self.detection_cost + self.lambda * j) / mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }

    // -- size models --------------------------------------------------------

    #[test]
    fn size_starts_at_zero() {
        let m = DeadlockSizeModel::saturating(1000, 1.0).unwrap();
        assert_eq!(m.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn size_is_bounded_and_monotone() {
        let m = DeadlockSizeModel::saturating(1000, 1.0).unwrap();
        let mut prev = 0.0;
        for i in 0..60 {
            let t = 0.5 * i as f64;
            let v = m.eval(t).unwrap();
            assert!(v >= prev, "n_D must be nondecreasing");
            assert!(v <= 1000.0, "n_D must stay below n");
            prev = v;
        }
        assert!(m.eval(1e6).unwrap() <= 1000.0);
        assert!(m.eval(1e6).unwrap() > 999.999);
    }

    #[test]
    fn polynomial_size_evaluates_directly() {
        // 2t + 3t² at t = 2 -> 16, far below the cap
        let m = DeadlockSizeModel::polynomial(1_000_000, vec![2.0, 3.0]).unwrap();
        assert_eq!(m.eval(2.0).unwrap(), 16.0);
    }

    #[test]
    fn polynomial_size_caps_at_n() {
        let m = DeadlockSizeModel::polynomial(10, vec![2.0, 3.0]).unwrap();
        assert_eq!(m.eval(100.0).unwrap(), 10.0);
        // cap where 2t + 3t² = 10: t = (−2 + √124)/6
        let cap = m.cap_time().unwrap();
        assert!(rel_err(cap, (124.0f64.sqrt() - 2.0) / 6.0) < 1e-12, "cap {cap}");
    }

    #[test]
    fn negative_time_is_rejected() {
        let m = DeadlockSizeModel::saturating(10, 1.0).unwrap();
        assert!(matches!(m.eval(-1.0), Err(Error::NegativeTime { .. })));
    }

    #[test]
    fn polynomial_requires_positive_leading_coefficient() {
        assert!(DeadlockSizeModel::polynomial(10, vec![0.0, 1.0]).is_err());
        assert!(DeadlockSizeModel::polynomial(10, vec![]).is_err());
        assert!(DeadlockSizeModel::polynomial(10, vec![1.0, -0.5]).is_err());
    }

    // -- presets -------------------------------------------------------------

    #[test]
    fn preset_catalog_matches_published_complexities() {
        let n = 10u64;
        let e = ComplexityPreset::edges(n);
        assert_eq!(e, 90.0);
        assert_eq!(ComplexityPreset::BrachaToueg.detection_messages(n), 4.0 * e);
        assert_eq!(ComplexityPreset::Wang.detection_messages(n), 6.0 * e);
        assert_eq!(
            ComplexityPreset::kshemkalyani_singhal_94_messages(n, 7),
            4.0 * e - 2.0 * 10.0 + 2.0 * 7.0
        );
        assert_eq!(
            ComplexityPreset::KshemkalyaniSinghal99.detection_messages(n),
            2.0 * e
        );
        assert_eq!(ComplexityPreset::WorstCase.detection_messages(n), 200.0);
        for p in ComplexityPreset::ALL {
            assert!(p.detection_messages(2) > 0.0, "{p} must cost messages at n = 2");
            assert_eq!(p.resolution_exponent(), 3.0);
        }
    }

    // -- resolution cost ------------------------------------------------------

    #[test]
    fn example_resolution_vanishes_at_zero() {
        let r = ResolutionCostModel::saturating_cubic(100);
        assert_eq!(r.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn example_resolution_at_ln2() {
        // n³(1 − e^{−ln 2}) = n³/2
        let r = ResolutionCostModel::saturating_cubic(100);
        let v = r.eval(2.0f64.ln()).unwrap();
        assert!(rel_err(v, 5e5) < 1e-12, "got {v}");
    }

    #[test]
    fn sqrt_saturating_from_size_equals_saturating_cubic() {
        let from_size = ResolutionCostModel::from_size(
            DeadlockSizeModel::sqrt_saturating(100, 1.0).unwrap(),
            ComplexityPreset::WorstCase,
            1.0,
        )
        .unwrap();
        let closed = ResolutionCostModel::saturating_cubic(100);
        for i in 0..60 {
            let t = 0.1 * i as f64;
            let a = from_size.eval(t).unwrap();
            let b = closed.eval(t).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs(), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn resolution_is_monotone_and_bounded() {
        let r = ResolutionCostModel::from_size(
            DeadlockSizeModel::saturating(40, 0.7).unwrap(),
            ComplexityPreset::KshemkalyaniSinghal99,
            2.0,
        )
        .unwrap();
        let mut prev = 0.0;
        for i in 0..80 {
            let v = r.eval(0.25 * i as f64).unwrap();
            assert!(v >= prev);
            assert!(v <= r.sup());
            prev = v;
        }
    }

    // -- integrals -----------------------------------------------------------

    #[test]
    fn example_integral_small_t_limit() {
        // ∫₀ᵀ (1 − e^{−t}) dt = T²/2 − T³/6 + O(T⁴) vanishes as T → 0⁺
        let r = ResolutionCostModel::saturating_cubic(1);
        let t = 1e-8;
        let v = r.integral(t).unwrap();
        assert!(v > 0.0 && v < 1e-15);
        assert!(rel_err(v, 0.5 * t * t - t * t * t / 6.0) < 1e-12, "got {v}");
    }

    #[test]
    fn example_integral_at_one() {
        // 10⁶·(1 + e^{−1} − 1) = 10⁶·e^{−1}
        let r = ResolutionCostModel::saturating_cubic(100);
        let v = r.integral(1.0).unwrap();
        assert!(rel_err(v, 367_879.441_171_442_32) < 1e-12, "got {v}");
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        let models = [
            ResolutionCostModel::saturating_cubic(100),
            ResolutionCostModel::from_size(
                DeadlockSizeModel::saturating(37, 1.3).unwrap(),
                ComplexityPreset::WorstCase,
                0.8,
            )
            .unwrap(),
            ResolutionCostModel::from_size(
                DeadlockSizeModel::sqrt_saturating(12, 0.4).unwrap(),
                ComplexityPreset::Wang,
                2.5,
            )
            .unwrap(),
            ResolutionCostModel::from_size(
                DeadlockSizeModel::polynomial(50, vec![1.5, 0.0, 0.25]).unwrap(),
                ComplexityPreset::WorstCase,
                1.0,
            )
            .unwrap(),
        ];
        for r in &models {
            for i in 0..50 {
                // log-spaced grid over [1e-3, 1e3]
                let t = 1e-3 * 10f64.powf(6.0 * i as f64 / 49.0);
                let closed = r.integral(t).unwrap();
                let quad = r.integral_quadrature(t, 1e-12).unwrap();
                assert!(
                    rel_err(closed, quad) < 1e-9,
                    "t = {t}: closed {closed} vs quadrature {quad}"
                );
            }
        }
    }

    // -- mean cost rate and phi ------------------------------------------------

    #[test]
    fn zero_rate_cost_is_pure_detection() {
        let m = CostModel::example(100, 0.0).unwrap();
        assert_eq!(m.mean_cost_rate(2.0).unwrap(), 100.0 * 100.0 / 2.0);
    }

    #[test]
    fn example_cost_at_one() {
        let m = CostModel::example(100, 1.0).unwrap();
        let v = m.mean_cost_rate(1.0).unwrap();
        assert!(rel_err(v, 377_879.441_171_442_32) < 1e-12, "got {v}");
    }

    #[test]
    fn reference_interval_beats_neighbors() {
        let m = CostModel::example(50, 1.0).unwrap();
        let at_opt = m.mean_cost_rate(0.214699).unwrap();
        assert!(at_opt < m.mean_cost_rate(0.1).unwrap());
        assert!(at_opt < m.mean_cost_rate(0.5).unwrap());
    }

    #[test]
    fn phi_tends_to_minus_detection_cost() {
        let m = CostModel::example(100, 1.0).unwrap();
        let v = m.phi(1e-12).unwrap();
        assert!(rel_err(v, -1e4) < 1e-9, "got {v}");
    }

    #[test]
    fn phi_matches_simplified_form() {
        // For the example family: φ(T) = −n² + λn³(1 − (1+T)e^{−T})
        for &(n, lambda) in &[(50u64, 1.0), (100, 0.25), (1000, 1.0 / 30.0)] {
            let m = CostModel::example(n, lambda).unwrap();
            let nf = n as f64;
            for i in 1..=40 {
                let t = 0.1 * i as f64;
                let direct = m.phi(t).unwrap();
                let simplified = -nf * nf + lambda * nf * nf * nf * (1.0 - (1.0 + t) * (-t).exp());
                let scale = direct.abs().max(simplified.abs()).max(1.0);
                assert!(
                    (direct - simplified).abs() / scale < 1e-9,
                    "n={n} t={t}: {direct} vs {simplified}"
                );
            }
        }
    }

    #[test]
    fn phi_is_small_at_reference_root() {
        let m = CostModel::example(50, 1.0).unwrap();
        let v = m.phi(0.214699).unwrap();
        assert!(v.abs() / 2500.0 < 1e-3, "got {v}");
    }

    // -- random scheduling -----------------------------------------------------

    #[test]
    fn degenerate_distribution_equals_fixed_policy() {
        let m = CostModel::example(100, 1.0).unwrap();
        for t in [0.1, 0.5, 1.0, 3.0] {
            let fixed = m.mean_cost_rate(t).unwrap();
            let random = m
                .random_schedule_cost(&IntervalDistribution::Deterministic { value: t })
                .unwrap();
            assert_eq!(fixed.to_bits(), random.to_bits(), "t = {t}");
        }
    }

    #[test]
    fn exponential_schedule_cost_matches_closed_form() {
        // C_H = n²/μ + λn³·μ/(μ+1)
        let m = CostModel::example(100, 1.0).unwrap();
        for mu in [0.25, 1.0, 2.0] {
            let got = m
                .random_schedule_cost(&IntervalDistribution::Exponential { mean: mu })
                .unwrap();
            let want = 1e4 / mu + 1e6 * mu / (mu + 1.0);
            assert!(rel_err(got, want) < 1e-9, "mu = {mu}: {got} vs {want}");
        }
    }

    #[test]
    fn exponential_schedule_costs_more_than_fixed() {
        let m = CostModel::example(100, 1.0).unwrap();
        let random = m
            .random_schedule_cost(&IntervalDistribution::Exponential { mean: 1.0 })
            .unwrap();
        assert!(rel_err(random, 510_000.0) < 1e-9, "got {random}");
        assert!(random > m.mean_cost_rate(1.0).unwrap());
    }

    #[test]
    fn uniform_and_gamma_schedule_costs_match_closed_forms() {
        let m = CostModel::example(100, 1.0).unwrap();
        // Uniform(0, 2): C_H = 10⁴ + 10⁶·(1 − e^{−2})/2
        let uni = m
            .random_schedule_cost(&IntervalDistribution::Uniform { lo: 0.0, hi: 2.0 })
            .unwrap();
        assert!(rel_err(uni, 442_332.358_381_693_65) < 1e-9, "got {uni}");
        // Gamma(2, 1/2): C_H = 10⁴ + 10⁶·(2θ − θ(θ+2)/(θ+1)²), θ = 1/2
        let gam = m
            .random_schedule_cost(&IntervalDistribution::Gamma {
                shape: 2.0,
                scale: 0.5,
            })
            .unwrap();
        assert!(rel_err(gam, 454_444.444_444_444_44) < 1e-9, "got {gam}");
    }

    #[test]
    fn zero_rate_random_cost_is_detection_over_mean() {
        let m = CostModel::example(100, 0.0).unwrap();
        let v = m
            .random_schedule_cost(&IntervalDistribution::Exponential { mean: 2.0 })
            .unwrap();
        assert_eq!(v, 1e4 / 2.0);
    }

    #[test]
    fn gamma_survival_and_tail_are_consistent() {
        // shape 2: H̄(t) = (1 + t/θ)e^{−t/θ}
        let d = IntervalDistribution::Gamma {
            shape: 2.0,
            scale: 0.5,
        };
        for t in [0.0, 0.3, 1.0, 4.0] {
            let z: f64 = t / 0.5;
            let want = (1.0 + z) * (-z).exp();
            assert!(rel_err(d.survival(t), want) < 1e-12, "t = {t}");
        }
        // tail at 0 is the mean
        assert!(rel_err(d.tail_integral(0.0), 1.0) < 1e-12);
    }

    #[test]
    fn distribution_means() {
        assert_eq!(IntervalDistribution::Deterministic { value: 2.0 }.mean(), 2.0);
        assert_eq!(IntervalDistribution::Exponential { mean: 0.5 }.mean(), 0.5);
        assert_eq!(IntervalDistribution::Uniform { lo: 0.0, hi: 2.0 }.mean(), 1.0);
        assert_eq!(
            IntervalDistribution::Gamma {
                shape: 2.0,
                scale: 0.5
            }
            .mean(),
            1.0
        );
    }

    #[test]
    fn model_validation_rejects_bad_bundles() {
        assert!(CostModel::new(0.0, 1.0, ResolutionCostModel::saturating_cubic(10), 10).is_err());
        assert!(CostModel::new(1.0, -1.0, ResolutionCostModel::saturating_cubic(10), 10).is_err());
        // size model's n must agree with the bundle's n
        let size = DeadlockSizeModel::saturating(10, 1.0).unwrap();
        let res = ResolutionCostModel::from_size(size, ComplexityPreset::WorstCase, 1.0).unwrap();
        assert!(CostModel::new(1.0, 1.0, res, 20).is_err());
    }

    #[test]
    fn interval_domain_errors() {
        let m = CostModel::example(10, 1.0).unwrap();
        assert!(matches!(m.mean_cost_rate(0.0), Err(Error::InvalidInterval { .. })));
        assert!(matches!(m.mean_cost_rate(-1.0), Err(Error::InvalidInterval { .. })));
        assert!(matches!(m.phi(0.0), Err(Error::InvalidInterval { .. })));
    }
}
