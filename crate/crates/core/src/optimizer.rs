//! Optimal detection interval: root finding on φ, sweep tables, and the
//! asymptotic scaling law.
//!
//! `φ(T) = T²C′(T)` is nondecreasing with `φ(0⁺) = −C_D < 0`. When
//! `φ(t_max) > 0` the unique sign change is bracketed and bisected; bisection
//! on a monotone function is unconditionally convergent, which is why it is
//! preferred over Newton steps here. When `φ(t_max) ≤ 0` the cost is still
//! decreasing at `t_max` and the model has no interior optimum — a
//! first-class outcome for small `λ·n`, not an error.
//!
//! For the best-known message complexities (detection `Θ(n²)`, resolution
//! `Θ(n³)`), the optimal interval shrinks like `(λn)^{−1/3}`;
//! [`fit_asymptotic_slope`] checks that law empirically on a family of
//! models with a linear size profile.

use serde::{Deserialize, Serialize};

use crate::cost_model::{ComplexityPreset, CostModel, DeadlockSizeModel, ResolutionCostModel};
use crate::error::{Error, Result};

/// Default relative tolerance on the bisection bracket width.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Default search ceiling for the optimal interval, far beyond any
/// physically meaningful detection interval.
pub const DEFAULT_T_MAX: f64 = 1e6;

/// Outcome of the optimal-interval search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OptimizeResult {
    /// φ changed sign inside `(0, t_max]`; the cost has a unique interior
    /// minimum at `t_star`.
    Interior {
        t_star: f64,
        cost_at_optimum: f64,
        /// Final bisection bracket with `φ(lo) ≤ 0 ≤ φ(hi)`.
        bracket: (f64, f64),
        /// Number of φ evaluations spent bracketing and bisecting.
        iterations: u32,
        /// `|φ(t_star)| / C_D`.
        residual: f64,
    },
    /// The cost rate is still decreasing at `t_max`: detection should run as
    /// rarely as the search window allows. Genuine for small `λ·n`.
    NoInteriorOptimum { t_max: f64, phi_at_t_max: f64 },
}

impl OptimizeResult {
    pub fn is_interior(&self) -> bool {
        matches!(self, Self::Interior { .. })
    }

    pub fn t_star(&self) -> Option<f64> {
        match self {
            Self::Interior { t_star, .. } => Some(*t_star),
            Self::NoInteriorOptimum { .. } => None,
        }
    }

    pub fn cost_at_optimum(&self) -> Option<f64> {
        match self {
            Self::Interior {
                cost_at_optimum, ..
            } => Some(*cost_at_optimum),
            Self::NoInteriorOptimum { .. } => None,
        }
    }
}

/// Scale-law estimate `(λn)^{−1/3}` of the optimal interval.
///
/// Order-of-magnitude only: the constant factor depends on the resolution
/// model and is not part of the law.
pub fn asymptotic_interval(n: u64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidModel {
            reason: "process count n must be at least 1".into(),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidModel {
            reason: format!("formation rate must be positive, got {lambda}"),
        });
    }
    Ok(1.0 / (lambda * n as f64).cbrt())
}

/// Find the unique optimal detection interval by bisection on φ.
///
/// The bracket is seeded at the asymptotic guess `(λn)^{−1/3}` and expanded
/// geometrically (×4) until it straddles the sign change, then bisected to
/// relative width `rel_tol`.
pub fn solve_optimal_interval(
    model: &CostModel,
    t_max: f64,
    rel_tol: f64,
) -> Result<OptimizeResult> {
    model.validate()?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidInterval { t: t_max });
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::InvalidTolerance {
            value: rel_tol,
            max: 1e-2,
        });
    }

    let mut iterations = 0u32;
    let mut phi = |t: f64| -> Result<f64> {
        iterations += 1;
        model.phi(t)
    };

    let phi_at_t_max = phi(t_max)?;
    if phi_at_t_max <= 0.0 {
        return Ok(OptimizeResult::NoInteriorOptimum {
            t_max,
            phi_at_t_max,
        });
    }

    // λ > 0 here: λ = 0 forces φ ≡ −C_D ≤ 0 and returns above.
    let seed = asymptotic_interval(model.n, model.lambda)?.min(t_max);
    let (mut lo, mut hi);
    let phi_seed = phi(seed)?;
    if phi_seed == 0.0 {
        lo = seed;
        hi = seed;
    } else if phi_seed < 0.0 {
        lo = seed;
        hi = (seed * 4.0).min(t_max);
        while phi(hi)? < 0.0 {
            lo = hi;
            if hi >= t_max {
                // unreachable given φ(t_max) > 0, but keeps the loop total
                break;
            }
            hi = (hi * 4.0).min(t_max);
        }
    } else {
        hi = seed;
        lo = seed / 4.0;
        while phi(lo)? > 0.0 {
            hi = lo;
            lo /= 4.0;
            if lo == 0.0 {
                break;
            }
        }
    }

    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at f64 resolution
        }
        if phi(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let t_star = 0.5 * (lo + hi);
    let cost_at_optimum = model.mean_cost_rate(t_star)?;
    let residual = model.phi(t_star)?.abs() / model.detection_cost;
    Ok(OptimizeResult::Interior {
        t_star,
        cost_at_optimum,
        bracket: (lo, hi),
        iterations,
        residual,
    })
}

/// One sweep row: the model's headline parameters plus its solver outcome.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: u64,
    pub lambda: f64,
    pub result: Result<OptimizeResult>,
}

/// Solve each model independently, preserving input order. Failures are
/// recorded per row; the sweep always completes.
pub fn sweep_table(models: &[CostModel], t_max: f64, rel_tol: f64) -> Vec<SweepRow> {
    models
        .iter()
        .map(|m| SweepRow {
            n: m.n,
            lambda: m.lambda,
            result: solve_optimal_interval(m, t_max, rel_tol),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Asymptotic scaling fit
// ---------------------------------------------------------------------------

/// Family of cost models with a polynomial size profile, scaled across
/// process counts for the asymptotic fit.
///
/// The per-process profile `p(t) = Σ coeffs[i−1]·tⁱ` gives the blocked
/// *fraction* after persistence time `t`, so a system of `n` processes uses
/// the size model `n_D(t) = min(n, n·p(t))`: a bounded size model's initial
/// growth rate scales with the system size, which is what makes the eventual
/// resolution cost `Θ(n³)` and the scaling law kick in. Detection cost is
/// the worst-case `2n²` and resolution is `c·n·n_D(t)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSizeFamily {
    /// Blocked-fraction Maclaurin coefficients; `coeffs[0] > 0`.
    pub coeffs: Vec<f64>,
    /// Resolution scale constant.
    pub c: f64,
}

impl PolynomialSizeFamily {
    pub fn linear(c1: f64, c: f64) -> Self {
        Self {
            coeffs: vec![c1],
            c,
        }
    }

    /// Instantiate the family member with `n` processes.
    pub fn model_for(&self, n: u64, lambda: f64) -> Result<CostModel> {
        let nf = n as f64;
        let scaled: Vec<f64> = self.coeffs.iter().map(|ci| ci * nf).collect();
        let size = DeadlockSizeModel::polynomial(n, scaled)?;
        let resolution =
            ResolutionCostModel::from_size(size, ComplexityPreset::WorstCase, self.c)?;
        CostModel::new(
            ComplexityPreset::WorstCase.detection_messages(n),
            lambda,
            resolution,
            n,
        )
    }

    /// Closed-form optimal interval for the linear profile `p(t) = c₁t`.
    ///
    /// With `C_R(t) = c·n·(c₁·n·t)² = c·c₁²·n³·t²`, the sign carrier is
    /// `φ(T) = −2n² + (2/3)·λ·c·c₁²·n³·T³`, whose root is
    /// `T* = (3/(λ·c·c₁²·n))^{1/3}` — the independent oracle for the fit.
    pub fn linear_profile_t_star(&self, n: u64, lambda: f64) -> f64 {
        let c1 = self.coeffs[0];
        (3.0 / (lambda * self.c * c1 * c1 * n as f64)).cbrt()
    }
}

/// Least-squares fit of `log T*` against `log(λn)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `(ln(λn), ln T*)` pairs, sorted by `λn`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute fit residual in log space.
    pub max_residual: f64,
}

/// Minimum number of n-values for a slope fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Minimum decades the n-values must span.
pub const MIN_FIT_DECADES: f64 = 3.0;

/// Solve `T*` across `n_values` and fit the log-log scaling exponent.
///
/// Errors if any row lacks an interior optimum or solves to `T* ≥ 1`; the
/// geometric-series reduction behind the scaling law needs small intervals,
/// so such rows mean the asymptotic regime has not been reached and the
/// caller must enlarge `n`.
pub fn fit_asymptotic_slope(
    family: &PolynomialSizeFamily,
    n_values: &[u64],
    lambda: f64,
    t_max: f64,
    rel_tol: f64,
) -> Result<SlopeFit> {
    if n_values.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            min: MIN_FIT_POINTS,
            got: n_values.len(),
        });
    }
    let mut sorted: Vec<u64> = n_values.to_vec();
    sorted.sort_unstable();
    let (min_n, max_n) = (sorted[0], sorted[sorted.len() - 1]);
    let decades = (max_n as f64 / min_n as f64).log10();
    if decades < MIN_FIT_DECADES {
        return Err(Error::InsufficientSpan {
            min_decades: MIN_FIT_DECADES,
            got_decades: decades,
        });
    }

    let mut points = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        let model = family.model_for(n, lambda)?;
        match solve_optimal_interval(&model, t_max, rel_tol)? {
            OptimizeResult::Interior { t_star, .. } => {
                if t_star >= 1.0 {
                    return Err(Error::OutsideAsymptoticRegime { n, t_star });
                }
                points.push(((lambda * n as f64).ln(), t_star.ln()));
            }
            OptimizeResult::NoInteriorOptimum { .. } => {
                return Err(Error::NoInteriorOptimumInFit { n });
            }
        }
    }

    let (slope, intercept) = least_squares(&points);
    let max_residual = points
        .iter()
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(SlopeFit {
        points,
        slope,
        intercept,
        max_residual,
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::IntervalDistribution;

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs()
    }

    /// Reference optima for the example model, 15 significant digits,
    /// obtained from the first-order condition λn(1 − (1+T)e^{−T}) = 1.
    pub(crate) const REFERENCE_OPTIMA: [(u64, f64, f64); 10] = [
        (50, 1.0, 0.214699095007934),
        (100, 1.0, 0.148554740253266),
        (200, 1.0, 0.103494546748091),
        (500, 1.0, 0.064618857433116),
        (1000, 1.0, 0.0454020177694896),
        (50, 1.0 / 30.0, 2.02231324532466),
        (100, 1.0 / 30.0, 1.09734921070349),
        (200, 1.0 / 30.0, 0.68323861307094),
        (500, 1.0 / 30.0, 0.394186481498825),
        (1000, 1.0 / 30.0, 0.267526836617665),
    ];

    #[test]
    fn solves_reference_model_n50() {
        let m = CostModel::example(50, 1.0).unwrap();
        let r = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        let t = r.t_star().unwrap();
        assert!(rel_err(t, 0.214699095007934) < 1e-8, "got {t}");
    }

    #[test]
    fn solves_reference_model_n1000_slow_rate() {
        let m = CostModel::example(1000, 1.0 / 30.0).unwrap();
        let r = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        let t = r.t_star().unwrap();
        assert!(rel_err(t, 0.267526836617665) < 1e-8, "got {t}");
    }

    #[test]
    fn all_reference_optima_satisfy_first_order_condition() {
        for &(n, lambda, _) in &REFERENCE_OPTIMA {
            let m = CostModel::example(n, lambda).unwrap();
            let r = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
            let t = r.t_star().unwrap();
            let foc = lambda * n as f64 * (1.0 - (1.0 + t) * (-t).exp());
            assert!(
                (foc - 1.0).abs() < 1e-8,
                "n={n} lambda={lambda}: condition value {foc}"
            );
        }
    }

    #[test]
    fn small_lambda_n_has_no_interior_optimum() {
        // λn = 0.5 < 1: φ(∞) = n²(λn − 1) < 0 for the example family.
        let m = CostModel::example(50, 0.01).unwrap();
        let r = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        assert!(!r.is_interior(), "got {r:?}");
    }

    #[test]
    fn zero_rate_has_no_interior_optimum() {
        let m = CostModel::example(50, 0.0).unwrap();
        let r = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        assert!(!r.is_interior());
    }

    #[test]
    fn interior_result_brackets_the_root() {
        let m = CostModel::example(200, 1.0).unwrap();
        match solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap() {
            OptimizeResult::Interior {
                t_star,
                bracket: (lo, hi),
                residual,
                ..
            } => {
                assert!(m.phi(lo).unwrap() <= 0.0);
                assert!(m.phi(hi).unwrap() >= 0.0);
                assert!(hi - lo <= DEFAULT_REL_TOL * hi);
                assert!(lo <= t_star && t_star <= hi);
                assert!(residual <= 1e-8, "residual {residual}");
            }
            other => panic!("expected interior optimum, got {other:?}"),
        }
    }

    #[test]
    fn optimality_certificate_on_log_grid() {
        let m = CostModel::example(100, 1.0).unwrap();
        let r = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        let t_star = r.t_star().unwrap();
        let c_star = r.cost_at_optimum().unwrap();
        for i in 0..1000 {
            let t = (t_star / 100.0) * 1e4f64.powf(i as f64 / 999.0);
            let c = m.mean_cost_rate(t).unwrap();
            assert!(
                c_star <= c * (1.0 + 1e-9),
                "C(t*) = {c_star} beaten at T = {t}: {c}"
            );
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let m = CostModel::example(500, 1.0 / 30.0).unwrap();
        let a = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        let b = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let m = CostModel::example(50, 1.0).unwrap();
        assert!(solve_optimal_interval(&m, DEFAULT_T_MAX, 0.0).is_err());
        assert!(solve_optimal_interval(&m, DEFAULT_T_MAX, 0.5).is_err());
        assert!(solve_optimal_interval(&m, 0.0, DEFAULT_REL_TOL).is_err());
    }

    #[test]
    fn asymptotic_interval_cube_roots() {
        assert!(rel_err(asymptotic_interval(1000, 1.0).unwrap(), 0.1) < 1e-15);
        assert!(rel_err(asymptotic_interval(1, 1.0).unwrap(), 1.0) < 1e-15);
        assert!(rel_err(asymptotic_interval(8000, 1.0).unwrap(), 0.05) < 1e-15);
        assert!(asymptotic_interval(0, 1.0).is_err());
        assert!(asymptotic_interval(10, 0.0).is_err());
        assert!(asymptotic_interval(10, -1.0).is_err());
    }

    #[test]
    fn sweep_preserves_order_and_records_sentinels() {
        let models = vec![
            CostModel::example(50, 1.0).unwrap(),
            CostModel::example(50, 0.0).unwrap(),
            CostModel::example(1000, 1.0).unwrap(),
        ];
        let rows = sweep_table(&models, DEFAULT_T_MAX, DEFAULT_REL_TOL);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].n, 50);
        assert!(rows[0].result.as_ref().unwrap().is_interior());
        assert!(!rows[1].result.as_ref().unwrap().is_interior());
        assert!(rows[2].result.as_ref().unwrap().is_interior());
    }

    #[test]
    fn optimal_interval_decreases_with_n() {
        for lambda in [1.0, 1.0 / 30.0] {
            let mut prev = f64::INFINITY;
            for n in [50u64, 100, 200, 500, 1000] {
                let m = CostModel::example(n, lambda).unwrap();
                let t = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL)
                    .unwrap()
                    .t_star()
                    .unwrap();
                assert!(t < prev, "t* must decrease with n (lambda = {lambda})");
                prev = t;
            }
        }
    }

    // -- asymptotic fit --------------------------------------------------------

    #[test]
    fn linear_family_slope_is_minus_one_third() {
        let family = PolynomialSizeFamily::linear(1.0, 1.0);
        let fit = fit_asymptotic_slope(
            &family,
            &[10_000, 100_000, 1_000_000, 10_000_000, 100_000_000],
            1.0,
            DEFAULT_T_MAX,
            DEFAULT_REL_TOL,
        )
        .unwrap();
        assert!(
            (fit.slope + 1.0 / 3.0).abs() < 0.03,
            "slope {} not within 0.03 of -1/3",
            fit.slope
        );
        assert!(fit.max_residual < 1e-6);
    }

    #[test]
    fn linear_family_matches_closed_form_pointwise() {
        let family = PolynomialSizeFamily::linear(0.5, 2.0);
        for &n in &[10_000u64, 1_000_000, 100_000_000] {
            let model = family.model_for(n, 1.0).unwrap();
            let solved = solve_optimal_interval(&model, DEFAULT_T_MAX, DEFAULT_REL_TOL)
                .unwrap()
                .t_star()
                .unwrap();
            let closed = family.linear_profile_t_star(n, 1.0);
            assert!(
                rel_err(solved, closed) < 1e-6,
                "n = {n}: solved {solved} vs closed {closed}"
            );
        }
    }

    #[test]
    fn lambda_rescaling_scales_t_star_by_cube_root() {
        let family = PolynomialSizeFamily::linear(1.0, 1.0);
        let ns = [10_000u64, 100_000, 1_000_000, 10_000_000];
        for &n in &ns {
            let base = solve_optimal_interval(
                &family.model_for(n, 1.0).unwrap(),
                DEFAULT_T_MAX,
                DEFAULT_REL_TOL,
            )
            .unwrap()
            .t_star()
            .unwrap();
            let scaled = solve_optimal_interval(
                &family.model_for(n, 8.0).unwrap(),
                DEFAULT_T_MAX,
                DEFAULT_REL_TOL,
            )
            .unwrap()
            .t_star()
            .unwrap();
            assert!(
                rel_err(scaled, base / 2.0) < 1e-7,
                "n = {n}: x8 rate should halve t*, got {base} -> {scaled}"
            );
        }
    }

    #[test]
    fn fit_rejects_too_few_points() {
        let family = PolynomialSizeFamily::linear(1.0, 1.0);
        let err = fit_asymptotic_slope(
            &family,
            &[10_000, 100_000, 1_000_000],
            1.0,
            DEFAULT_T_MAX,
            DEFAULT_REL_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { .. }));
    }

    #[test]
    fn fit_rejects_narrow_span() {
        let family = PolynomialSizeFamily::linear(1.0, 1.0);
        let err = fit_asymptotic_slope(
            &family,
            &[10_000, 20_000, 40_000, 80_000],
            1.0,
            DEFAULT_T_MAX,
            DEFAULT_REL_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InsufficientSpan { .. }));
    }

    #[test]
    fn fit_reports_out_of_regime_rows() {
        // Tiny rate pushes T* past 1 s even at the largest n here.
        let family = PolynomialSizeFamily::linear(1.0, 1.0);
        let err = fit_asymptotic_slope(
            &family,
            &[4, 40, 400, 4000],
            1e-6,
            DEFAULT_T_MAX,
            DEFAULT_REL_TOL,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::OutsideAsymptoticRegime { .. } | Error::NoInteriorOptimumInFit { .. }
            ),
            "got {err:?}"
        );
    }

    #[test]
    fn first_order_condition_is_independent_of_random_cost_path() {
        // Spot check that the solved optimum is genuinely the cheapest fixed
        // policy: any matched-mean random schedule costs at least as much.
        let m = CostModel::example(100, 1.0).unwrap();
        let t = solve_optimal_interval(&m, DEFAULT_T_MAX, DEFAULT_REL_TOL)
            .unwrap()
            .t_star()
            .unwrap();
        let fixed = m.mean_cost_rate(t).unwrap();
        let random = m
            .random_schedule_cost(&IntervalDistribution::Exponential { mean: t })
            .unwrap();
        assert!(random >= fixed * (1.0 - 1e-9));
    }
}
