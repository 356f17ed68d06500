//! Deterministic numeric primitives: adaptive Simpson quadrature and
//! bisection on monotone functions.
//!
//! The quadrature is adaptive Simpson with interval bisection and Richardson
//! extrapolation. The tolerance is relative to the first whole-interval
//! estimate and the per-interval budget halves on each split, so the result
//! is a pure function of the integrand and the arguments.

use crate::error::{Error, Result};

/// Maximum subdivision depth for adaptive Simpson, counted from the full
/// integration interval.
pub const MAX_QUAD_DEPTH: u32 = 60;

/// Uniform panels evaluated up front to estimate the integral's scale.
/// A single 3-point stencil can miss integrands whose mass concentrates in a
/// small part of the span, which would starve the error budget.
const PREPASS_PANELS: u32 = 64;

/// Simpson's rule on `[a, b]` given endpoint and midpoint values.
#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrate `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// Fails with [`Error::QuadratureNonConvergence`] if any subinterval still
/// misses its error budget at depth [`MAX_QUAD_DEPTH`].
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let k = PREPASS_PANELS;
    let h = (b - a) / k as f64;
    let mut edges = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        let x = if i == k { b } else { a + h * i as f64 };
        edges.push((x, f(x)));
    }
    // Scale from the absolute panel sums, so cancellation between panels
    // cannot shrink the budget.
    let mut panels = Vec::with_capacity(k as usize);
    let mut scale = 0.0;
    for w in edges.windows(2) {
        let ((pa, fa), (pb, fb)) = (w[0], w[1]);
        let m = 0.5 * (pa + pb);
        let fm = f(m);
        let s = simpson(pa, pb, fa, fm, fb);
        scale += s.abs();
        panels.push((pa, m, pb, fa, fm, fb, s));
    }
    let eps = (rel_tol * scale).max(f64::MIN_POSITIVE) / k as f64;
    let depth = MAX_QUAD_DEPTH - PREPASS_PANELS.ilog2();
    let mut total = 0.0;
    for (pa, m, pb, fa, fm, fb, s) in panels {
        total += adaptive(f, pa, m, pb, fa, fm, fb, s, eps, depth)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Second disjunct: delta is at the f64 rounding floor of the local sums,
    // so further splitting can only chase noise.
    if delta.abs() <= 15.0 * eps
        || delta.abs() <= 4.0 * f64::EPSILON * (left.abs() + right.abs())
        || (b - a) <= f64::EPSILON * (a.abs() + b.abs())
    {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence {
            a,
            b,
            max_depth: MAX_QUAD_DEPTH,
            residual: delta.abs(),
            target: 15.0 * eps,
        });
    }
    let half_eps = 0.5 * eps;
    let l = adaptive(f, a, lm, m, fa, flm, fm, left, half_eps, depth - 1)?;
    let r = adaptive(f, m, rm, b, fm, frm, fb, right, half_eps, depth - 1)?;
    Ok(l + r)
}

/// Root of a nondecreasing function on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`,
/// bisected until the bracket's relative width drops below `rel_tol`.
///
/// Returns the bracket midpoint. Callers are responsible for supplying a
/// valid bracket; the function only moves endpoints, so the sign invariant
/// is preserved throughout.
pub fn bisect_monotone<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    debug_assert!(lo <= hi);
    for _ in 0..200 {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at f64 resolution
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
