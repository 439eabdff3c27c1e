//! Bracketed scalar root finding.
//!
//! Every root in the solver is bracketed by a concavity or monotonicity
//! argument, so plain bisection is always safe. A few Newton steps are
//! applied afterwards when an analytic derivative is at hand.

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;

/// Bisection on `[lo, hi]` until the bracket is narrower than
/// `abs_tol + rel_tol·|x|`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    rel_tol: f64,
    context: &str,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket(format!(
            "{context}: f({lo:e}) = {f_lo:e}, f({hi:e}) = {f_hi:e}"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= abs_tol + rel_tol * mid.abs() || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection in `ln x` for positive brackets spanning many decades.
pub fn bisect_geometric<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64, context: &str) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Bracket(format!(
            "{context}: invalid positive bracket [{lo:e}, {hi:e}]"
        )));
    }
    let t = bisect(|t: f64| f(t.exp()), lo.ln(), hi.ln(), 0.25 * rel_tol, 0.0, context)?;
    Ok(t.exp().clamp(lo, hi))
}

/// Newton iterations from `x0` that never leave `[lo, hi]`. Stops when the
/// step falls below `rel_tol·|x|` or the residual stops improving.
pub fn newton_polish<F, D>(f: F, df: D, x0: f64, lo: f64, hi: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0;
    let mut fx = f(x);
    for _ in 0..8 {
        let d = df(x);
        if fx == 0.0 || !d.is_finite() || d == 0.0 {
            break;
        }
        let next = (x - fx / d).clamp(lo, hi);
        let f_next = f(next);
        if !(f_next.abs() < fx.abs()) {
            break;
        }
        let step = (next - x).abs();
        x = next;
        fx = f_next;
        if step <= rel_tol * x.abs() {
            break;
        }
    }
    x
}
