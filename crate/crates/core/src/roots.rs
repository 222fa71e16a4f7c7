//! Root finding for continuous increasing functions on `[0, inf)`.

use crate::error::{Error, Result};

/// Solves `f(x) = target` for an increasing `f` with `f(0) <= target`.
///
/// The upper bracket starts at `hint` and doubles until it covers the target.
/// Secant steps are taken inside the bracket and fall back to bisection when
/// they stall. Stops when the bracket is narrower than `rel_tol * x`.
pub fn solve_increasing<F: Fn(f64) -> f64>(f: F, target: f64, hint: f64, rel_tol: f64) -> Result<f64> {
    if !(target.is_finite()) {
        return Err(Error::Domain(format!("root target must be finite, got {target}")));
    }
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    if f_lo >= target {
        return Ok(0.0);
    }
    let mut hi = if hint > 0.0 && hint.is_finite() { hint } else { 1.0 };
    let mut f_hi = f(hi);
    let mut expansions = 0;
    while f_hi < target {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi);
        expansions += 1;
        if expansions > 2100 || !hi.is_finite() {
            return Err(Error::Domain(format!("could not bracket root for target {target}")));
        }
    }
    while hi > 0.0 && f(0.5 * hi) >= target && lo == 0.0 {
        hi *= 0.5;
        f_hi = f(hi);
        if hi < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
    }
    for iter in 0..400 {
        if hi - lo <= rel_tol * hi.abs() || hi - lo <= f64::MIN_POSITIVE {
            break;
        }
        let width = hi - lo;
        let mut x = if f_hi.is_finite() && f_lo.is_finite() && f_hi > f_lo && iter % 3 != 2 {
            lo + (target - f_lo) * width / (f_hi - f_lo)
        } else {
            0.5 * (lo + hi)
        };
        // Keep the candidate away from the bracket ends so the bracket shrinks.
        let guard = 0.01 * width;
        if !(x > lo + guard && x < hi - guard) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx < target {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
    }
    Ok(0.5 * (lo + hi))
}
