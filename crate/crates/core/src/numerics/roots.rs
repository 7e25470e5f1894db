//! Bracketed root finding and one-dimensional minimization.

use crate::error::{Error, Result};

/// Solves `f(x) = target` for a nondecreasing `f` on `[lo, +inf)`.
///
/// The bracket `[lo, hi]` is grown geometrically from `hi0`, then refined by
/// Newton steps (when `df` is given) that fall back to bisection whenever they
/// leave the bracket.
pub fn solve_increasing(
    f: impl Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    target: f64,
    lo: f64,
    hi0: f64,
    tol: f64,
) -> Result<f64> {
    let mut lo = lo;
    let mut hi = hi0.max(lo + 1e-300);
    let mut f_hi = f(hi);
    let mut expansions = 0;
    while !(f_hi >= target) {
        if !f_hi.is_finite() || expansions > 2000 {
            return Err(Error::OutOfRange { value: target, sup: f_hi });
        }
        lo = hi;
        hi = if hi > 0.0 { hi * 2.0 } else { 1.0 };
        f_hi = f(hi);
        expansions += 1;
    }
    if f(lo) >= target {
        return Ok(lo);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fx = f(x) - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol * hi.abs().max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = df.map(|d| x - fx / d(x)).filter(|n| n.is_finite() && *n > lo && *n < hi);
        let next = newton.unwrap_or(0.5 * (lo + hi));
        if (next - x).abs() <= 0.25 * tol * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (c.abs() + d.abs()).max(1e-300) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
