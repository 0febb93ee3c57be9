//! Bracketed scalar root finding.
//!
//! Brent's method (inverse quadratic interpolation with secant and bisection
//! fallbacks) in the formulation used by most numerical libraries, plus a
//! helper that grows a bracket for monotone functions on a half-line.

use crate::{Error, Result};

/// Stopping criteria: the bracket is shrunk until its half-width is below
/// `xtol + rtol * |x|`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub xtol: f64,
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            xtol: 1e-14,
            rtol: 4.0 * f64::EPSILON,
            max_iter: 200,
        }
    }
}

/// Finds a root of `f` in `[a, b]`. `f(a)` and `f(b)` must not share a sign.
pub fn brent<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut xpre, mut xcur) = (a, b);
    let (mut fpre, mut fcur) = (f(xpre), f(xcur));
    if fpre.is_nan() || fcur.is_nan() {
        return Err(Error::NotConverged("function is NaN at bracket end".into()));
    }
    if fpre == 0.0 {
        return Ok(xpre);
    }
    if fcur == 0.0 {
        return Ok(xcur);
    }
    if fpre.signum() == fcur.signum() {
        return Err(Error::Precondition(format!(
            "root not bracketed: f({a}) = {fpre}, f({b}) = {fcur}"
        )));
    }

    let (mut xblk, mut fblk) = (0.0, 0.0);
    let (mut spre, mut scur) = (0.0, 0.0);

    for _ in 0..tol.max_iter {
        if fpre != 0.0 && fcur != 0.0 && fpre.signum() != fcur.signum() {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }

        let delta = 0.5 * (tol.xtol + tol.rtol * xcur.abs());
        let sbis = 0.5 * (xblk - xcur);
        if fcur == 0.0 || sbis.abs() < delta {
            return Ok(xcur);
        }

        if spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            if 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                scur = stry;
            } else {
                spre = sbis;
                scur = sbis;
            }
        } else {
            spre = sbis;
            scur = sbis;
        }

        xpre = xcur;
        fpre = fcur;
        if scur.abs() > delta {
            xcur += scur;
        } else {
            xcur += if sbis > 0.0 { delta } else { -delta };
        }
        fcur = f(xcur);
        if fcur.is_nan() {
            return Err(Error::NotConverged(format!("function is NaN at {xcur}")));
        }
    }
    Err(Error::NotConverged(format!(
        "brent exceeded {} iterations",
        tol.max_iter
    )))
}

/// Grows `start, 2*start, 4*start, ...` (in the direction of `sign`) until
/// `pred` holds, returning the first point where it does.
pub fn expand_until<P>(mut pred: P, start: f64, sign: f64, limit: f64) -> Result<f64>
where
    P: FnMut(f64) -> bool,
{
    let mut x = start.abs().max(f64::MIN_POSITIVE);
    while x <= limit {
        if pred(sign * x) {
            return Ok(sign * x);
        }
        x *= 2.0;
    }
    Err(Error::NotConverged(format!(
        "no bracket found up to |x| = {limit}"
    )))
}

/// Plain bisection on a predicate that is true on `[lo, t*]` and false on
/// `(t*, hi]`. Returns the last point known to satisfy the predicate.
pub fn bisect_predicate<P>(mut inside: P, mut lo: f64, mut hi: f64, xtol: f64) -> f64
where
    P: FnMut(f64) -> bool,
{
    for _ in 0..200 {
        if hi - lo <= xtol * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
