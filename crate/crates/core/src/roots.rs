//! Bracketing scalar root finding.
//!
//! Bisection to a relative abscissa tolerance, followed by a safeguarded
//! Newton polish that never leaves the final bracket.

use crate::error::{Error, Result};

pub const FTOL: f64 = 1e-12;
pub const XTOL: f64 = 1e-12;
pub const MAX_ITER: usize = 200;

/// Sign of `y`, with zero mapped to zero.
pub fn sign(y: f64) -> i8 {
    if y > 0.0 {
        1
    } else if y < 0.0 {
        -1
    } else {
        0
    }
}

/// Bisection on `[lo, hi]`. The endpoint values must have opposite signs
/// (or one of them must vanish).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !flo.is_finite() || !fhi.is_finite() || sign(flo) == sign(fhi) {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo:e}, {hi:e}] (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if sign(fm) == sign(flo) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo) <= XTOL * hi.abs().max(lo.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton polish of an approximate root `x` inside `[lo, hi]`. Steps that
/// leave the bracket or fail to reduce `|f|` are rejected.
pub fn newton_polish<F, D>(f: F, df: D, mut x: f64, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
    let mut fx = f(x);
    for _ in 0..20 {
        if fx.abs() <= FTOL * 1e-3 {
            break;
        }
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let fnext = f(next);
        if !(fnext.abs() < fx.abs()) {
            break;
        }
        x = next;
        fx = fnext;
    }
    x
}

/// Bisection followed by a Newton polish.
pub fn bracketed_root<F, D>(f: F, df: D, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let x = bisect(&f, lo, hi)?;
    Ok(newton_polish(&f, &df, x, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0), Err(Error::NoRoot(_))));
    }

    #[test]
    fn polish_reaches_machine_precision() {
        let r = bracketed_root(|x| x.powi(3) - x - 1.0, |x| 3.0 * x * x - 1.0, 1.0, 2.0).unwrap();
        assert!((r.powi(3) - r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_root_is_returned() {
        assert_eq!(bisect(|x| x - 1.0, 1.0, 3.0).unwrap(), 1.0);
    }
}
