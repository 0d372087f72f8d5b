//! Scalar search helpers shared by the functionals, oracle and family code.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[lo, hi]`, assuming `f` is
/// unimodal there. Returns `(argmax, max)`.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iters = 0;
    while (hi - lo).abs() > tol && iters < 200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
        iters += 1;
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximum of a `period`-periodic function: dense scan of `n` points followed
/// by golden-section refinement around the best sample.
pub fn periodic_max<F>(mut f: F, period: f64, n: usize, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = period / n as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..n {
        let t = j as f64 * h;
        let v = f(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let (t, v) = golden_max(&mut f, best.0 - h, best.0 + h, tol)?;
    Ok(if v >= best.1 {
        (t.rem_euclid(period), v)
    } else {
        best
    })
}

/// Bisection on a sign change of `f` between `lo` and `hi`. `f` returns a
/// sign-carrying value (infinite values are fine). Stops when the interval is
/// narrower than `tol`; returns the midpoint.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let mut iters = 0;
    while (hi - lo).abs() > tol && iters < 200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    Ok(0.5 * (lo + hi))
}
