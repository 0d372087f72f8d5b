//! The two bounding functionals for μ* and the discriminant verdict.
//!
//! For a zero-average `γ̂` let `μ*` be the saddle-node parameter of
//! `x' = x² + γ̂ + μ`. Then for any `p` and any zero-average `q`
//!
//! ```text
//! mu_lower(γ̂, p) ≤ μ* ≤ mu_upper(γ̂, q) ≤ 0
//! ```
//!
//! and the discriminant `Δ = μ* − mean(γ)` decides the number of periodic
//! solutions of `x' = x² + γ`.

use std::fmt;

use crate::error::{Error, Result};
use crate::periodic::{center, PeriodicFn, TrigPoly, DEFAULT_SAMPLES, QUAD_REL_TOL};
use crate::search::periodic_max;

/// Samples of the initial scan in [`mu_lower`].
pub const MAX_GRID: usize = 4096;
/// Default t-tolerance of the golden refinement in [`mu_lower`].
pub const REFINE_TOL: f64 = 1e-10;
/// Default classification threshold around `Δ = 0`.
pub const DEFAULT_TAU: f64 = 1e-7;
/// Allowed numerical slack on `lo ≤ hi`.
pub const ORDER_SLACK: f64 = 1e-9;
/// `q` passed to [`mu_upper`] must have `|mean| ≤` this.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    /// Fails if either end is non-finite or `lo > hi + 1e-9`.
    pub fn new(lo: f64, hi: f64) -> Result<Bracket> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi + ORDER_SLACK {
            return Err(Error::BracketOrder { lo, hi });
        }
        Ok(Bracket { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lo - slack <= x && x <= self.hi + slack
    }

    pub fn shifted(&self, s: f64) -> Bracket {
        Bracket {
            lo: self.lo + s,
            hi: self.hi + s,
        }
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Number and nature of the periodic solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    TwoHyperbolic,
    OneDouble,
    NoCycles,
    /// Only possible for general equations whose quadratic coefficient
    /// vanishes somewhere; never produced for the canonical form.
    OneHyperbolic,
    Undetermined,
}

impl Classification {
    pub fn is_determinate(self) -> bool {
        self != Classification::Undetermined
    }

    /// Verdict from a bracket on `Δ`.
    pub fn from_delta(delta: &Bracket, tau: f64) -> Classification {
        if delta.lo > tau {
            Classification::TwoHyperbolic
        } else if delta.hi < -tau {
            Classification::NoCycles
        } else if delta.lo.abs() <= tau && delta.hi.abs() <= tau {
            Classification::OneDouble
        } else {
            Classification::Undetermined
        }
    }

    pub fn cycle_count(self) -> Option<usize> {
        match self {
            Classification::TwoHyperbolic => Some(2),
            Classification::OneDouble | Classification::OneHyperbolic => Some(1),
            Classification::NoCycles => Some(0),
            Classification::Undetermined => None,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::TwoHyperbolic => "TwoHyperbolic",
            Classification::OneDouble => "OneDouble",
            Classification::NoCycles => "NoCycles",
            Classification::OneHyperbolic => "OneHyperbolic",
            Classification::Undetermined => "Undetermined",
        })
    }
}

/// `−max_t {p² + γ̂ − p'}` located on a 4096-point grid and refined to
/// `refine_tol` in `t`. `p` need not have zero average.
pub fn mu_lower(gamma_hat: &PeriodicFn, p: &TrigPoly, refine_tol: f64) -> Result<f64> {
    let dp = p.derivative();
    let (_, max) = periodic_max(
        |t| {
            let v = p.eval(t);
            Ok(v * v + gamma_hat.eval(t)? - dp.eval(t))
        },
        gamma_hat.period(),
        MAX_GRID,
        refine_tol,
    )?;
    Ok(-max)
}

fn require_zero_mean(q: &TrigPoly) -> Result<()> {
    if q.mean().abs() > ZERO_MEAN_TOL {
        return Err(Error::NotZeroAverage { mean: q.mean() });
    }
    Ok(())
}

/// Mean of `g` with respect to the weight `exp(−2∫₀ᵗ q)`, by the periodic
/// trapezoid rule with sample doubling. `q` must have zero average so that
/// the weight is periodic.
pub fn weighted_mean<G>(q: &TrigPoly, mut g: G) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    require_zero_mean(q)?;
    let period = q.period();
    let log_w = |t: f64| -2.0 * (q.integral_from_zero(t) - q.mean() * t);

    let n0 = DEFAULT_SAMPLES;
    let h = period / n0 as f64;
    let logs: Vec<f64> = (0..n0).map(|j| log_w(j as f64 * h)).collect();
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let (mut sw, mut swg, mut scale) = (0.0, 0.0, 0.0_f64);
    for (j, lw) in logs.iter().enumerate() {
        let w = (lw - shift).exp();
        let v = g(j as f64 * h)?;
        scale = scale.max(v.abs());
        sw += w;
        swg += w * v;
    }
    let mut n = n0;
    let mut mean = swg / sw;
    while n < (1 << 20) {
        let h = period / n as f64;
        let (mut mw, mut mwg) = (0.0, 0.0);
        for j in 0..n {
            let t = (j as f64 + 0.5) * h;
            let w = (log_w(t) - shift).exp();
            let v = g(t)?;
            scale = scale.max(v.abs());
            mw += w;
            mwg += w * v;
        }
        sw += mw;
        swg += mwg;
        n *= 2;
        let refined = swg / sw;
        let change = (refined - mean).abs();
        mean = refined;
        if change <= QUAD_REL_TOL * refined.abs().max(scale).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(mean)
}

/// Weighted mean of `q² − γ̂` with weight `exp(−2∫₀ᵗ q)`. Requires a
/// zero-average `q`.
pub fn mu_upper(gamma_hat: &PeriodicFn, q: &TrigPoly) -> Result<f64> {
    weighted_mean(q, |t| {
        let v = q.eval(t);
        Ok(v * v - gamma_hat.eval(t)?)
    })
}

/// Bracket on μ*: `mu_lower(γ̂, q)` below, and above the smaller of
/// `mu_upper(γ̂, q)` and `mu_upper(γ̂, 0) = 0`.
pub fn mu_bracket(gamma_hat: &PeriodicFn, q: &TrigPoly) -> Result<Bracket> {
    let hi = mu_upper(gamma_hat, q)?.min(0.0);
    let lo = mu_lower(gamma_hat, q, REFINE_TOL)?;
    Bracket::new(lo, hi)
}

/// Bracket on `Δ = μ* − mean(γ)` with its verdict, using the default `τ`.
pub fn discriminant(gamma: &PeriodicFn, q: &TrigPoly) -> Result<(Bracket, Classification)> {
    discriminant_with_tau(gamma, q, DEFAULT_TAU)
}

pub fn discriminant_with_tau(
    gamma: &PeriodicFn,
    q: &TrigPoly,
    tau: f64,
) -> Result<(Bracket, Classification)> {
    let mean = gamma.mean()?;
    let gamma_hat = center(gamma)?;
    let delta = mu_bracket(&gamma_hat, q)?.shifted(-mean);
    Ok((delta, Classification::from_delta(&delta, tau)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprparse::Params;
    use std::f64::consts::PI;

    const TAU2PI: f64 = 2.0 * PI;

    fn expr(src: &str) -> PeriodicFn {
        PeriodicFn::parse(src, TAU2PI, &Params::new()).unwrap()
    }

    fn zero() -> PeriodicFn {
        PeriodicFn::constant(TAU2PI, 0.0)
    }

    #[test]
    fn trivial_zero_functionals() {
        let z = TrigPoly::zero(TAU2PI);
        assert_eq!(mu_lower(&zero(), &z, REFINE_TOL).unwrap(), 0.0);
        assert_eq!(mu_upper(&zero(), &z).unwrap(), 0.0);
        let b = mu_bracket(&zero(), &z).unwrap();
        assert_eq!((b.lo, b.hi), (0.0, 0.0));
    }

    #[test]
    fn sine_first_candidate() {
        let g = expr("sin(t)");
        let p = TrigPoly::cos_mode(TAU2PI, 1, -1.0);
        assert!((mu_lower(&g, &p, REFINE_TOL).unwrap() + 1.0).abs() < 1e-12);
        assert!((mu_upper(&g, &p).unwrap() + 0.3489).abs() < 5e-5);
    }

    #[test]
    fn rational_first_candidate() {
        let g = center(&expr("(45*cos(t)^2-29)/(3*cos(t)-5)^2")).unwrap();
        let p = TrigPoly::sin_mode(TAU2PI, 1, 2.0 / 3.0);
        assert!((mu_lower(&g, &p, REFINE_TOL).unwrap() + 3.333).abs() < 5e-4);
        assert!((mu_upper(&g, &p).unwrap() + 0.4897).abs() < 5e-5);
    }

    #[test]
    fn cosines_exact_solution_closes_bracket() {
        let g = expr("-1 + cos(t) + cos(2*t)/2");
        let q = TrigPoly::sin_mode(TAU2PI, 1, 1.0);
        let b = mu_bracket(&center(&g).unwrap(), &q).unwrap();
        assert!(
            (b.lo + 0.5).abs() < 1e-9 && (b.hi + 0.5).abs() < 1e-9,
            "{b}"
        );
        let (d, c) = discriminant(&g, &q).unwrap();
        assert!((d.lo - 0.5).abs() < 1e-9 && (d.hi - 0.5).abs() < 1e-9);
        assert_eq!(c, Classification::TwoHyperbolic);
    }

    #[test]
    fn constant_gamma_verdicts() {
        let z = TrigPoly::zero(TAU2PI);
        let (d, c) = discriminant(&expr("2"), &z).unwrap();
        assert!((d.lo + 2.0).abs() < 1e-15 && (d.hi + 2.0).abs() < 1e-15);
        assert_eq!(c, Classification::NoCycles);
        let (_, c) = discriminant(&zero(), &z).unwrap();
        assert_eq!(c, Classification::OneDouble);
    }

    #[test]
    fn mu_upper_rejects_nonzero_mean() {
        let q = TrigPoly::constant(TAU2PI, 0.1);
        assert!(matches!(
            mu_upper(&zero(), &q),
            Err(Error::NotZeroAverage { .. })
        ));
        // mu_lower accepts any p
        assert!((mu_lower(&zero(), &q, REFINE_TOL).unwrap() + 0.01).abs() < 1e-15);
    }

    #[test]
    fn classification_thresholds() {
        let c = |lo, hi| Classification::from_delta(&Bracket { lo, hi }, DEFAULT_TAU);
        assert_eq!(c(1e-6, 1.0), Classification::TwoHyperbolic);
        assert_eq!(c(-1.0, -1e-6), Classification::NoCycles);
        assert_eq!(c(-1e-8, 1e-8), Classification::OneDouble);
        assert_eq!(c(-0.1, 0.1), Classification::Undetermined);
    }
}
