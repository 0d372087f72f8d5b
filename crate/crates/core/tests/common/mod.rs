#![allow(dead_code)]

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;
use riccati_disc::exprparse::Params;
use riccati_disc::family::AffineFamily;
use riccati_disc::{PeriodicFn, TrigPoly};

pub const T: f64 = 2.0 * PI;

pub const COSINES: &str = "-1 + cos(t) + cos(2*t)/2";
pub const RATIONAL: &str = "(45*cos(t)^2 - 29)/(3*cos(t) - 5)^2";
pub const FAMILY_BASE: &str =
    "(sin(t) - 2)*(-cos(t)) - 3*cos(t)^2/(4*(sin(t) - 2)^2) - sin(t)/(2*(sin(t) - 2))";
pub const FAMILY_DIR: &str = "sin(t) - 2";

pub fn expr(src: &str) -> PeriodicFn {
    PeriodicFn::parse(src, T, &Params::new()).unwrap()
}

pub fn with_params(src: &str, params: &[(&str, f64)]) -> PeriodicFn {
    let p: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    PeriodicFn::parse(src, T, &p).unwrap()
}

pub fn sample_family() -> AffineFamily {
    AffineFamily::new(expr(FAMILY_BASE), expr(FAMILY_DIR)).unwrap()
}

/// Left end of the affine family scan interval.
pub fn family_eta_min() -> f64 {
    (3.0 - 2.0 * 3f64.sqrt()) / 24.0
}

pub fn trig(c0: f64, a: &[f64], b: &[f64]) -> TrigPoly {
    TrigPoly::new(T, c0, a.to_vec(), b.to_vec()).unwrap()
}

/// Random trig poly with `c0` and every coefficient uniform in `[-amp, amp]`.
pub fn random_trig<R: Rng>(rng: &mut R, order: usize, amp: f64, zero_mean: bool) -> TrigPoly {
    let mut coeff = || rng.gen_range(-amp..=amp);
    let c0 = if zero_mean { 0.0 } else { coeff() };
    let a: Vec<f64> = (0..order).map(|_| coeff()).collect();
    let b: Vec<f64> = (0..order).map(|_| coeff()).collect();
    trig(c0, &a, &b)
}

/// Proptest strategy for trig polys of order `1..=max_order`.
pub fn trig_strategy(
    max_order: usize,
    amp: f64,
    zero_mean: bool,
) -> impl Strategy<Value = TrigPoly> {
    (1..=max_order).prop_flat_map(move |n| {
        (
            -amp..=amp,
            prop::collection::vec(-amp..=amp, n),
            prop::collection::vec(-amp..=amp, n),
        )
            .prop_map(move |(c0, a, b)| trig(if zero_mean { 0.0 } else { c0 }, &a, &b))
    })
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
