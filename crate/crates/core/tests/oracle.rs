mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccati_disc::harmonic_balance::{hb_sequence, HBOptions};
use riccati_disc::oracle::{
    bifurcation_scan, count_cycles, displacement, integrate, CycleInfo, Displacement, Outcome,
    ScanOptions, Stability, DEFAULT_TOL,
};
use riccati_disc::periodic::center;
use riccati_disc::reduction::{reduce_nonvanishing, GeneralRiccati, DEFAULT_GRID};
use riccati_disc::{Bracket, Classification, PeriodicFn};

fn opts() -> ScanOptions {
    ScanOptions::default()
}

/// Zero-average test and the squared-mean identity for each located cycle.
fn check_cycle(c: &CycleInfo, gamma_mean: f64, mu: f64) {
    assert!(c.residual < 1e-6, "residual {}", c.residual);
    assert!(
        close(c.h, 2.0 * T * c.mean_x, 1e-6 * (1.0 + c.h.abs())),
        "h {} mean {}",
        c.h,
        c.mean_x
    );
    if c.stability != Stability::Semistable {
        assert_eq!(c.h.signum(), c.mean_x.signum());
    }
    assert!(
        close(gamma_mean + mu + c.mean_x2, 0.0, 1e-6),
        "{}",
        gamma_mean + mu + c.mean_x2
    );
}

#[test]
fn closed_form_integrals() {
    let r = integrate(&expr("-1"), 0.0, 0.0, 0.0, 1.0, DEFAULT_TOL).unwrap();
    assert!(close(r.value().unwrap(), -1f64.tanh(), 1e-8));
    let r = integrate(&expr("0"), 0.0, -1.0, 0.0, 1.0, DEFAULT_TOL).unwrap();
    assert!(close(r.value().unwrap(), -0.5, 1e-10));
    match integrate(&expr("1"), 0.0, 0.0, 0.0, 2.0, DEFAULT_TOL)
        .unwrap()
        .outcome
    {
        Outcome::Escape { t_blow, sign } => {
            assert!(t_blow < std::f64::consts::FRAC_PI_2 && t_blow > 1.57);
            assert_eq!(sign, 1.0);
        }
        other => panic!("expected escape, got {other:?}"),
    }
    for t1 in [0.5, 1.0, 1.5] {
        let r = integrate(&expr("1"), 0.0, 0.0, 0.0, t1, DEFAULT_TOL).unwrap();
        let tan = f64::tan(t1);
        assert!(close(r.value().unwrap(), tan, 1e-8 * (1.0 + tan * tan)));
    }
}

#[test]
fn displacement_values() {
    let d = displacement(&expr("-1"), 0.0, -1.0).unwrap();
    assert!(matches!(d, Displacement::Value(v) if v.abs() < 1e-12));
    let d = displacement(&expr("-1"), 0.0, 0.0).unwrap();
    assert!(matches!(d, Displacement::Value(v) if close(v, -(T.tanh()), 1e-8)));
    // the exact solution 6 sin t/(5 − 3 cos t) passes through 0 at μ* = −1
    let d = displacement(&center(&expr(RATIONAL)).unwrap(), -1.0, 0.0).unwrap();
    assert!(matches!(d, Displacement::Value(v) if v.abs() < 1e-8));
}

#[test]
fn constant_fixtures() {
    let (c, cycles) = count_cycles(&expr("-1"), 0.0, &opts()).unwrap();
    assert_eq!(c, Classification::TwoHyperbolic);
    assert!(close(cycles[0].x0, -1.0, 1e-8) && close(cycles[1].x0, 1.0, 1e-8));
    assert!(close(cycles[0].h, -2.0 * T, 1e-6) && close(cycles[1].h, 2.0 * T, 1e-6));
    assert_eq!(cycles[0].stability, Stability::Attractive);
    assert_eq!(cycles[1].stability, Stability::Repulsive);
    for cy in &cycles {
        check_cycle(cy, -1.0, 0.0);
    }

    let (c, cycles) = count_cycles(&expr("0"), 0.0, &opts()).unwrap();
    assert_eq!(c, Classification::OneDouble);
    assert!(cycles[0].x0.abs() < 1e-6 && cycles[0].h.abs() < 1e-4);

    let (c, cycles) = count_cycles(&expr("1"), 0.0, &opts()).unwrap();
    assert_eq!(c, Classification::NoCycles);
    assert!(cycles.is_empty());
    // without the shortcut the scan reaches the same verdict
    let no_pre = ScanOptions {
        precheck: false,
        ..opts()
    };
    assert_eq!(
        count_cycles(&expr("1"), 0.0, &no_pre).unwrap().0,
        Classification::NoCycles
    );
}

#[test]
fn cosines_two_cycles() {
    let g = expr(COSINES);
    let (c, cycles) = count_cycles(&g, 0.0, &opts()).unwrap();
    assert_eq!(c, Classification::TwoHyperbolic);
    assert!(cycles[0].h < 0.0 && cycles[1].h > 0.0);
    for cy in &cycles {
        check_cycle(cy, -1.0, 0.0);
    }
}

#[test]
fn family_at_eta_three() {
    let eq = GeneralRiccati::parse(
        "sin(t)-2",
        "0",
        "eta-cos(t)",
        T,
        &[("eta".to_string(), 3.0)].into(),
    )
    .unwrap();
    let g = reduce_nonvanishing(&eq, DEFAULT_GRID).unwrap().gamma;
    let (c, cycles) = count_cycles(&g, 0.0, &opts()).unwrap();
    assert_eq!(c, Classification::TwoHyperbolic);
    let mean = g.mean().unwrap();
    for cy in &cycles {
        check_cycle(cy, mean, 0.0);
    }
}

#[test]
fn bifurcation_brackets() {
    let cosines = bifurcation_scan(
        &center(&expr(COSINES)).unwrap(),
        &[-0.8, -0.6, -0.4],
        &opts(),
    )
    .unwrap();
    assert!(cosines.mu_star.contains(-0.5, 0.0) && cosines.mu_star.width() <= 1e-6);
    assert!(cosines.monotone);
    assert_eq!(cosines.rows.len(), 3);
    assert_eq!(cosines.rows[0].class, Classification::TwoHyperbolic);
    assert_eq!(cosines.rows[2].class, Classification::NoCycles);

    let ex1 = bifurcation_scan(&center(&expr(RATIONAL)).unwrap(), &[], &opts()).unwrap();
    assert!(ex1.mu_star.contains(-1.0, 0.0) && ex1.mu_star.width() <= 1e-6);

    // the sine case lies just above the rounded −0.3785 and meets the order-6 bracket
    let ex2 = bifurcation_scan(&expr("sin(t)"), &[], &opts()).unwrap();
    assert!(ex2.mu_star.width() <= 1e-6);
    assert!(ex2.mu_star.contains(-0.378489, 1e-6));
    let six = hb_sequence(&expr("sin(t)"), 6, &HBOptions::default());
    let (_, b6) = six[5].outcome.as_ref().unwrap();
    assert!(b6.lo <= ex2.mu_star.lo && ex2.mu_star.lo <= b6.hi);
}

/// Δ bracket from orders 1..=6, intersected.
fn hb_delta(gamma: &PeriodicFn) -> Option<Bracket> {
    let mean = gamma.mean().ok()?;
    let mut out: Option<Bracket> = None;
    for s in hb_sequence(&center(gamma).ok()?, 6, &HBOptions::default()) {
        if let Ok((_, b)) = s.outcome {
            let d = b.shifted(-mean);
            out = Some(match out {
                None => d,
                Some(o) => Bracket {
                    lo: o.lo.max(d.lo),
                    hi: o.hi.min(d.hi),
                },
            });
        }
    }
    out
}

#[test]
fn oracle_agrees_with_the_discriminant_on_random_gammas() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    for order in (1..=4).cycle().take(24) {
        let g = PeriodicFn::from(random_trig(&mut rng, order, 2.0, false));
        let Some(delta) = hb_delta(&g) else { continue };
        let predicted = Classification::from_delta(&delta, 1e-7);
        if !predicted.is_determinate() || predicted == Classification::OneDouble {
            continue;
        }
        let (found, cycles) = count_cycles(&g, 0.0, &opts()).unwrap();
        assert_eq!(found, predicted, "Δ ∈ {delta}");
        let mean = g.mean().unwrap();
        for cy in &cycles {
            check_cycle(cy, mean, 0.0);
        }
        if let [lower, upper] = cycles.as_slice() {
            assert!(lower.h < 0.0 && upper.h > 0.0);
        }
        compared += 1;
    }
    assert!(compared >= 12, "only {compared} determinate cases");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn classification_is_shift_invariant(g in trig_strategy(3, 1.0, true), mu in -1.5..0.0f64, s in 0.0..T) {
        let f = PeriodicFn::from(g.clone());
        let (a, _) = count_cycles(&f, mu, &opts()).unwrap();
        let (b, _) = count_cycles(&PeriodicFn::from(g.shifted(s)), mu, &opts()).unwrap();
        // a tangency can flip under rounding; hyperbolic verdicts may not
        if a != Classification::OneDouble && b != Classification::OneDouble {
            prop_assert_eq!(a, b);
        }
    }
}
