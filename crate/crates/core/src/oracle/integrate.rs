//! Dormand–Prince 5(4) with first-same-as-last reuse, carrying the
//! variational log-multiplier and the running integrals of `x` and `x²`.

use crate::error::Result;

/// `|x|` beyond this counts as finite-time blow-up.
pub const ESCAPE_THRESHOLD: f64 = 1e6;
/// Default absolute and relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A scalar T-periodic vector field `x' = f(t, x)`.
pub trait ScalarField: Sync {
    fn period(&self) -> f64;
    fn rhs(&self, t: f64, x: f64) -> Result<f64>;
    /// `∂f/∂x`.
    fn dfdx(&self, t: f64, x: f64) -> Result<f64>;
}

/// Either the state at `t1` or a blow-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Value(f64),
    Escape { t_blow: f64, sign: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    pub outcome: Outcome,
    pub steps: usize,
    /// Largest normalized local error estimate among accepted steps.
    pub est_error: f64,
    /// `∫ ∂f/∂x dt`, the log of the variational multiplier.
    pub log_multiplier: f64,
    pub int_x: f64,
    pub int_x2: f64,
    /// Accepted `(t, x)` pairs when requested, starting at `(t0, x0)`.
    pub traj: Vec<(f64, f64)>,
}

impl IntegrationResult {
    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Value(x) => Some(x),
            Outcome::Escape { .. } => None,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 4];

fn deriv<F: ScalarField + ?Sized>(field: &F, t: f64, y: &State) -> Result<State> {
    let x = y[0];
    Ok([field.rhs(t, x)?, field.dfdx(t, x)?, x, x * x])
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One trial step; returns the fifth-order state, the error estimate and
/// the derivative at the new point (reused as the next first stage).
fn dp_step<F: ScalarField + ?Sized>(
    field: &F,
    t: f64,
    h: f64,
    y: &State,
    k1: &State,
) -> Result<(State, State, State)> {
    let k2 = deriv(field, t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = deriv(field, t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = deriv(
        field,
        t + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    )?;
    let k5 = deriv(
        field,
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = deriv(
        field,
        t + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    )?;
    let y_new = axpy(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = deriv(field, t + h, &y_new)?;
    let mut err = [0.0; 4];
    for i in 0..4 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok((y_new, err, k7))
}

/// Integrate `field` from `(t0, x0)` to `t1`.
pub fn integrate_field<F: ScalarField + ?Sized>(
    field: &F,
    x0: f64,
    t0: f64,
    t1: f64,
    tol: f64,
    record: bool,
) -> Result<IntegrationResult> {
    assert!(t1 > t0 && tol > 0.0, "need t0 < t1 and tol > 0");
    let mut t = t0;
    let mut y: State = [x0, 0.0, 0.0, 0.0];
    let mut k1 = deriv(field, t, &y)?;
    let span = t1 - t0;
    let mut h = (span / 64.0)
        .min(0.1 / (1.0 + k1[0].abs()).sqrt())
        .max(span * 1e-8);
    let mut steps = 0;
    let mut est_error: f64 = 0.0;
    let mut traj = Vec::new();
    if record {
        traj.push((t, x0));
    }
    let finish = |outcome, steps, est_error, y: State, traj| IntegrationResult {
        outcome,
        steps,
        est_error,
        log_multiplier: y[1],
        int_x: y[2],
        int_x2: y[3],
        traj,
    };

    loop {
        if y[0].abs() > ESCAPE_THRESHOLD {
            let sign = y[0].signum();
            return Ok(finish(
                Outcome::Escape { t_blow: t, sign },
                steps,
                est_error,
                y,
                traj,
            ));
        }
        if t >= t1 {
            return Ok(finish(Outcome::Value(y[0]), steps, est_error, y, traj));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h < 1e-13 * (1.0 + t.abs()) {
            // step underflow: treat as blow-up in progress
            let sign = if y[0] < 0.0 { -1.0 } else { 1.0 };
            return Ok(finish(
                Outcome::Escape { t_blow: t, sign },
                steps,
                est_error,
                y,
                traj,
            ));
        }

        let (y_new, err, k7) = dp_step(field, t, h, &y, &k1)?;
        let finite = y_new.iter().chain(&err).all(|v| v.is_finite());
        let norm = if finite {
            let mut acc: f64 = 0.0;
            for i in 0..4 {
                let sc = tol + tol * y[i].abs().max(y_new[i].abs());
                acc = acc.max((err[i] / sc).abs());
            }
            acc
        } else {
            f64::INFINITY
        };

        if norm <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            steps += 1;
            est_error = est_error.max(norm);
            if record {
                traj.push((t, y[0]));
            }
            let fac = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            let fac = if norm.is_finite() {
                (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
        }
    }
}
