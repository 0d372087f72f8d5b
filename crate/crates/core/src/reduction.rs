//! Reduction of `u' = a2 u² + a1 u + a0` to the canonical `x' = x² + γ(t)`.
//!
//! Two changes of variables are available:
//!
//! * nonvanishing `a2`: `x = a2 u + A` with `A = (a1 + a2'/a2)/2`, giving
//!   `γ = a2 a0 − A² + A'`;
//! * singular at a constant `u0` with `F(t) = f(t, u0) ≠ 0`:
//!   `x = m/(u − u0) + n` with `m = −F`, `n = (F' − f_u F)/(2F)`, giving
//!   `γ = a2 F + n' − n²`.
//!
//! Both are bijections on trajectories that avoid the excluded curve
//! (`u = u0`, respectively `x = n(t)` on the way back).

use crate::error::{Error, Result};
use crate::exprparse::{self, e_add, e_div, e_mul, e_sub, Expression, Params};
use crate::periodic::PeriodicFn;
use crate::search::bisect;

/// Default number of grid points for the nonvanishing checks.
pub const DEFAULT_GRID: usize = 4096;
/// Margin to the excluded curve when mapping trajectories.
pub const CURVE_MARGIN: f64 = 1e-8;

/// `u' = a2(t) u² + a1(t) u + a0(t)` with a common period.
#[derive(Debug, Clone)]
pub struct GeneralRiccati {
    pub period: f64,
    pub a2: PeriodicFn,
    pub a1: PeriodicFn,
    pub a0: PeriodicFn,
}

impl GeneralRiccati {
    pub fn new(a2: PeriodicFn, a1: PeriodicFn, a0: PeriodicFn) -> Result<GeneralRiccati> {
        let period = a2.period();
        for f in [&a1, &a0] {
            if (f.period() - period).abs() > 1e-12 * period {
                return Err(Error::Invalid(format!(
                    "coefficient periods differ: {} vs {}",
                    period,
                    f.period()
                )));
            }
        }
        Ok(GeneralRiccati { period, a2, a1, a0 })
    }

    pub fn parse(
        a2: &str,
        a1: &str,
        a0: &str,
        period: f64,
        params: &Params,
    ) -> Result<GeneralRiccati> {
        GeneralRiccati::new(
            PeriodicFn::parse(a2, period, params)?,
            PeriodicFn::parse(a1, period, params)?,
            PeriodicFn::parse(a0, period, params)?,
        )
    }

    /// `f(t, u)`.
    pub fn f(&self, t: f64, u: f64) -> Result<f64> {
        Ok((self.a2.eval(t)? * u + self.a1.eval(t)?) * u + self.a0.eval(t)?)
    }
}

#[derive(Debug, Clone)]
pub enum ReductionKind {
    Nonvanishing {
        a2: PeriodicFn,
        a_fn: PeriodicFn,
    },
    Singular {
        u0: f64,
        m_fn: PeriodicFn,
        n_fn: PeriodicFn,
    },
}

/// The canonical `γ` together with the data needed to map trajectories.
#[derive(Debug, Clone)]
pub struct ReductionRecord {
    pub gamma: PeriodicFn,
    pub kind: ReductionKind,
}

/// Sampled trajectory `(t, value)`.
pub type Trajectory = Vec<(f64, f64)>;

/// First grid point where `f` (nearly) vanishes, refined by bisection when
/// it changes sign.
fn find_zero(f: &PeriodicFn, grid: usize) -> Result<Option<f64>> {
    let h = f.period() / grid as f64;
    let vals = (0..grid)
        .map(|j| f.eval(j as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    let sup = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Ok(Some(0.0));
    }
    for j in 0..grid {
        let (v0, v1) = (vals[j], vals[(j + 1) % grid]);
        if v0.abs() < 1e-8 * sup {
            return Ok(Some(j as f64 * h));
        }
        if v0 * v1 < 0.0 {
            let t = bisect(|t| f.eval(t), j as f64 * h, (j + 1) as f64 * h, 1e-12)?;
            return Ok(Some(t));
        }
    }
    Ok(None)
}

fn build(expr: Expression, period: f64) -> Result<PeriodicFn> {
    PeriodicFn::from_expression(&expr, period, &Params::new())
}

/// Reduction for `a2` without zeros on the grid.
pub fn reduce_nonvanishing(eq: &GeneralRiccati, grid: usize) -> Result<ReductionRecord> {
    if let Some(t) = find_zero(&eq.a2, grid)? {
        return Err(Error::A2Vanishes { t });
    }
    let a2 = eq.a2.to_expression();
    let a1 = eq.a1.to_expression();
    let a0 = eq.a0.to_expression();
    let a = e_mul(
        Expression::num(0.5),
        e_add(a1, e_div(exprparse::derivative(&a2), a2.clone())),
    );
    let gamma = e_add(
        e_sub(e_mul(a2, a0), a.clone().powi(2)),
        exprparse::derivative(&a),
    );
    Ok(ReductionRecord {
        gamma: build(gamma, eq.period)?,
        kind: ReductionKind::Nonvanishing {
            a2: eq.a2.clone(),
            a_fn: build(a, eq.period)?,
        },
    })
}

/// Singular reduction around the constant `u0`; needs `f(t, u0) ≠ 0`.
pub fn singular_reduce(eq: &GeneralRiccati, u0: f64, grid: usize) -> Result<ReductionRecord> {
    let a2 = eq.a2.to_expression();
    let a1 = eq.a1.to_expression();
    let a0 = eq.a0.to_expression();
    let u = Expression::num(u0);
    let f = e_add(
        e_mul(e_add(e_mul(a2.clone(), u.clone()), a1.clone()), u.clone()),
        a0,
    );
    let f_fn = build(f.clone(), eq.period)?;
    if let Some(t) = find_zero(&f_fn, grid)? {
        return Err(Error::FVanishes { t });
    }
    let fu = e_add(e_mul(Expression::num(2.0 * u0), a2.clone()), a1);
    let m = e_mul(Expression::num(-1.0), f.clone());
    let n = e_div(
        e_sub(exprparse::derivative(&f), e_mul(fu, f.clone())),
        e_mul(Expression::num(2.0), f.clone()),
    );
    let gamma = e_sub(
        e_add(e_mul(a2, f), exprparse::derivative(&n)),
        n.clone().powi(2),
    );
    Ok(ReductionRecord {
        gamma: build(gamma, eq.period)?,
        kind: ReductionKind::Singular {
            u0,
            m_fn: build(m, eq.period)?,
            n_fn: build(n, eq.period)?,
        },
    })
}

/// Original variable `u` to canonical `x`.
pub fn map_forward(record: &ReductionRecord, u_traj: &[(f64, f64)]) -> Result<Trajectory> {
    u_traj
        .iter()
        .map(|&(t, u)| {
            let x = match &record.kind {
                ReductionKind::Nonvanishing { a2, a_fn } => a2.eval(t)? * u + a_fn.eval(t)?,
                ReductionKind::Singular { u0, m_fn, n_fn } => {
                    if (u - u0).abs() < CURVE_MARGIN {
                        return Err(Error::CurveCrossing { t });
                    }
                    m_fn.eval(t)? / (u - u0) + n_fn.eval(t)?
                }
            };
            Ok((t, x))
        })
        .collect()
}

/// Canonical `x` back to the original `u`.
pub fn map_back(record: &ReductionRecord, x_traj: &[(f64, f64)]) -> Result<Trajectory> {
    x_traj
        .iter()
        .map(|&(t, x)| {
            let u = match &record.kind {
                ReductionKind::Nonvanishing { a2, a_fn } => (x - a_fn.eval(t)?) / a2.eval(t)?,
                ReductionKind::Singular { u0, m_fn, n_fn } => {
                    let gap = x - n_fn.eval(t)?;
                    if gap.abs() < CURVE_MARGIN {
                        return Err(Error::CurveCrossing { t });
                    }
                    u0 + m_fn.eval(t)? / gap
                }
            };
            Ok((t, u))
        })
        .collect()
}
