//! Independent check by direct integration: the displacement map
//! `x0 ↦ x(T; x0) − x0`, its zeros (the periodic solutions), their
//! hyperbolicity exponents, and a parameter sweep locating μ*.

mod integrate;
mod scan;

pub use integrate::{
    integrate_field, IntegrationResult, Outcome, ScalarField, DEFAULT_TOL, ESCAPE_THRESHOLD,
};
pub use scan::{
    bifurcation_scan, count_cycles, count_cycles_field, count_cycles_general, default_range,
    displacement_profile, general_range, BifurcationResult, BifurcationRow, CycleInfo, ScanOptions,
    Stability,
};

use crate::error::Result;
use crate::periodic::PeriodicFn;
use crate::reduction::GeneralRiccati;

/// `x' = x² + γ(t) + μ`.
#[derive(Debug, Clone)]
pub struct CanonicalField {
    pub gamma: PeriodicFn,
    pub mu: f64,
}

impl CanonicalField {
    pub fn new(gamma: &PeriodicFn, mu: f64) -> CanonicalField {
        CanonicalField {
            gamma: gamma.clone(),
            mu,
        }
    }
}

impl ScalarField for CanonicalField {
    fn period(&self) -> f64 {
        self.gamma.period()
    }

    fn rhs(&self, t: f64, x: f64) -> Result<f64> {
        Ok(x * x + self.gamma.eval(t)? + self.mu)
    }

    fn dfdx(&self, _t: f64, x: f64) -> Result<f64> {
        Ok(2.0 * x)
    }
}

impl ScalarField for GeneralRiccati {
    fn period(&self) -> f64 {
        self.period
    }

    fn rhs(&self, t: f64, x: f64) -> Result<f64> {
        Ok((self.a2.eval(t)? * x + self.a1.eval(t)?) * x + self.a0.eval(t)?)
    }

    fn dfdx(&self, t: f64, x: f64) -> Result<f64> {
        Ok(2.0 * self.a2.eval(t)? * x + self.a1.eval(t)?)
    }
}

/// Integrate `x' = x² + γ + mu_offset` from `(t0, x0)` to `t1`.
pub fn integrate(
    gamma: &PeriodicFn,
    mu_offset: f64,
    x0: f64,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<IntegrationResult> {
    integrate_field(
        &CanonicalField::new(gamma, mu_offset),
        x0,
        t0,
        t1,
        tol,
        false,
    )
}

/// Value of the displacement map, or the direction of blow-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Displacement {
    Value(f64),
    Escape(f64),
}

impl Displacement {
    /// Escapes become `±∞`, so sign tests treat them as boundary values.
    pub fn signed(self) -> f64 {
        match self {
            Displacement::Value(d) => d,
            Displacement::Escape(s) => s * f64::INFINITY,
        }
    }

    pub fn is_escape(self) -> bool {
        matches!(self, Displacement::Escape(_))
    }
}

/// `x(T; x0) − x0` for an arbitrary field.
pub fn displacement_field<F: ScalarField + ?Sized>(
    field: &F,
    x0: f64,
    tol: f64,
) -> Result<Displacement> {
    let r = integrate_field(field, x0, 0.0, field.period(), tol, false)?;
    Ok(match r.outcome {
        Outcome::Value(x) => Displacement::Value(x - x0),
        Outcome::Escape { sign, .. } => Displacement::Escape(sign),
    })
}

/// `x(T; x0) − x0` for `x' = x² + γ + mu_offset`.
pub fn displacement(gamma: &PeriodicFn, mu_offset: f64, x0: f64) -> Result<Displacement> {
    displacement_field(&CanonicalField::new(gamma, mu_offset), x0, DEFAULT_TOL)
}
