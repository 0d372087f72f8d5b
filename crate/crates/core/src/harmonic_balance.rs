//! Harmonic balance for `x' = x² + α(t) + μ` with zero-average `α`.
//!
//! At order `n` the unknowns are `μ` and the coefficients of a zero-average
//! trigonometric polynomial `x_n` of order `n`. The residual
//! `x_n' − x_n² − α_n − μ` is projected onto the modes `1, cos kωt, sin kωt`
//! (`k ≤ n`), giving `2n + 1` polynomial equations solved by damped Newton.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::functionals::{mu_bracket, Bracket};
use crate::periodic::{fourier_truncate, PeriodicFn, TrigPoly, DEFAULT_SAMPLES};

/// Newton settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBOptions {
    /// Stop once the Galerkin residual ∞-norm drops below this.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Smallest line-search step before giving up.
    pub min_step: f64,
    /// Use a forward-difference Jacobian (step 1e-7) instead of the exact one.
    pub fd_jacobian: bool,
    /// Samples used to project `α` onto order `n`.
    pub samples: usize,
}

impl Default for HBOptions {
    fn default() -> Self {
        HBOptions {
            newton_tol: 1e-12,
            max_iters: 50,
            min_step: 1.0 / 65536.0,
            fd_jacobian: false,
            samples: DEFAULT_SAMPLES,
        }
    }
}

/// One converged harmonic-balance solution.
#[derive(Debug, Clone, PartialEq)]
pub struct HBSolution {
    pub order: usize,
    pub mu_n: f64,
    /// Zero-average candidate `p_n`; `c0` is exactly zero.
    pub p_n: TrigPoly,
    /// Sup over a 1024-point grid of `|p_n' − p_n² − α − μ_n|` with the full `α`.
    pub residual_sup: f64,
    /// ∞-norm of the projected residual at exit.
    pub galerkin_norm: f64,
    pub newton_iters: usize,
}

impl HBSolution {
    /// Coefficient vector `(a_1..a_n, b_1..b_n)`.
    pub fn lambda(&self) -> Vec<f64> {
        let mut v = self.p_n.cos_coeffs().to_vec();
        v.extend_from_slice(self.p_n.sin_coeffs());
        v
    }
}

/// One row of [`hb_sequence`]; failed orders keep their error.
#[derive(Debug, Clone)]
pub struct HBStep {
    pub order: usize,
    pub outcome: Result<(HBSolution, Bracket)>,
}

fn poly_from_lambda(period: f64, lambda: &[f64]) -> TrigPoly {
    let n = lambda.len() / 2;
    TrigPoly::new(period, 0.0, lambda[..n].to_vec(), lambda[n..].to_vec())
        .expect("finite coefficients")
}

fn project(p: &TrigPoly, n: usize) -> Vec<f64> {
    let p = p.truncated(n);
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(p.c0());
    out.extend_from_slice(p.cos_coeffs());
    out.extend_from_slice(p.sin_coeffs());
    out
}

/// Projected residual `[const, cos 1..n, sin 1..n]` of
/// `x' − x² − α_n − μ` for `x` with coefficients `lambda = (a, b)`.
pub fn galerkin_residual(lambda: &[f64], mu: f64, alpha_n: &TrigPoly) -> Result<Vec<f64>> {
    if !lambda.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: lambda.len() + 1,
            got: lambda.len(),
        });
    }
    if lambda.iter().any(|v| !v.is_finite()) || !mu.is_finite() {
        return Err(Error::Invalid(
            "non-finite harmonic-balance unknowns".into(),
        ));
    }
    let n = lambda.len() / 2;
    let x = poly_from_lambda(alpha_n.period(), lambda);
    let r = x
        .derivative()
        .sub(&x.mul(&x))
        .sub(alpha_n)
        .add(&TrigPoly::constant(alpha_n.period(), -mu));
    Ok(project(&r, n))
}

/// Exact Jacobian of [`galerkin_residual`] in the unknowns `(μ, a, b)`.
pub fn jacobian(lambda: &[f64], period: f64) -> DMatrix<f64> {
    let n = lambda.len() / 2;
    let dim = 2 * n + 1;
    let x = poly_from_lambda(period, lambda);
    let two_x = x.scale(2.0);
    let mut jac = DMatrix::zeros(dim, dim);
    jac[(0, 0)] = -1.0;
    for k in 1..=n {
        for (col, phi) in [
            (k, TrigPoly::cos_mode(period, k, 1.0)),
            (n + k, TrigPoly::sin_mode(period, k, 1.0)),
        ] {
            let column = project(&phi.derivative().sub(&two_x.mul(&phi)), n);
            for (row, v) in column.into_iter().enumerate() {
                jac[(row, col)] = v;
            }
        }
    }
    jac
}

fn fd_jacobian(z: &[f64], alpha_n: &TrigPoly) -> Result<DMatrix<f64>> {
    let dim = z.len();
    let base = residual_z(z, alpha_n)?;
    let mut jac = DMatrix::zeros(dim, dim);
    let h = 1e-7;
    let mut zp = z.to_vec();
    for j in 0..dim {
        zp[j] += h;
        let r = residual_z(&zp, alpha_n)?;
        zp[j] = z[j];
        for i in 0..dim {
            jac[(i, j)] = (r[i] - base[i]) / h;
        }
    }
    Ok(jac)
}

fn residual_z(z: &[f64], alpha_n: &TrigPoly) -> Result<Vec<f64>> {
    galerkin_residual(&z[1..], z[0], alpha_n)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn initial_guess(alpha_n: &TrigPoly, n: usize, init: Option<&HBSolution>) -> Vec<f64> {
    let period = alpha_n.period();
    let (mu, p) = match init {
        Some(s) => (s.mu_n, s.p_n.truncated(n)),
        None => {
            // zero-average antiderivative of the first harmonic of α
            let w = alpha_n.omega();
            let a1 = alpha_n.cos_coeffs().first().copied().unwrap_or(0.0);
            let b1 = alpha_n.sin_coeffs().first().copied().unwrap_or(0.0);
            let p = TrigPoly::sin_mode(period, 1, a1 / w)
                .add(&TrigPoly::cos_mode(period, 1, -b1 / w))
                .truncated(n);
            (-p.mul(&p).mean(), p)
        }
    };
    let mut z = vec![mu];
    z.extend_from_slice(p.cos_coeffs());
    z.extend_from_slice(p.sin_coeffs());
    z
}

/// Sup-norm of `p' − p² − α − μ` on a 1024-point grid.
pub fn full_residual_sup(alpha: &PeriodicFn, p: &TrigPoly, mu: f64) -> Result<f64> {
    let n = 1024;
    let h = alpha.period() / n as f64;
    let dp = p.derivative();
    let mut sup: f64 = 0.0;
    for j in 0..n {
        let t = j as f64 * h;
        let v = p.eval(t);
        sup = sup.max((dp.eval(t) - v * v - alpha.eval(t)? - mu).abs());
    }
    Ok(sup)
}

/// Solve the order-`n` Galerkin system by damped Newton. Starts from `init`
/// (zero-padded) when given, otherwise from the linear proxy `x' = α_1`.
pub fn hb_solve(
    alpha: &PeriodicFn,
    n: usize,
    init: Option<&HBSolution>,
    opts: &HBOptions,
) -> Result<HBSolution> {
    if n == 0 {
        return Err(Error::Invalid(
            "harmonic-balance order must be at least 1".into(),
        ));
    }
    let samples = opts.samples.max(8 * n + 8);
    let alpha_n = fourier_truncate(alpha, n, samples)?.with_c0(0.0);
    let period = alpha.period();

    let mut z = initial_guess(&alpha_n, n, init);
    let mut r = residual_z(&z, &alpha_n)?;
    let mut norm = inf_norm(&r);
    let mut iters = 0;
    while norm >= opts.newton_tol {
        if iters >= opts.max_iters {
            return Err(Error::NonConvergence {
                order: n,
                residual: norm,
            });
        }
        iters += 1;
        let jac = if opts.fd_jacobian {
            fd_jacobian(&z, &alpha_n)?
        } else {
            jacobian(&z[1..], period)
        };
        let rhs = -DVector::from_column_slice(&r);
        let delta = jac.lu().solve(&rhs).ok_or(Error::NonConvergence {
            order: n,
            residual: norm,
        })?;

        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = z
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a + step * d)
                .collect();
            if let Ok(rt) = residual_z(&trial, &alpha_n) {
                let nt = inf_norm(&rt);
                if nt < norm {
                    z = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
            }
            step *= 0.5;
            if step < opts.min_step {
                return Err(Error::NonConvergence {
                    order: n,
                    residual: norm,
                });
            }
        }
    }

    let p_n = poly_from_lambda(period, &z[1..]);
    let mu_n = z[0];
    Ok(HBSolution {
        order: n,
        mu_n,
        residual_sup: full_residual_sup(alpha, &p_n, mu_n)?,
        p_n,
        galerkin_norm: norm,
        newton_iters: iters,
    })
}

/// Orders `1..=n_max`, each warm-started from the last converged order, with
/// the functional bracket on μ* attached.
pub fn hb_sequence(alpha: &PeriodicFn, n_max: usize, opts: &HBOptions) -> Vec<HBStep> {
    let mut out = Vec::with_capacity(n_max);
    let mut last: Option<HBSolution> = None;
    for n in 1..=n_max {
        let outcome = hb_solve(alpha, n, last.as_ref(), opts).and_then(|sol| {
            let b = mu_bracket(alpha, &sol.p_n)?;
            Ok((sol, b))
        });
        if let Ok((sol, _)) = &outcome {
            last = Some(sol.clone());
        }
        out.push(HBStep { order: n, outcome });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprparse::Params;
    use crate::periodic::center;
    use std::f64::consts::PI;

    const T: f64 = 2.0 * PI;

    fn expr(src: &str) -> PeriodicFn {
        PeriodicFn::parse(src, T, &Params::new()).unwrap()
    }

    #[test]
    fn zero_everything_gives_zero_residual() {
        let r = galerkin_residual(&[0.0; 4], 0.0, &TrigPoly::zero(T)).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cosines_sin_is_a_root() {
        let alpha = TrigPoly::new(T, 0.0, vec![1.0, 0.5], vec![0.0, 0.0]).unwrap();
        let r = galerkin_residual(&[0.0, 0.0, 1.0, 0.0], -0.5, &alpha).unwrap();
        assert!(inf_norm(&r) < 1e-15, "{r:?}");
    }

    #[test]
    fn odd_lambda_is_rejected() {
        assert!(matches!(
            galerkin_residual(&[0.0; 3], 0.0, &TrigPoly::zero(T)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rational_order2_equations() {
        // residual rows in closed form for x = a1 cos + a2 cos2 + b1 sin + b2 sin2
        let alpha = TrigPoly::new(T, 0.0, vec![2.0 / 3.0, 14.0 / 9.0], vec![0.0, 0.0]).unwrap();
        let (a1, a2, b1, b2, mu) = (0.3, -0.2, 0.7, 0.1, -0.4);
        let r = galerkin_residual(&[a1, a2, b1, b2], mu, &alpha).unwrap();
        let c = -0.5 * (a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2) - mu;
        assert!((r[0] - c).abs() < 1e-15);
        assert!((3.0 * r[1] - (3.0 * b1 - 3.0 * a1 * a2 - 3.0 * b1 * b2 - 2.0)).abs() < 1e-14);
        assert!((r[3] + (a1 + a1 * b2 - a2 * b1)).abs() < 1e-15);
        assert!((18.0 * r[2] - (36.0 * b2 - 9.0 * a1 * a1 + 9.0 * b1 * b1 - 28.0)).abs() < 1e-13);
        assert!((r[4] - (-2.0 * a2 - a1 * b1)).abs() < 1e-15);
    }

    #[test]
    fn analytic_and_fd_jacobians_agree() {
        let alpha = TrigPoly::new(T, 0.0, vec![0.4, -0.3, 0.2], vec![0.1, 0.5, -0.6]).unwrap();
        let z = [-0.3, 0.2, -0.1, 0.4, 0.6, -0.5, 0.05];
        let exact = jacobian(&z[1..], T);
        let fd = fd_jacobian(&z, &alpha).unwrap();
        assert!((exact - fd).abs().max() < 1e-6);
    }

    #[test]
    fn sine_first_orders() {
        let alpha = expr("sin(t)");
        let opts = HBOptions::default();
        let s1 = hb_solve(&alpha, 1, None, &opts).unwrap();
        assert!((s1.p_n.cos_coeffs()[0] + 1.0).abs() < 1e-12);
        assert!(s1.p_n.sin_coeffs()[0].abs() < 1e-12);
        assert!((s1.mu_n + 0.5).abs() < 1e-12);
        let s2 = hb_solve(&alpha, 2, Some(&s1), &opts).unwrap();
        let w = s2.p_n.cos_coeffs()[0];
        assert!((w + 0.8477075981).abs() < 1e-9);
        assert!((w * w * w + 4.0 * w + 4.0).abs() < 1e-11);
        assert!((s2.p_n.sin_coeffs()[1] - w * w / 4.0).abs() < 1e-11);
        assert_eq!(s2.p_n.c0(), 0.0);
    }

    #[test]
    fn rational_order2_closed_form() {
        let alpha = center(&expr("(45*cos(t)^2-29)/(3*cos(t)-5)^2")).unwrap();
        let steps = hb_sequence(&alpha, 2, &HBOptions::default());
        let (s2, _) = steps[1].outcome.as_ref().unwrap();
        let w = s2.p_n.sin_coeffs()[0] / 2.0;
        assert!((w - 0.5874987922).abs() < 1e-9);
        assert!((9.0 * w.powi(3) + 2.0 * w - 3.0).abs() < 1e-10);
        assert!((s2.p_n.sin_coeffs()[1] + (w * w - 7.0 / 9.0)).abs() < 1e-10);
    }

    #[test]
    fn zero_alpha_gives_zero_solution() {
        let steps = hb_sequence(&PeriodicFn::constant(T, 0.0), 3, &HBOptions::default());
        for s in steps {
            let (sol, b) = s.outcome.unwrap();
            assert_eq!(sol.mu_n, 0.0);
            assert_eq!(sol.p_n.coeff_norm(), 0.0);
            assert_eq!((b.lo, b.hi), (0.0, 0.0));
        }
    }

    #[test]
    fn fd_jacobian_option_converges() {
        let opts = HBOptions {
            fd_jacobian: true,
            newton_tol: 1e-10,
            ..HBOptions::default()
        };
        let s = hb_solve(&expr("sin(t)"), 3, None, &opts).unwrap();
        assert!((s.mu_n + s.p_n.mul(&s.p_n).mean()).abs() < 1e-9);
    }
}
