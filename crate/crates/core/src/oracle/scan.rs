use rayon::prelude::*;

use super::integrate::{integrate_field, Outcome, ScalarField};
use super::{displacement_field, CanonicalField, Displacement};
use crate::error::{Error, Result};
use crate::functionals::{Bracket, Classification};
use crate::periodic::{center, PeriodicFn, SampleGrid};
use crate::reduction::GeneralRiccati;
use crate::search::{bisect, golden_max};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Initial-condition range; `None` picks [`default_range`].
    pub range: Option<(f64, f64)>,
    pub samples: usize,
    /// Bisection width for each root.
    pub cycle_tol: f64,
    /// `|min displacement| ≤ d_tol` counts as a double cycle.
    pub d_tol: f64,
    /// `|h| ≤ h_tol` counts as semistable.
    pub h_tol: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Shortcut `mean(γ) + μ ≥ 0` to `NoCycles` (canonical form only).
    pub precheck: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            range: None,
            samples: 400,
            cycle_tol: 1e-10,
            d_tol: 1e-6,
            h_tol: 1e-4,
            tol: super::DEFAULT_TOL,
            precheck: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attractive,
    Repulsive,
    Semistable,
}

/// One located periodic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleInfo {
    pub x0: f64,
    /// `∫₀ᵀ ∂f/∂x(t, φ(t)) dt`; equals `2∫φ` for the canonical form.
    pub h: f64,
    pub stability: Stability,
    pub mean_x: f64,
    pub mean_x2: f64,
    /// `|x(T) − x0|` at the located initial condition.
    pub residual: f64,
    pub traj: Vec<(f64, f64)>,
}

/// `±(1 + 2√max|γ+μ|·(1+T))`.
pub fn default_range(gamma: &PeriodicFn, mu: f64) -> Result<(f64, f64)> {
    let grid = SampleGrid::new(gamma, 1024)?;
    let m = grid
        .samples
        .iter()
        .fold(0.0_f64, |a, v| a.max((v + mu).abs()));
    let r = 1.0 + 2.0 * m.sqrt() * (1.0 + gamma.period());
    Ok((-r, r))
}

/// Heuristic initial-condition range for a general equation.
pub fn general_range(eq: &GeneralRiccati) -> Result<(f64, f64)> {
    let n = 1024;
    let h = eq.period / n as f64;
    let (mut min_a2, mut s): (f64, f64) = (f64::INFINITY, 0.0);
    for j in 0..n {
        let t = j as f64 * h;
        let (a2, a1, a0) = (eq.a2.eval(t)?, eq.a1.eval(t)?, eq.a0.eval(t)?);
        min_a2 = min_a2.min(a2.abs());
        s = s.max(0.25 * a1 * a1 + (a2 * a0).abs());
    }
    let r = (1.0 + 2.0 * s.sqrt() * (1.0 + eq.period)) / min_a2.max(0.05);
    Ok((-r, r))
}

fn stability(h: f64, opts: &ScanOptions) -> Stability {
    if h < -opts.h_tol {
        Stability::Attractive
    } else if h > opts.h_tol {
        Stability::Repulsive
    } else {
        Stability::Semistable
    }
}

fn cycle_info<F: ScalarField + ?Sized>(
    field: &F,
    x0: f64,
    opts: &ScanOptions,
) -> Result<CycleInfo> {
    let period = field.period();
    let r = integrate_field(field, x0, 0.0, period, opts.tol, true)?;
    let residual = match r.outcome {
        Outcome::Value(x) => (x - x0).abs(),
        Outcome::Escape { .. } => f64::INFINITY,
    };
    let h = r.log_multiplier;
    Ok(CycleInfo {
        x0,
        h,
        stability: stability(h, opts),
        mean_x: r.int_x / period,
        mean_x2: r.int_x2 / period,
        residual,
        traj: r.traj,
    })
}

/// `s ↦ x(T − s)`: the same field run backwards over one period.
struct Reversed<'a, F: ?Sized>(&'a F);

impl<F: ScalarField + ?Sized> ScalarField for Reversed<'_, F> {
    fn period(&self) -> f64 {
        self.0.period()
    }

    fn rhs(&self, s: f64, x: f64) -> Result<f64> {
        Ok(-self.0.rhs(self.0.period() - s, x)?)
    }

    fn dfdx(&self, s: f64, x: f64) -> Result<f64> {
        Ok(-self.0.dfdx(self.0.period() - s, x)?)
    }
}

/// Confirm a sign change of the displacement as a periodic solution.
///
/// Strongly repelling cycles cannot be followed forward from a point
/// known only to the bisection width, and a sign change can also come from
/// a blow-up boundary. Candidates with a large forward residual are
/// therefore refined with the inverse map, which contracts towards a
/// repelling cycle; `None` when that fails.
fn verified_cycle<F: ScalarField + ?Sized>(
    field: &F,
    x0: f64,
    opts: &ScanOptions,
) -> Result<Option<CycleInfo>> {
    let info = cycle_info(field, x0, opts)?;
    if info.residual <= 1e-6 * (1.0 + x0.abs()) {
        return Ok(Some(info));
    }
    let back = Reversed(field);
    let period = field.period();
    let mut y = x0;
    for _ in 0..50 {
        let z = match integrate_field(&back, y, 0.0, period, opts.tol, false)?.outcome {
            Outcome::Value(z) => z,
            Outcome::Escape { .. } => return Ok(None),
        };
        let step = (z - y).abs();
        y = z;
        if step <= opts.cycle_tol.max(1e-12 * (1.0 + y.abs())) {
            let r = integrate_field(&back, y, 0.0, period, opts.tol, true)?;
            let Outcome::Value(end) = r.outcome else {
                return Ok(None);
            };
            let h = -r.log_multiplier;
            let mut traj: Vec<(f64, f64)> = r.traj.iter().map(|&(s, x)| (period - s, x)).collect();
            traj.reverse();
            return Ok(Some(CycleInfo {
                x0: y,
                h,
                stability: stability(h, opts),
                mean_x: r.int_x / period,
                mean_x2: r.int_x2 / period,
                residual: (end - y).abs(),
                traj,
            }));
        }
    }
    Ok(None)
}

/// Displacement at `n` uniform initial conditions on `[lo, hi]`.
pub fn displacement_profile<F: ScalarField + ?Sized>(
    field: &F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> Result<Vec<(f64, Displacement)>> {
    let xs: Vec<f64> = (0..n)
        .map(|j| lo + (hi - lo) * j as f64 / (n.max(2) - 1) as f64)
        .collect();
    xs.par_iter()
        .map(|&x| Ok((x, displacement_field(field, x, tol)?)))
        .collect()
}

struct Profile {
    xs: Vec<f64>,
    ds: Vec<f64>,
}

fn profile<F: ScalarField + ?Sized>(
    field: &F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> Result<Profile> {
    let xs: Vec<f64> = (0..n)
        .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
        .collect();
    let ds = xs
        .par_iter()
        .map(|&x| displacement_field(field, x, tol).map(|d| d.signed()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile { xs, ds })
}

/// Minimum of the displacement over `[lo, hi]`: coarse scan followed by
/// golden refinement between the neighbours of the best sample.
fn min_displacement<F: ScalarField + ?Sized>(
    field: &F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    let p = profile(field, lo, hi, n, tol)?;
    refine_min(field, &p, tol)
}

fn refine_min<F: ScalarField + ?Sized>(field: &F, p: &Profile, tol: f64) -> Result<(f64, f64)> {
    let (i, _) =
        p.ds.iter().enumerate().fold(
            (0, f64::INFINITY),
            |best, (i, &d)| if d < best.1 { (i, d) } else { best },
        );
    if !p.ds[i].is_finite() {
        return Ok((p.xs[i], p.ds[i]));
    }
    let a = p.xs[i.saturating_sub(1)];
    let b = p.xs[(i + 1).min(p.xs.len() - 1)];
    let (x, neg) = golden_max(
        |x| Ok(-displacement_field(field, x, tol)?.signed()),
        a,
        b,
        1e-9 * (1.0 + (b - a).abs()),
    )?;
    Ok(if -neg < p.ds[i] {
        (x, -neg)
    } else {
        (p.xs[i], p.ds[i])
    })
}

/// Locate and classify the periodic solutions of `field` with initial
/// conditions in `range`. `canonical` selects the two/one/zero structure
/// of `x' = x² + γ`; otherwise a single hyperbolic cycle is admissible.
pub fn count_cycles_field<F: ScalarField + ?Sized>(
    field: &F,
    range: (f64, f64),
    opts: &ScanOptions,
    canonical: bool,
) -> Result<(Classification, Vec<CycleInfo>)> {
    let (mut lo, mut hi) = range;
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater)
        || !lo.is_finite()
        || !hi.is_finite()
    {
        return Err(Error::BadRange { lo, hi });
    }
    let n = opts.samples.max(8);
    let mut widened = false;
    loop {
        let p = profile(field, lo, hi, n, opts.tol)?;
        if p.ds.iter().all(|d| d.is_infinite()) {
            return Err(Error::ScanInconclusive);
        }
        let dfn = |x: f64| Ok(displacement_field(field, x, opts.tol)?.signed());
        let mut roots = Vec::new();
        for j in 0..n - 1 {
            let (d0, d1) = (p.ds[j], p.ds[j + 1]);
            if d0 == 0.0 {
                roots.push(p.xs[j]);
            } else if d0 * d1 < 0.0 {
                roots.push(bisect(dfn, p.xs[j], p.xs[j + 1], opts.cycle_tol)?);
            }
        }
        if p.ds[n - 1] == 0.0 {
            roots.push(p.xs[n - 1]);
        }

        let mut tangency = None;
        if roots.is_empty() {
            let (xm, dm) = refine_min(field, &p, opts.tol)?;
            if dm < 0.0 {
                // two close cycles hiding between samples
                let spacing = (hi - lo) / (n - 1) as f64;
                roots.push(bisect(dfn, xm - spacing, xm, opts.cycle_tol)?);
                roots.push(bisect(dfn, xm, xm + spacing, opts.cycle_tol)?);
            } else if dm.abs() <= opts.d_tol {
                tangency = Some(xm);
            }
        }

        let spacing = (hi - lo) / (n - 1) as f64;
        let at_edge = roots
            .iter()
            .chain(tangency.iter())
            .any(|&x| x - lo < 1.5 * spacing || hi - x < 1.5 * spacing);
        let bottom_inside = canonical && p.ds[0] < 0.0;
        if (at_edge || bottom_inside) && !widened {
            let (c, w) = (0.5 * (lo + hi), hi - lo);
            lo = c - w;
            hi = c + w;
            widened = true;
            continue;
        }

        if let Some(x) = tangency {
            let info = cycle_info(field, x, opts)?;
            return Ok((Classification::OneDouble, vec![info]));
        }
        let mut cycles = Vec::with_capacity(roots.len());
        for &x in &roots {
            if let Some(c) = verified_cycle(field, x, opts)? {
                cycles.push(c);
            }
        }
        let class = match cycles.len() {
            0 => Classification::NoCycles,
            1 if cycles[0].stability == Stability::Semistable => Classification::OneDouble,
            1 if !canonical => Classification::OneHyperbolic,
            2 => Classification::TwoHyperbolic,
            _ => Classification::Undetermined,
        };
        return Ok((class, cycles));
    }
}

/// Periodic solutions of `x' = x² + γ + mu_offset`.
pub fn count_cycles(
    gamma: &PeriodicFn,
    mu_offset: f64,
    opts: &ScanOptions,
) -> Result<(Classification, Vec<CycleInfo>)> {
    if opts.precheck {
        let shift = gamma.mean()? + mu_offset;
        let scale = 1.0 + SampleGrid::new(gamma, 256)?.max_abs();
        let flat = center(gamma)?.max_abs_on_grid(256)? <= 1e-12 * scale;
        if shift > 1e-12 * scale || (shift >= -1e-12 * scale && !flat) {
            return Ok((Classification::NoCycles, Vec::new()));
        }
    }
    let Some(range) = opts.range else {
        let range = default_range(gamma, mu_offset)?;
        // the automatic range encloses every cycle, so blow-up everywhere
        // means there is none
        return match count_cycles_field(&CanonicalField::new(gamma, mu_offset), range, opts, true) {
            Err(Error::ScanInconclusive) => Ok((Classification::NoCycles, Vec::new())),
            other => other,
        };
    };
    count_cycles_field(&CanonicalField::new(gamma, mu_offset), range, opts, true)
}

/// Periodic solutions of a general Riccati equation, integrated directly.
pub fn count_cycles_general(
    eq: &GeneralRiccati,
    opts: &ScanOptions,
) -> Result<(Classification, Vec<CycleInfo>)> {
    let Some(range) = opts.range else {
        return match count_cycles_field(eq, general_range(eq)?, opts, false) {
            Err(Error::ScanInconclusive) => Ok((Classification::NoCycles, Vec::new())),
            other => other,
        };
    };
    count_cycles_field(eq, range, opts, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationRow {
    pub mu: f64,
    pub class: Classification,
    pub cycles_x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationResult {
    pub rows: Vec<BifurcationRow>,
    /// Lower cycle rises and upper cycle falls as μ grows, across the table.
    pub monotone: bool,
    /// Oracle bracket on μ*, width at most 1e-6.
    pub mu_star: Bracket,
}

/// Sweep `x' = x² + γ̂ + μ` over `mu_grid`, then bisect in μ on the sign of
/// the minimum displacement to bracket the saddle-node value μ*.
pub fn bifurcation_scan(
    gamma_hat: &PeriodicFn,
    mu_grid: &[f64],
    opts: &ScanOptions,
) -> Result<BifurcationResult> {
    let rows = mu_grid
        .par_iter()
        .map(|&mu| {
            count_cycles(gamma_hat, mu, opts).map(|(class, cycles)| BifurcationRow {
                mu,
                class,
                cycles_x0: cycles.iter().map(|c| c.x0).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut two: Vec<&BifurcationRow> = rows
        .iter()
        .filter(|r| r.class == Classification::TwoHyperbolic && r.cycles_x0.len() == 2)
        .collect();
    two.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    let monotone = two.windows(2).all(|w| {
        w[1].cycles_x0[0] >= w[0].cycles_x0[0] - 1e-8
            && w[1].cycles_x0[1] <= w[0].cycles_x0[1] + 1e-8
    });

    let below = move |mu: f64| -> Result<bool> {
        let field = CanonicalField::new(gamma_hat, mu);
        let (lo, hi) = default_range(gamma_hat, mu)?;
        let (_, dmin) = min_displacement(&field, lo, hi, 160, opts.tol)?;
        Ok(dmin < 0.0)
    };

    let max_hat = SampleGrid::new(gamma_hat, 4096)?
        .samples
        .iter()
        .fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let mut lo = rows
        .iter()
        .filter(|r| r.class == Classification::TwoHyperbolic)
        .map(|r| r.mu)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = rows
        .iter()
        .filter(|r| r.class == Classification::NoCycles && r.mu > lo)
        .map(|r| r.mu)
        .fold(f64::INFINITY, f64::min);
    if !lo.is_finite() || !below(lo)? {
        lo = -max_hat - 1e-3 * (1.0 + max_hat.abs());
    }
    if !hi.is_finite() || below(hi)? {
        hi = 1e-9;
    }
    if !below(lo)? || below(hi)? {
        return Err(Error::ScanInconclusive);
    }
    while hi - lo > 5e-7 {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BifurcationResult {
        rows,
        monotone,
        mu_star: Bracket { lo, hi },
    })
}
