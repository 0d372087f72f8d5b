//! One-parameter affine families `γ_η = base + η·dir` and bracketing of the
//! parameter `η*` where the discriminant changes sign.
//!
//! Each anchor `η_i` contributes a harmonic-balance candidate `p` and three
//! constants: `K` (so `μ*(η) ≥ K − s_inf·|η − η_i|`) and `L`, `M` (so
//! `μ*(η) ≤ L·η + M`), where `s_inf = ‖dir − mean(dir)‖_∞`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{mu_lower, weighted_mean, Bracket, REFINE_TOL};
use crate::harmonic_balance::{hb_solve, HBOptions, HBSolution};
use crate::oracle::{bifurcation_scan, ScanOptions};
use crate::periodic::{center, PeriodicFn, TrigPoly};
use crate::search::{bisect, periodic_max};

#[derive(Debug, Clone)]
pub struct AffineFamily {
    pub base: PeriodicFn,
    pub dir: PeriodicFn,
    pub period: f64,
    pub base_mean: f64,
    pub dir_mean: f64,
    pub base_hat: PeriodicFn,
    pub dir_hat: PeriodicFn,
    pub s_inf: f64,
}

impl AffineFamily {
    pub fn new(base: PeriodicFn, dir: PeriodicFn) -> Result<AffineFamily> {
        let period = base.period();
        if (dir.period() - period).abs() > 1e-12 * period {
            return Err(Error::Invalid("base and direction periods differ".into()));
        }
        let base_mean = base.mean()?;
        let dir_mean = dir.mean()?;
        let base_hat = center(&base)?;
        let dir_hat = center(&dir)?;
        let (_, s_inf) = periodic_max(|t| Ok(dir_hat.eval(t)?.abs()), period, 4096, REFINE_TOL)?;
        if s_inf <= 1e-12 * (1.0 + dir_mean.abs()) {
            return Err(Error::DegenerateDirection);
        }
        Ok(AffineFamily {
            base,
            dir,
            period,
            base_mean,
            dir_mean,
            base_hat,
            dir_hat,
            s_inf,
        })
    }

    /// `γ_η`.
    pub fn gamma(&self, eta: f64) -> PeriodicFn {
        PeriodicFn::affine(
            self.period,
            0.0,
            vec![(1.0, self.base.clone()), (eta, self.dir.clone())],
        )
    }

    /// `γ̂_η = base_hat + η·dir_hat`.
    pub fn gamma_hat(&self, eta: f64) -> PeriodicFn {
        PeriodicFn::affine(
            self.period,
            0.0,
            vec![(1.0, self.base_hat.clone()), (eta, self.dir_hat.clone())],
        )
    }

    /// `mean(γ_η)`, affine in `η`.
    pub fn gamma_bar(&self, eta: f64) -> f64 {
        self.base_mean + eta * self.dir_mean
    }
}

/// Per-anchor constants.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorData {
    pub eta0: f64,
    pub order: usize,
    pub p: TrigPoly,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    /// The candidate was borrowed from a neighbouring anchor.
    pub inherited: bool,
}

impl AnchorData {
    /// Upper line `L·η + M`.
    pub fn line(&self, eta: f64) -> f64 {
        self.l * eta + self.m
    }

    /// Lower tent `K − s·|η − η0|`.
    pub fn tent(&self, eta: f64, s_inf: f64) -> f64 {
        self.k - s_inf * (eta - self.eta0).abs()
    }
}

/// `K`, `L`, `M` for the candidate `p` at `η0`.
pub fn klm(family: &AffineFamily, eta0: f64, p: &TrigPoly) -> Result<AnchorData> {
    let k = mu_lower(&family.gamma_hat(eta0), p, REFINE_TOL)?;
    let l = -weighted_mean(p, |t| family.dir_hat.eval(t))?;
    let m = weighted_mean(p, |t| {
        let v = p.eval(t);
        Ok(v * v - family.base_hat.eval(t)?)
    })?;
    Ok(AnchorData {
        eta0,
        order: p.order(),
        p: p.clone(),
        k,
        l,
        m,
        inherited: false,
    })
}

#[derive(Debug, Clone)]
pub struct FamilyScanResult {
    pub anchors: Vec<AnchorData>,
    pub s_inf: f64,
    pub base_mean: f64,
    pub dir_mean: f64,
    /// Interval on which the envelopes meet `mean(γ_η)`.
    pub eta_range: (f64, f64),
    /// Per anchor: where its line meets `mean(γ_η)`, as `(η, mean(γ_η))`.
    pub line_pairs: Vec<Option<(f64, f64)>>,
    /// Per anchor: where its tent meets `mean(γ_η)`.
    pub tent_pairs: Vec<Option<(f64, f64)>>,
    pub eta_bracket: Bracket,
}

impl FamilyScanResult {
    pub fn gamma_bar(&self, eta: f64) -> f64 {
        self.base_mean + eta * self.dir_mean
    }

    /// `min_i (L_i η + M_i)`.
    pub fn mu_upper_env(&self, eta: f64) -> f64 {
        self.anchors
            .iter()
            .map(|a| a.line(eta))
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i (K_i − s_inf |η − η_i|)`.
    pub fn mu_lower_env(&self, eta: f64) -> f64 {
        self.anchors
            .iter()
            .map(|a| a.tent(eta, self.s_inf))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(η, μ_L, μ_U, mean γ_η)` on `n` uniform points of the scan range.
    pub fn envelope_samples(&self, n: usize) -> Vec<[f64; 4]> {
        let (lo, hi) = self.eta_range;
        (0..n)
            .map(|j| {
                let eta = if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * j as f64 / (n - 1) as f64
                };
                [
                    eta,
                    self.mu_lower_env(eta),
                    self.mu_upper_env(eta),
                    self.gamma_bar(eta),
                ]
            })
            .collect()
    }
}

fn continuation(alpha: &PeriodicFn, order: usize, opts: &HBOptions) -> Result<HBSolution> {
    let mut last: Option<HBSolution> = None;
    for n in 1..=order {
        last = Some(hb_solve(alpha, n, last.as_ref(), opts)?);
    }
    Ok(last.expect("order >= 1"))
}

fn line_root(a: &AnchorData, b: f64, d: f64) -> Option<f64> {
    let slope = a.l - d;
    (slope.abs() > 1e-14).then(|| (b - a.m) / slope)
}

fn tent_root(a: &AnchorData, s: f64, b: f64, d: f64) -> Option<f64> {
    // right branch K − s(η − η0), then left branch K + s(η − η0)
    let right = (d + s).abs() > 1e-14;
    let left = (d - s).abs() > 1e-14;
    let r = right
        .then(|| (a.k + s * a.eta0 - b) / (d + s))
        .filter(|&eta| eta >= a.eta0);
    let l = left
        .then(|| (a.k - s * a.eta0 - b) / (d - s))
        .filter(|&eta| eta < a.eta0);
    r.or(l)
}

fn envelope_root<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, what: &'static str) -> Result<f64> {
    let (glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo * ghi > 0.0 {
        return Err(Error::NoIntersection(what));
    }
    bisect(|x| Ok(g(x)), lo, hi, 1e-10)
}

/// Anchors at `eta_grid` with candidates of the given order, the two
/// envelopes and the bracket on `η*`.
pub fn scan(
    family: &AffineFamily,
    eta_grid: &[f64],
    order: usize,
    opts: &HBOptions,
) -> Result<FamilyScanResult> {
    if eta_grid.len() < 2
        || eta_grid
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater))
    {
        return Err(Error::Invalid(
            "eta grid must be increasing with at least 2 points".into(),
        ));
    }
    let solved: Vec<Result<HBSolution>> = eta_grid
        .par_iter()
        .map(|&eta| continuation(&family.gamma_hat(eta), order, opts))
        .collect();
    if solved.iter().all(|s| s.is_err()) {
        return Err(solved.into_iter().find_map(|s| s.err()).expect("non-empty"));
    }

    let anchors = eta_grid
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| {
            let (p, inherited) = match &solved[i] {
                Ok(sol) => (sol.p_n.clone(), false),
                Err(_) => {
                    let j = (0..eta_grid.len())
                        .filter(|&j| solved[j].is_ok())
                        .min_by(|&a, &b| {
                            (eta_grid[a] - eta)
                                .abs()
                                .total_cmp(&(eta_grid[b] - eta).abs())
                        })
                        .expect("some anchor converged");
                    let neighbour = solved[j].as_ref().expect("checked");
                    match hb_solve(&family.gamma_hat(eta), order, Some(neighbour), opts) {
                        Ok(sol) => (sol.p_n, false),
                        Err(_) => (neighbour.p_n.clone(), true),
                    }
                }
            };
            let mut a = klm(family, eta, &p)?;
            a.inherited = inherited;
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;

    let (b, d, s) = (family.base_mean, family.dir_mean, family.s_inf);
    let gbar = |eta: f64| b + eta * d;
    let line_pairs = anchors
        .iter()
        .map(|a| line_root(a, b, d).map(|eta| (eta, gbar(eta))))
        .collect();
    let tent_pairs = anchors
        .iter()
        .map(|a| tent_root(a, s, b, d).map(|eta| (eta, gbar(eta))))
        .collect();

    let eta_range = (eta_grid[0], eta_grid[eta_grid.len() - 1]);
    let mut result = FamilyScanResult {
        anchors,
        s_inf: s,
        base_mean: b,
        dir_mean: d,
        eta_range,
        line_pairs,
        tent_pairs,
        eta_bracket: Bracket { lo: 0.0, hi: 0.0 },
    };
    let upper = envelope_root(
        |eta| result.mu_upper_env(eta) - gbar(eta),
        eta_range.0,
        eta_range.1,
        "upper envelope",
    )?;
    let lower = envelope_root(
        |eta| result.mu_lower_env(eta) - gbar(eta),
        eta_range.0,
        eta_range.1,
        "lower envelope",
    )?;
    result.eta_bracket = Bracket::new(upper.min(lower), upper.max(lower))?;
    Ok(result)
}

/// `n` equidistant anchors on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Oracle bracket on `μ*(η)` at each `η`.
pub fn oracle_mu_star(
    family: &AffineFamily,
    etas: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<(f64, Bracket)>> {
    etas.par_iter()
        .map(|&eta| {
            Ok((
                eta,
                bifurcation_scan(&family.gamma_hat(eta), &[], opts)?.mu_star,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// Upper envelope is a minimum of lines (always concave).
    pub structural: bool,
    /// Samples outside `[μ_L, μ_U + 1e-6]`.
    pub sandwich_violations: Vec<f64>,
    /// Interior samples lying more than 1e-4 below their chord.
    pub concavity_violations: Vec<f64>,
    pub note: Option<String>,
}

impl ConcavityReport {
    pub fn ok(&self) -> bool {
        self.structural
            && self.sandwich_violations.is_empty()
            && self.concavity_violations.is_empty()
    }
}

/// Check oracle samples `(η, μ* bracket)` against the envelopes and for
/// concavity along the sequence.
pub fn concavity_report(result: &FamilyScanResult, samples: &[(f64, Bracket)]) -> ConcavityReport {
    // min of affine functions: concave by construction; spot-check midpoints
    let structural = result.anchors.len() < 2 || {
        let (lo, hi) = result.eta_range;
        (0..64).all(|j| {
            let x = lo + (hi - lo) * j as f64 / 64.0;
            let y = lo + (hi - lo) * (j + 1) as f64 / 64.0;
            let mid = result.mu_upper_env(0.5 * (x + y));
            mid >= 0.5 * (result.mu_upper_env(x) + result.mu_upper_env(y)) - 1e-12
        })
    };
    let sandwich_violations = samples
        .iter()
        .filter(|(eta, b)| {
            b.hi < result.mu_lower_env(*eta) - 1e-6 || b.lo > result.mu_upper_env(*eta) + 1e-6
        })
        .map(|(eta, _)| *eta)
        .collect();
    let mut concavity_violations = Vec::new();
    let mut note = None;
    if samples.len() < 3 {
        note = Some("insufficient for concavity sequence check".to_string());
    } else {
        for w in samples.windows(3) {
            let (x0, y0) = (w[0].0, w[0].1.mid());
            let (x1, y1) = (w[1].0, w[1].1.mid());
            let (x2, y2) = (w[2].0, w[2].1.mid());
            let chord = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0);
            if y1 < chord - 1e-4 {
                concavity_violations.push(x1);
            }
        }
    }
    ConcavityReport {
        structural,
        sandwich_violations,
        concavity_violations,
        note,
    }
}
