//! T-periodic real functions.
//!
//! [`TrigPoly`] is a truncated Fourier series with exact algebra (products,
//! derivatives, antiderivatives). [`PeriodicFn`] is any evaluable periodic
//! function: a parsed expression, a trigonometric polynomial, or an affine
//! combination / time shift of those.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::exprparse::{self, Expression, Func, Params, Program};

/// Default number of quadrature samples on one period.
pub const DEFAULT_SAMPLES: usize = 2048;
/// Quadrature doubling stops once successive estimates agree to this.
pub const QUAD_REL_TOL: f64 = 1e-10;
const MAX_SAMPLES: usize = 1 << 20;

/// `c0 + Σ a_k cos(kωt) + Σ b_k sin(kωt)` with `ω = 2π/period`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    period: f64,
    c0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn check_period(period: f64) -> Result<()> {
    if period > 0.0 && period.is_finite() {
        Ok(())
    } else {
        Err(Error::BadPeriod(period))
    }
}

impl TrigPoly {
    pub fn new(period: f64, c0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<TrigPoly> {
        check_period(period)?;
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if !c0.is_finite() || a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "non-finite trigonometric coefficient".into(),
            ));
        }
        Ok(TrigPoly { period, c0, a, b })
    }

    pub fn zero(period: f64) -> TrigPoly {
        TrigPoly::constant(period, 0.0)
    }

    pub fn constant(period: f64, c0: f64) -> TrigPoly {
        TrigPoly {
            period,
            c0,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    /// `amp·cos(kωt)`.
    pub fn cos_mode(period: f64, k: usize, amp: f64) -> TrigPoly {
        let mut p = TrigPoly::zero(period).padded(k);
        if k == 0 {
            p.c0 = amp;
        } else {
            p.a[k - 1] = amp;
        }
        p
    }

    /// `amp·sin(kωt)`.
    pub fn sin_mode(period: f64, k: usize, amp: f64) -> TrigPoly {
        let mut p = TrigPoly::zero(period).padded(k);
        if k > 0 {
            p.b[k - 1] = amp;
        }
        p
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Exact average over one period.
    pub fn mean(&self) -> f64 {
        self.c0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.b
    }

    /// Largest coefficient magnitude.
    pub fn coeff_norm(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .fold(self.c0.abs(), |m, v| m.max(v.abs()))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let theta = self.omega() * t;
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = self.c0;
        for (ak, bk) in self.a.iter().zip(&self.b) {
            acc += ak * c + bk * s;
            let c_next = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = c_next;
        }
        acc
    }

    /// Term-wise derivative.
    pub fn derivative(&self) -> TrigPoly {
        let w = self.omega();
        let mut a = Vec::with_capacity(self.order());
        let mut b = Vec::with_capacity(self.order());
        for (k, (ak, bk)) in self.a.iter().zip(&self.b).enumerate() {
            let kw = (k + 1) as f64 * w;
            a.push(bk * kw);
            b.push(-ak * kw);
        }
        TrigPoly {
            period: self.period,
            c0: 0.0,
            a,
            b,
        }
    }

    /// `∫₀ᵗ p(s) ds` in closed form.
    pub fn integral_from_zero(&self, t: f64) -> f64 {
        let w = self.omega();
        let theta = w * t;
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = self.c0 * t;
        for (k, (ak, bk)) in self.a.iter().zip(&self.b).enumerate() {
            let kw = (k + 1) as f64 * w;
            acc += ak * s / kw + bk * (1.0 - c) / kw;
            let c_next = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = c_next;
        }
        acc
    }

    /// Exact product via product-to-sum formulas.
    ///
    /// # Panics
    /// If the periods differ.
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        assert_same_period(self.period, other.period);
        let n = self.order() + other.order();
        let mut out = TrigPoly::constant(self.period, self.c0 * other.c0).padded(n);
        for k in 0..other.order() {
            out.a[k] += self.c0 * other.a[k];
            out.b[k] += self.c0 * other.b[k];
        }
        for j in 0..self.order() {
            out.a[j] += other.c0 * self.a[j];
            out.b[j] += other.c0 * self.b[j];
        }
        for j in 1..=self.order() {
            let (aj, bj) = (self.a[j - 1], self.b[j - 1]);
            for k in 1..=other.order() {
                let (ak, bk) = (other.a[k - 1], other.b[k - 1]);
                let cc = 0.5 * (aj * ak + bj * bk);
                let cc_sum = 0.5 * (aj * ak - bj * bk);
                out.add_cos(j as isize - k as isize, cc);
                out.add_cos((j + k) as isize, cc_sum);
                // cos(j)·sin(k) and sin(j)·cos(k)
                out.add_sin((j + k) as isize, 0.5 * (aj * bk + bj * ak));
                out.add_sin(k as isize - j as isize, 0.5 * (aj * bk - bj * ak));
            }
        }
        out
    }

    fn add_cos(&mut self, m: isize, v: f64) {
        let m = m.unsigned_abs();
        if m == 0 {
            self.c0 += v;
        } else {
            self.a[m - 1] += v;
        }
    }

    fn add_sin(&mut self, m: isize, v: f64) {
        if m == 0 {
            return;
        }
        let sign = if m > 0 { 1.0 } else { -1.0 };
        self.b[m.unsigned_abs() - 1] += sign * v;
    }

    /// Zero-padded copy of order at least `order`.
    pub fn padded(mut self, order: usize) -> TrigPoly {
        if self.a.len() < order {
            self.a.resize(order, 0.0);
            self.b.resize(order, 0.0);
        }
        self
    }

    /// Drop modes above `order` (pads with zeros when `order` exceeds it).
    pub fn truncated(&self, order: usize) -> TrigPoly {
        let mut p = self.clone().padded(order);
        p.a.truncate(order);
        p.b.truncate(order);
        p
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        assert_same_period(self.period, other.period);
        let n = self.order().max(other.order());
        let mut out = self.clone().padded(n);
        out.c0 += other.c0;
        for k in 0..other.order() {
            out.a[k] += other.a[k];
            out.b[k] += other.b[k];
        }
        out
    }

    pub fn scale(&self, s: f64) -> TrigPoly {
        TrigPoly {
            period: self.period,
            c0: self.c0 * s,
            a: self.a.iter().map(|v| v * s).collect(),
            b: self.b.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn with_c0(mut self, c0: f64) -> TrigPoly {
        self.c0 = c0;
        self
    }

    /// Coefficients of `t ↦ p(t + s)`.
    pub fn shifted(&self, s: f64) -> TrigPoly {
        let w = self.omega();
        let mut out = self.clone();
        for k in 0..self.order() {
            let (sn, cs) = ((k + 1) as f64 * w * s).sin_cos();
            let (ak, bk) = (self.a[k], self.b[k]);
            out.a[k] = ak * cs + bk * sn;
            out.b[k] = bk * cs - ak * sn;
        }
        out
    }

    /// The same function as an expression tree.
    pub fn to_expression(&self) -> Expression {
        let w = self.omega();
        let angle = |k: usize| {
            if (self.period - 2.0 * PI).abs() == 0.0 {
                if k == 1 {
                    Expression::T
                } else {
                    Expression::num(k as f64) * Expression::T
                }
            } else {
                Expression::num(k as f64 * w) * Expression::T
            }
        };
        let mut acc = Expression::num(self.c0);
        for k in 1..=self.order() {
            for (coef, func) in [(self.a[k - 1], Func::Cos), (self.b[k - 1], Func::Sin)] {
                if coef != 0.0 {
                    acc = acc + Expression::num(coef) * Expression::call(func, angle(k));
                }
            }
        }
        acc
    }
}

fn assert_same_period(a: f64, b: f64) {
    assert!(
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
        "period mismatch: {a} vs {b}"
    );
}

/// `f(jT/N)` for `j = 0..N`.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub period: f64,
    pub samples: Vec<f64>,
}

impl SampleGrid {
    pub fn new(f: &PeriodicFn, n_samples: usize) -> Result<SampleGrid> {
        let h = f.period() / n_samples as f64;
        let samples = (0..n_samples)
            .map(|j| f.eval(j as f64 * h))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleGrid {
            period: f.period(),
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
enum Body {
    Expr(Arc<(Expression, Program)>),
    Trig(TrigPoly),
    Affine(Arc<AffineBody>),
    Shifted(Arc<PeriodicFn>, f64),
}

fn compiled(e: Expression) -> Arc<(Expression, Program)> {
    let p = Program::compile(&e);
    Arc::new((e, p))
}

#[derive(Debug)]
struct AffineBody {
    constant: f64,
    terms: Vec<(f64, PeriodicFn)>,
}

/// An evaluable T-periodic function. Cheap to clone; immutable.
#[derive(Debug, Clone)]
pub struct PeriodicFn {
    period: f64,
    body: Body,
    mean: Arc<OnceLock<f64>>,
}

impl PeriodicFn {
    fn with_body(period: f64, body: Body) -> PeriodicFn {
        PeriodicFn {
            period,
            body,
            mean: Arc::new(OnceLock::new()),
        }
    }

    /// Parse `src`, bind `params` and check periodicity on a probe grid.
    pub fn parse(src: &str, period: f64, params: &Params) -> Result<PeriodicFn> {
        let expr = exprparse::parse(src)?;
        PeriodicFn::from_expression(&expr, period, params)
    }

    pub fn from_expression(expr: &Expression, period: f64, params: &Params) -> Result<PeriodicFn> {
        check_period(period)?;
        let bound = expr.bind(params)?;
        let f = PeriodicFn::with_body(period, Body::Expr(compiled(bound)));
        f.check_periodic()?;
        Ok(f)
    }

    pub fn constant(period: f64, c: f64) -> PeriodicFn {
        PeriodicFn::from(TrigPoly::constant(period, c))
    }

    /// `constant + Σ coef·f`.
    pub fn affine(period: f64, constant: f64, terms: Vec<(f64, PeriodicFn)>) -> PeriodicFn {
        for (_, f) in &terms {
            assert_same_period(period, f.period);
        }
        PeriodicFn::with_body(
            period,
            Body::Affine(Arc::new(AffineBody { constant, terms })),
        )
    }

    /// `t ↦ self(t + s)`.
    pub fn shifted(&self, s: f64) -> PeriodicFn {
        match &self.body {
            Body::Trig(p) => PeriodicFn::from(p.shifted(s)),
            _ => PeriodicFn::with_body(self.period, Body::Shifted(Arc::new(self.clone()), s)),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn as_trig(&self) -> Option<&TrigPoly> {
        match &self.body {
            Body::Trig(p) => Some(p),
            _ => None,
        }
    }

    /// Value at `t` without reducing `t` modulo the period.
    pub fn eval_raw(&self, t: f64) -> Result<f64> {
        match &self.body {
            Body::Expr(e) => Ok(e.1.eval(t, &Params::new())?),
            Body::Trig(p) => Ok(p.eval(t)),
            Body::Affine(aff) => {
                let mut acc = aff.constant;
                for (c, f) in &aff.terms {
                    acc += c * f.eval_raw(t)?;
                }
                Ok(acc)
            }
            Body::Shifted(f, s) => f.eval_raw(t + s),
        }
    }

    /// Value at `t mod T`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Invalid(format!("non-finite time {t}")));
        }
        self.eval_raw(t.rem_euclid(self.period))
    }

    /// Compare `f(t)` against `f(t + T)` on a 64-point probe grid.
    pub fn check_periodic(&self) -> Result<()> {
        let n = 64;
        let h = self.period / n as f64;
        let mut pairs = Vec::with_capacity(n);
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let t = (j as f64 + std::f64::consts::FRAC_1_PI) * h;
            let v0 = self.eval_raw(t)?;
            let v1 = self.eval_raw(t + self.period)?;
            scale = scale.max(v0.abs());
            pairs.push((t, (v0 - v1).abs()));
        }
        for (t, gap) in pairs {
            if gap > 1e-9 * (1.0 + scale) {
                return Err(Error::NotPeriodic { t, gap });
            }
        }
        Ok(())
    }

    /// Exact derivative: term-wise for trigonometric polynomials, symbolic
    /// for expressions.
    pub fn derivative(&self) -> PeriodicFn {
        match &self.body {
            Body::Trig(p) => PeriodicFn::from(p.derivative()),
            Body::Expr(e) => PeriodicFn::with_body(
                self.period,
                Body::Expr(compiled(exprparse::derivative(&e.0))),
            ),
            Body::Affine(aff) => PeriodicFn::affine(
                self.period,
                0.0,
                aff.terms
                    .iter()
                    .map(|(c, f)| (*c, f.derivative()))
                    .collect(),
            ),
            Body::Shifted(f, s) => f.derivative().shifted(*s),
        }
    }

    /// The function as a closed-form expression in `t`.
    pub fn to_expression(&self) -> Expression {
        match &self.body {
            Body::Expr(e) => e.0.clone(),
            Body::Trig(p) => p.to_expression(),
            Body::Affine(aff) => {
                let mut acc = Expression::num(aff.constant);
                for (c, f) in &aff.terms {
                    let term = f.to_expression();
                    acc = if *c == 1.0 {
                        acc + term
                    } else {
                        acc + Expression::num(*c) * term
                    };
                }
                acc
            }
            Body::Shifted(f, s) => f
                .to_expression()
                .substitute_t(&(Expression::T + Expression::num(*s))),
        }
    }

    /// Cached average with the default quadrature.
    pub fn mean(&self) -> Result<f64> {
        if let Some(m) = self.mean.get() {
            return Ok(*m);
        }
        let m = average(self, DEFAULT_SAMPLES)?;
        Ok(*self.mean.get_or_init(|| m))
    }

    /// Largest `|f|` on an `n`-point grid.
    pub fn max_abs_on_grid(&self, n: usize) -> Result<f64> {
        Ok(SampleGrid::new(self, n)?.max_abs())
    }
}

impl From<TrigPoly> for PeriodicFn {
    fn from(p: TrigPoly) -> PeriodicFn {
        let mean = OnceLock::new();
        let _ = mean.set(p.c0);
        PeriodicFn {
            period: p.period,
            body: Body::Trig(p),
            mean: Arc::new(mean),
        }
    }
}

/// `(1/T)∫₀ᵀ f` by the uniform periodic trapezoid rule, doubling the sample
/// count from `n_samples` until successive estimates agree. Exact for
/// trigonometric polynomials.
pub fn average(f: &PeriodicFn, n_samples: usize) -> Result<f64> {
    if let Body::Trig(p) = &f.body {
        return Ok(p.c0);
    }
    if n_samples < 16 {
        return Err(Error::TooFewSamples {
            needed: 16,
            got: n_samples,
        });
    }
    let grid = SampleGrid::new(f, n_samples)?;
    let mut n = n_samples;
    let mut mean = grid.mean();
    let mut scale = grid.max_abs();
    while n < MAX_SAMPLES {
        let h = f.period / n as f64;
        let mut mid_sum = 0.0;
        for j in 0..n {
            let v = f.eval((j as f64 + 0.5) * h)?;
            scale = scale.max(v.abs());
            mid_sum += v;
        }
        let refined = 0.5 * (mean + mid_sum / n as f64);
        let change = (refined - mean).abs();
        mean = refined;
        n *= 2;
        if change <= QUAD_REL_TOL * refined.abs().max(scale).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(mean)
}

/// `f − mean(f)`.
pub fn center(f: &PeriodicFn) -> Result<PeriodicFn> {
    if let Body::Trig(p) = &f.body {
        return Ok(PeriodicFn::from(p.clone().with_c0(0.0)));
    }
    if f.mean.get() == Some(&0.0) {
        return Ok(f.clone());
    }
    let m = f.mean()?;
    let c = PeriodicFn::affine(f.period, -m, vec![(1.0, f.clone())]);
    let _ = c.mean.set(0.0);
    Ok(c)
}

/// Discrete Fourier coefficients up to `order` from `n_samples` uniform
/// samples. Trigonometric polynomials are truncated exactly.
pub fn fourier_truncate(f: &PeriodicFn, order: usize, n_samples: usize) -> Result<TrigPoly> {
    if let Body::Trig(p) = &f.body {
        return Ok(p.truncated(order));
    }
    let needed = 2 * order + 2;
    if n_samples < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: n_samples,
        });
    }
    let grid = SampleGrid::new(f, n_samples)?;
    Ok(fourier_from_samples(&grid, order))
}

pub(crate) fn fourier_from_samples(grid: &SampleGrid, order: usize) -> TrigPoly {
    let n = grid.len();
    let (cos_tab, sin_tab): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|m| {
            let (s, c) = (2.0 * PI * m as f64 / n as f64).sin_cos();
            (c, s)
        })
        .unzip();
    let mut a = vec![0.0; order];
    let mut b = vec![0.0; order];
    for k in 1..=order {
        let (mut sa, mut sb) = (0.0, 0.0);
        for (j, v) in grid.samples.iter().enumerate() {
            let m = (k * j) % n;
            sa += v * cos_tab[m];
            sb += v * sin_tab[m];
        }
        a[k - 1] = 2.0 * sa / n as f64;
        b[k - 1] = 2.0 * sb / n as f64;
    }
    TrigPoly {
        period: grid.period,
        c0: grid.mean(),
        a,
        b,
    }
}
