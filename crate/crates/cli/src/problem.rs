//! Problem files: JSON with a period, optional parameters, and exactly one
//! of a canonical `gamma`, general coefficients `a2`/`a1`/`a0`, or an affine
//! `family`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use riccati_disc::exprparse::{self, Params};
use riccati_disc::family::AffineFamily;
use riccati_disc::reduction::GeneralRiccati;
use riccati_disc::PeriodicFn;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Provenance written by `reduce`; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub base: String,
    pub dir: String,
    pub eta_min: f64,
    pub eta_max: f64,
}

pub enum Problem {
    Canonical(PeriodicFn),
    General(GeneralRiccati),
    Family {
        family: AffineFamily,
        eta_min: f64,
        eta_max: f64,
    },
}

/// Input problems: bad files, schema violations, unparsable expressions.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub fn read(path: &Path) -> Result<ProblemFile, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    file.validate()?;
    Ok(file)
}

impl ProblemFile {
    pub fn period(&self) -> f64 {
        self.period.unwrap_or(2.0 * PI)
    }

    /// Schema checks and a syntax check of every expression.
    pub fn validate(&self) -> Result<(), InputError> {
        let general = self.a2.is_some() || self.a1.is_some() || self.a0.is_some();
        let forms = [self.gamma.is_some(), general, self.family.is_some()];
        match forms.iter().filter(|b| **b).count() {
            1 => {}
            0 => {
                return Err(InputError(
                    "problem needs one of gamma, a2/a1/a0, family".into(),
                ))
            }
            _ => {
                return Err(InputError(
                    "gamma, a2/a1/a0 and family are mutually exclusive".into(),
                ))
            }
        }
        if general && self.a2.is_none() {
            return Err(InputError("general form requires a2".into()));
        }
        let p = self.period();
        if !(p > 0.0 && p.is_finite()) {
            return Err(InputError(format!("period must be positive, got {p}")));
        }
        for (name, src) in self.expressions() {
            exprparse::parse(src).map_err(|e| InputError(format!("{name}: {e}")))?;
        }
        if let Some(f) = &self.family {
            if f.eta_min.partial_cmp(&f.eta_max) != Some(std::cmp::Ordering::Less) {
                return Err(InputError("family needs eta_min < eta_max".into()));
            }
        }
        Ok(())
    }

    fn expressions(&self) -> Vec<(&'static str, &str)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("gamma", &self.gamma),
            ("a2", &self.a2),
            ("a1", &self.a1),
            ("a0", &self.a0),
        ] {
            if let Some(s) = v {
                out.push((name, s.as_str()));
            }
        }
        if let Some(f) = &self.family {
            out.push(("family.base", f.base.as_str()));
            out.push(("family.dir", f.dir.as_str()));
        }
        out
    }

    /// Build the numeric problem with `overrides` applied on top of `params`.
    pub fn build(&self, overrides: &Params) -> Result<Problem, InputError> {
        let mut params = self.params.clone();
        params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        let period = self.period();
        let fun = |name: &str, src: &str| {
            PeriodicFn::parse(src, period, &params).map_err(|e| InputError(format!("{name}: {e}")))
        };
        if let Some(g) = &self.gamma {
            return Ok(Problem::Canonical(fun("gamma", g)?));
        }
        if let Some(f) = &self.family {
            let family =
                AffineFamily::new(fun("family.base", &f.base)?, fun("family.dir", &f.dir)?)?;
            return Ok(Problem::Family {
                family,
                eta_min: f.eta_min,
                eta_max: f.eta_max,
            });
        }
        let a2 = fun("a2", self.a2.as_deref().unwrap_or("0"))?;
        let a1 = fun("a1", self.a1.as_deref().unwrap_or("0"))?;
        let a0 = fun("a0", self.a0.as_deref().unwrap_or("0"))?;
        Ok(Problem::General(GeneralRiccati::new(a2, a1, a0)?))
    }
}

/// `name=value` pairs from the command line.
pub fn parse_overrides(items: &[String]) -> Result<Params, InputError> {
    let mut out = Params::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| InputError(format!("expected name=value, got '{item}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| InputError(format!("'{v}' is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}
