use std::path::{Path, PathBuf};

use serde_json::json;

use riccati_disc::family::{self, AffineFamily};
use riccati_disc::functionals::DEFAULT_TAU;
use riccati_disc::harmonic_balance::{hb_sequence, HBOptions};
use riccati_disc::oracle::{
    count_cycles, count_cycles_general, default_range, displacement_profile, general_range,
    CanonicalField, CycleInfo, Displacement, ScanOptions, Stability,
};
use riccati_disc::periodic::center;
use riccati_disc::reduction::{self, ReductionKind, ReductionRecord};
use riccati_disc::{Bracket, Classification, PeriodicFn};

use crate::csv::{real, short, Table};
use crate::problem::{self, Problem, ProblemFile};
use crate::{Common, Failure, Verdict};

type Outcome = Result<Verdict, Failure>;

fn load(common: &Common) -> Result<(ProblemFile, Problem), Failure> {
    if common.grid < 16 {
        return Err(Failure::Input("--grid must be at least 16".into()));
    }
    // rejects NaN too
    let positive = |x: f64| x > 0.0;
    if !positive(common.newton_tol) || !positive(common.cycle_tol) {
        return Err(Failure::Input("tolerances must be positive".into()));
    }
    let file = problem::read(&common.input)?;
    let overrides = problem::parse_overrides(&common.params)?;
    let built = file.build(&overrides)?;
    Ok((file, built))
}

fn hb_options(common: &Common) -> HBOptions {
    HBOptions {
        newton_tol: common.newton_tol,
        samples: common.grid,
        ..HBOptions::default()
    }
}

fn reduction_grid(common: &Common) -> usize {
    common.grid.max(reduction::DEFAULT_GRID)
}

fn family_at(family: &AffineFamily, eta: Option<f64>) -> Result<PeriodicFn, Failure> {
    eta.map(|e| family.gamma(e))
        .ok_or_else(|| Failure::Input("family problems need --eta here".into()))
}

/// Canonical `γ`, reducing general equations on the way.
fn canonical_gamma(common: &Common, p: &Problem) -> Result<PeriodicFn, Failure> {
    match p {
        Problem::Canonical(g) => Ok(g.clone()),
        Problem::General(eq) => {
            Ok(reduction::reduce_nonvanishing(eq, reduction_grid(common))?.gamma)
        }
        Problem::Family { family, .. } => family_at(family, common.eta),
    }
}

fn verdict(c: Classification) -> Verdict {
    if c.is_determinate() {
        Verdict::Determinate
    } else {
        Verdict::Undetermined
    }
}

fn show(b: &Bracket) -> String {
    format!("[{}, {}]", short(b.lo), short(b.hi))
}

pub fn estimate(common: &Common, order: usize, out: Option<&Path>) -> Outcome {
    if order == 0 {
        return Err(Failure::Input("--order must be at least 1".into()));
    }
    let (_, p) = load(common)?;
    let gamma = canonical_gamma(common, &p)?;
    let mean = gamma.mean()?;
    let scale = 1.0 + gamma.max_abs_on_grid(256)?;
    if mean > 1e-12 * scale {
        println!("mean(γ) = {} > 0", short(mean));
        println!("{}", Classification::NoCycles);
        return Ok(Verdict::Determinate);
    }
    let gamma_hat = center(&gamma)?;
    let steps = hb_sequence(&gamma_hat, order, &hb_options(common));

    let mut table = Table::new(&["order", "mu_lo", "mu_hi", "delta_lo", "delta_hi"]);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut first_error = None;
    for step in &steps {
        match &step.outcome {
            Ok((_, mu)) => {
                let delta = mu.shifted(-mean);
                println!(
                    "order {:>2}: μ* ∈ {}  Δ ∈ {}",
                    step.order,
                    show(mu),
                    show(&delta)
                );
                table.row(&[
                    step.order.to_string(),
                    real(mu.lo),
                    real(mu.hi),
                    real(delta.lo),
                    real(delta.hi),
                ]);
                lo = lo.max(delta.lo);
                hi = hi.min(delta.hi);
            }
            Err(e) => {
                println!("order {:>2}: failed: {e}", step.order);
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    if let Some(path) = out {
        table.write_to(path)?;
    }
    if !lo.is_finite() {
        let e = first_error.expect("every order failed");
        return Err(Failure::Numeric(format!(
            "no harmonic-balance order converged: {e}"
        )));
    }
    if lo > hi {
        if lo - hi > 1e-9 * (1.0 + lo.abs()) {
            return Err(Failure::Numeric(format!(
                "per-order brackets are inconsistent: {} > {}",
                short(lo),
                short(hi)
            )));
        }
        let m = 0.5 * (lo + hi);
        (lo, hi) = (m, m);
    }
    let delta = Bracket { lo, hi };
    let class = Classification::from_delta(&delta, DEFAULT_TAU);
    println!("{class}, Δ ∈ {}", show(&delta));
    Ok(verdict(class))
}

pub struct OracleArgs {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub samples: usize,
    pub mu_offset: f64,
    pub out_dir: Option<PathBuf>,
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Attractive => "attractive",
        Stability::Repulsive => "repulsive",
        Stability::Semistable => "semistable",
    }
}

pub fn oracle(common: &Common, args: OracleArgs) -> Outcome {
    let (_, p) = load(common)?;
    let mut opts = ScanOptions {
        samples: args.samples.max(8),
        cycle_tol: common.cycle_tol,
        ..ScanOptions::default()
    };
    let fill = |auto: (f64, f64)| (args.x_min.unwrap_or(auto.0), args.x_max.unwrap_or(auto.1));

    let (range, class, cycles, profile) = match &p {
        Problem::General(eq) => {
            if args.mu_offset != 0.0 {
                return Err(Failure::Input(
                    "--mu-offset applies to canonical problems only".into(),
                ));
            }
            let range = fill(general_range(eq)?);
            opts.range = Some(range);
            let (class, cycles) = count_cycles_general(eq, &opts)?;
            let profile = displacement_profile(eq, range.0, range.1, opts.samples, opts.tol)?;
            (range, class, cycles, profile)
        }
        _ => {
            let gamma = canonical_gamma(common, &p)?;
            let range = fill(default_range(&gamma, args.mu_offset)?);
            opts.range = Some(range);
            let (class, cycles) = count_cycles(&gamma, args.mu_offset, &opts)?;
            let field = CanonicalField::new(&gamma, args.mu_offset);
            let profile = displacement_profile(&field, range.0, range.1, opts.samples, opts.tol)?;
            (range, class, cycles, profile)
        }
    };

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        let mut t = Table::new(&["x0", "displacement"]);
        for (x, d) in &profile {
            let cell = match d {
                Displacement::Value(v) => real(*v),
                Displacement::Escape(_) => "ESC".to_string(),
            };
            t.row(&[real(*x), cell]);
        }
        t.write_to(&dir.join("profile.csv"))?;
        let mut t = Table::new(&["x0", "h", "stability"]);
        for c in &cycles {
            t.row(&[
                real(c.x0),
                real(c.h),
                stability_name(c.stability).to_string(),
            ]);
        }
        t.write_to(&dir.join("cycles.csv"))?;
    }

    println!(
        "scan range [{}, {}], {} samples",
        short(range.0),
        short(range.1),
        opts.samples
    );
    for CycleInfo {
        x0, h, stability, ..
    } in &cycles
    {
        println!(
            "cycle x0 = {}  h = {}  {}",
            short(*x0),
            short(*h),
            stability_name(*stability)
        );
    }
    println!("{class}");
    Ok(verdict(class))
}

pub fn family(common: &Common, order: usize, points: usize, out_dir: Option<&Path>) -> Outcome {
    if order == 0 || points < 2 {
        return Err(Failure::Input("need --order ≥ 1 and --points ≥ 2".into()));
    }
    let (_, p) = load(common)?;
    let Problem::Family {
        family: fam,
        eta_min,
        eta_max,
    } = &p
    else {
        return Err(Failure::Input(
            "family command needs a family problem".into(),
        ));
    };
    let grid = family::uniform_grid(*eta_min, *eta_max, points);
    let result = family::scan(fam, &grid, order, &hb_options(common))?;

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut t = Table::new(&["eta0", "K", "L", "M"]);
        for a in &result.anchors {
            t.row(&[real(a.eta0), real(a.k), real(a.l), real(a.m)]);
        }
        t.write_to(&dir.join("anchors.csv"))?;
        let mut t = Table::new(&["eta", "mu_L", "mu_U", "gamma_bar"]);
        for row in result.envelope_samples(512) {
            t.row(&row.map(real));
        }
        t.write_to(&dir.join("envelope.csv"))?;
    }

    let pair = |p: &Option<(f64, f64)>| match p {
        Some((e, g)) => format!("({}, {})", short(*e), short(*g)),
        None => "-".to_string(),
    };
    for (i, a) in result.anchors.iter().enumerate() {
        let mark = if a.inherited { "  (inherited)" } else { "" };
        println!(
            "anchor η0 = {}: K = {}  L = {}  M = {}  line ∩ {}  tent ∩ {}{mark}",
            short(a.eta0),
            short(a.k),
            short(a.l),
            short(a.m),
            pair(&result.line_pairs[i]),
            pair(&result.tent_pairs[i]),
        );
    }
    println!("η* ∈ {}", show(&result.eta_bracket));
    Ok(Verdict::Determinate)
}

fn record_json(rec: &ReductionRecord) -> serde_json::Value {
    match &rec.kind {
        ReductionKind::Nonvanishing { a2, a_fn } => json!({
            "kind": "nonvanishing",
            "a2": a2.to_expression().to_string(),
            "A": a_fn.to_expression().to_string(),
        }),
        ReductionKind::Singular { u0, m_fn, n_fn } => json!({
            "kind": "singular",
            "u0": u0,
            "m": m_fn.to_expression().to_string(),
            "n": n_fn.to_expression().to_string(),
        }),
    }
}

pub fn reduce(common: &Common, u0: Option<f64>, out: Option<&Path>) -> Outcome {
    let (file, p) = load(common)?;
    let Problem::General(eq) = &p else {
        return Err(Failure::Input(
            "reduce needs a general problem (a2, a1, a0)".into(),
        ));
    };
    let grid = reduction_grid(common);
    let rec = match u0 {
        Some(u) => reduction::singular_reduce(eq, u, grid)?,
        None => reduction::reduce_nonvanishing(eq, grid)?,
    };
    let gamma_text = rec.gamma.to_expression().to_string();
    let canonical = ProblemFile {
        period: Some(file.period()),
        gamma: Some(gamma_text.clone()),
        reduction: Some(record_json(&rec)),
        ..ProblemFile::default()
    };
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&canonical)
            .map_err(|e| Failure::Numeric(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
    }
    println!("γ(t) = {gamma_text}");
    println!("mean(γ) = {}", real(rec.gamma.mean()?));
    Ok(Verdict::Determinate)
}

pub fn hb(common: &Common, order: usize, out: Option<&Path>) -> Outcome {
    if order == 0 {
        return Err(Failure::Input("--order must be at least 1".into()));
    }
    let (_, p) = load(common)?;
    let gamma = canonical_gamma(common, &p)?;
    let gamma_hat = center(&gamma)?;
    let steps = hb_sequence(&gamma_hat, order, &hb_options(common));

    let mut table = Table::new(&["order", "mu_n", "mu_lo", "mu_hi", "k", "a_k", "b_k"]);
    let mut any = false;
    for step in &steps {
        let (sol, mu) = match &step.outcome {
            Ok(v) => v,
            Err(e) => {
                println!("order {}: failed: {e}", step.order);
                continue;
            }
        };
        any = true;
        println!(
            "order {}: μ_n = {}  μ* ∈ {}  residual {}",
            step.order,
            short(sol.mu_n),
            show(mu),
            short(sol.residual_sup)
        );
        let (a, b) = (sol.p_n.cos_coeffs(), sol.p_n.sin_coeffs());
        for k in 0..a.len() {
            println!(
                "  k = {:>2}: a = {:>20}  b = {:>20}",
                k + 1,
                real(a[k]),
                real(b[k])
            );
            table.row(&[
                step.order.to_string(),
                real(sol.mu_n),
                real(mu.lo),
                real(mu.hi),
                (k + 1).to_string(),
                real(a[k]),
                real(b[k]),
            ]);
        }
    }
    if let Some(path) = out {
        table.write_to(path)?;
    }
    if !any {
        return Err(Failure::Numeric(
            "no harmonic-balance order converged".into(),
        ));
    }
    Ok(Verdict::Determinate)
}
