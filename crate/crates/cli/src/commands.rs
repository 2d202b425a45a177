use std::fs;
use std::io::Write;

use anyhow::Context;
use serde::Serialize;
use serde_json::json;

use stadium_core::coding::code_point;
use stadium_core::combinatorics::{bound_report, count_q, exact_le_float, BoundReport};
use stadium_core::dynamics::orbit as iterate;
use stadium_core::language::{
    complexity_csv, complexity_rows, entropy_estimate, sample_language, word_sets, ComplexityRow,
    EntropyEstimate, LanguageSample, SampleConfig, MAX_WORD_LEN,
};
use stadium_core::saddles::{survey, verify_uniqueness, BoundAuditRow, FamilyDiagnostics, SaddleConfig};
use stadium_core::wavefront::defocusing_report;
use stadium_core::{PhasePoint, StadiumTable};

use crate::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;
const MAX_COMPOSITION_J: usize = 200;
const WORD_SET_MAX_LEN: usize = 6;
const REPORT_DEFOCUSING_SEGMENTS: usize = 10_000;

pub enum Outcome {
    Passed,
    Failed,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Passed
        } else {
            Outcome::Failed
        }
    }
}

pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn emit(cfg: &ExperimentConfig, content: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn table(cfg: &ExperimentConfig) -> Result<StadiumTable, CliError> {
    StadiumTable::new(cfg.l).map_err(|e| usage(e.to_string()))
}

pub fn bounds(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let report = bound_report(cfg.j_max)?;
    if cfg.json {
        emit(cfg, &to_json(&json!({ "schema_version": SCHEMA_VERSION, "bounds": report }))?)?;
    } else {
        emit(cfg, &bounds_text(&report))?;
    }
    Ok(Outcome::from_bool(report.all_passed()))
}

fn bounds_text(r: &BoundReport) -> String {
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let mut s = format!(
        "W(1/e)            {:.17}\n\
         |w e^w - 1/e|     {:.3e}\n\
         a                 {:.17}\n\
         (2/a-1)^a         {:.17}\n\
         e^(2W(1/e))       {:.17}\n\
         2(2/a-1)^a        {:.17}\n\
         log bound         {:.17}\n\
         checks            {}/{} passed (j <= {})\n",
        r.w,
        r.w_residual,
        r.a,
        r.base,
        r.base_identity,
        r.final_bound,
        r.log_final_bound,
        r.checks.len() - failed.len(),
        r.checks.len(),
        r.j_max
    );
    for name in failed {
        s.push_str(&format!("FAILED            {name}\n"));
    }
    s
}

#[derive(Serialize)]
struct CompositionRow {
    j: usize,
    /// Number of parts with the most compositions.
    k: usize,
    q_exact: String,
    q_bound: f64,
    holds: bool,
}

fn composition_rows(j_max: usize) -> Result<Vec<CompositionRow>, CliError> {
    if j_max > MAX_COMPOSITION_J {
        return Err(usage(format!("--j-max must be at most {MAX_COMPOSITION_J}")));
    }
    let base = bound_report(1)?.final_bound;
    let counts = count_q(j_max);
    Ok((1..=j_max)
        .map(|j| {
            let k = (1..=j).max_by_key(|&k| counts.q(j, k)).unwrap_or(1);
            let jf = j as f64;
            let q_bound = base.powi(j as i32) * jf.sqrt() / (std::f64::consts::PI / 2.0).sqrt();
            let q = counts.total(j);
            CompositionRow {
                j,
                k,
                q_exact: q.to_string(),
                q_bound,
                holds: exact_le_float(q, q_bound),
            }
        })
        .collect())
}

pub fn compositions(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let rows = composition_rows(cfg.j_max)?;
    let ok = rows.iter().all(|r| r.holds);
    if cfg.json {
        emit(cfg, &to_json(&json!({ "schema_version": SCHEMA_VERSION, "rows": rows }))?)?;
    } else {
        let mut s = String::from("j,k,Q_exact,Q_bound\n");
        for r in &rows {
            s.push_str(&format!("{},{},{},{:.17e}\n", r.j, r.k, r.q_exact, r.q_bound));
        }
        emit(cfg, &s)?;
    }
    for r in rows.iter().filter(|r| !r.holds) {
        eprintln!("bound violated at j = {}", r.j);
    }
    Ok(Outcome::from_bool(ok))
}

#[derive(Serialize)]
struct OrbitRow {
    step: usize,
    side: &'static str,
    local_coord: f64,
    x: f64,
    y: f64,
    theta: f64,
    tau: Option<f64>,
    flags: String,
    code: String,
}

fn orbit_row(table: &StadiumTable, step: usize, pp: &PhasePoint, tau: Option<f64>, flags: String) -> OrbitRow {
    let pos = pp.position(table);
    let code = code_point(pp)
        .letters()
        .iter()
        .map(|l| l.as_str())
        .collect::<Vec<_>>()
        .join("/");
    OrbitRow {
        step,
        side: pp.point.side.as_str(),
        local_coord: pp.point.coord,
        x: pos.x,
        y: pos.y,
        theta: pp.theta,
        tau,
        flags,
        code,
    }
}

pub fn orbit(cfg: &ExperimentConfig, s: f64, theta: f64, steps: usize) -> Result<Outcome, CliError> {
    let table = table(cfg)?;
    let start = PhasePoint::from_arclength(&table, s, theta).map_err(|e| usage(e.to_string()))?;
    let orbit = iterate(&table, &start, steps);
    let mut rows = vec![orbit_row(&table, 0, &start, None, String::new())];
    for (i, st) in orbit.steps.iter().enumerate() {
        rows.push(orbit_row(&table, i + 1, &st.point, Some(st.segment.tau), st.flags.label()));
    }
    if cfg.json {
        let stopped = orbit.stopped.as_ref().map(|e| e.to_string());
        emit(
            cfg,
            &to_json(&json!({ "schema_version": SCHEMA_VERSION, "rows": rows, "stopped": stopped }))?,
        )?;
    } else {
        let mut out = String::from("step,side,local_coord,x,y,theta,tau,flags,code\n");
        for r in &rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.step,
                r.side,
                r.local_coord,
                r.x,
                r.y,
                r.theta,
                r.tau.map(|t| t.to_string()).unwrap_or_default(),
                r.flags,
                r.code
            ));
        }
        emit(cfg, &out)?;
    }
    if let Some(e) = &orbit.stopped {
        eprintln!("orbit stopped after {} steps: {e}", orbit.steps.len());
        return Ok(Outcome::Failed);
    }
    Ok(Outcome::Passed)
}

fn sample(cfg: &ExperimentConfig, table: &StadiumTable) -> Result<LanguageSample, CliError> {
    if cfg.n_max < 2 || cfg.n_max > MAX_WORD_LEN {
        return Err(usage(format!("--n-max must lie in 2..={MAX_WORD_LEN}")));
    }
    Ok(sample_language(table, &SampleConfig::new(cfg.n_max, cfg.samples, cfg.seed))?)
}

#[derive(Serialize)]
struct ComplexitySummary {
    l: f64,
    samples: usize,
    seed: u64,
    skipped: usize,
    rows: Vec<ComplexityRow>,
    entropy: EntropyEstimate,
}

fn complexity_summary(cfg: &ExperimentConfig, ls: &LanguageSample) -> Result<ComplexitySummary, CliError> {
    Ok(ComplexitySummary {
        l: cfg.l,
        samples: ls.meta.samples,
        seed: ls.meta.seed,
        skipped: ls.meta.skipped,
        rows: complexity_rows(ls),
        entropy: entropy_estimate(ls, None)?,
    })
}

pub fn complexity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let table = table(cfg)?;
    let ls = sample(cfg, &table)?;
    let summary = complexity_summary(cfg, &ls)?;
    if cfg.json {
        let words = word_sets(&ls, WORD_SET_MAX_LEN);
        emit(
            cfg,
            &to_json(&json!({ "schema_version": SCHEMA_VERSION, "complexity": summary, "words": words }))?,
        )?;
    } else {
        emit(cfg, &complexity_csv(&ls))?;
    }
    eprintln!("{:>3} {:>10} {:>10} {:>9}", "n", "p_hat", "s_hat", "residual");
    for r in &summary.rows {
        eprintln!(
            "{:>3} {:>10} {:>10} {:>9}{}",
            r.n,
            r.p_hat,
            r.s_hat.map(|v| v.to_string()).unwrap_or_default(),
            r.cassaigne_residual.map(|v| v.to_string()).unwrap_or_default(),
            if r.saturated { "" } else { "  (unsaturated)" }
        );
    }
    let e = &summary.entropy;
    eprintln!(
        "entropy estimate {:.6} over n in [{}, {}]; analytic bound {:.6}; reference {:.6}",
        e.slope, e.window.0, e.window.1, e.analytic_bound, e.reference_lower
    );
    if let Some(n) = summary.rows.iter().find(|r| !r.saturated).map(|r| r.n) {
        eprintln!("warning: levels n >= {n} are not saturated");
    }
    Ok(Outcome::Passed)
}

#[derive(Serialize)]
struct SaddleSummary {
    l: f64,
    grid: usize,
    tol: f64,
    max_len: usize,
    audit: Vec<BoundAuditRow>,
    unique: bool,
    duplicates: Vec<(String, Vec<f64>)>,
    max_codes_per_composition: usize,
    without_composition: usize,
    diagnostics: Vec<FamilyDiagnostics>,
}

fn saddle_run(cfg: &ExperimentConfig, table: &StadiumTable) -> Result<(SaddleSummary, String, bool), CliError> {
    let scfg = SaddleConfig {
        max_len: cfg.max_len,
        grid: cfg.grid,
        tol: cfg.tol,
    };
    let s = survey(table, &scfg).map_err(|e| usage(e.to_string()))?;
    let uniqueness = verify_uniqueness(&s.connections, cfg.tol);
    let audit = s.bound_audit();
    let ok = uniqueness.unique && audit.iter().all(|r| r.holds);
    let (max_codes_per_composition, without_composition) = s.composition_multiplicity();
    let summary = SaddleSummary {
        l: cfg.l,
        grid: cfg.grid,
        tol: cfg.tol,
        max_len: cfg.max_len,
        audit,
        unique: uniqueness.unique,
        duplicates: uniqueness.duplicates,
        max_codes_per_composition,
        without_composition,
        diagnostics: s.diagnostics.clone(),
    };
    Ok((summary, s.to_csv(), ok))
}

pub fn saddles(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let table = table(cfg)?;
    let (summary, csv, ok) = saddle_run(cfg, &table)?;
    if cfg.json {
        emit(cfg, &to_json(&json!({ "schema_version": SCHEMA_VERSION, "saddles": summary }))?)?;
    } else {
        emit(cfg, &csv)?;
    }
    eprintln!("{:>3} {:>8} {:>12} {:>8}", "n", "N(n)", "36 sum Q", "weight");
    for r in &summary.audit {
        eprintln!(
            "{:>3} {:>8} {:>12} {:>8}{}",
            r.n,
            r.count,
            r.bound,
            r.weight_count,
            if r.holds { "" } else { "  VIOLATED" }
        );
    }
    if !summary.unique {
        for (code, params) in &summary.duplicates {
            eprintln!("duplicate {code}: {params:?}");
        }
    }
    Ok(Outcome::from_bool(ok))
}

pub fn report(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let table = table(cfg)?;
    let bounds = bound_report(cfg.j_max)?;
    let compositions = composition_rows(cfg.j_max.min(MAX_COMPOSITION_J))?;
    let ls = sample(cfg, &table)?;
    let complexity = complexity_summary(cfg, &ls)?;
    let (saddles, _, saddles_ok) = saddle_run(cfg, &table)?;
    let defocusing = defocusing_report(&table, REPORT_DEFOCUSING_SEGMENTS, cfg.seed);
    let ok = bounds.all_passed() && compositions.iter().all(|r| r.holds) && saddles_ok;
    let bundle = json!({
        "schema_version": SCHEMA_VERSION,
        "config": {
            "l": cfg.l,
            "n_max": cfg.n_max,
            "samples": cfg.samples,
            "grid": cfg.grid,
            "seed": cfg.seed,
            "tol": cfg.tol,
            "max_len": cfg.max_len,
            "j_max": cfg.j_max,
        },
        "bounds": bounds,
        "compositions": compositions,
        "complexity": complexity,
        "saddles": saddles,
        "defocusing": defocusing,
        "passed": ok,
    });
    emit(cfg, &to_json(&bundle)?)?;
    Ok(Outcome::from_bool(ok))
}
