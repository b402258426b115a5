//! Command dispatch. Exit codes: 0 success, 1 error or failed checks, 2 for a
//! violated decay condition.

use std::fs;
use std::path::{Path, PathBuf};

use pevol_core::coefficients::{check_condition, lemma1_sequence, SeedSearch, Verdict};
use pevol_core::cutoff::{build_packet_profile, SmoothCutoff};
use pevol_core::grid::SymbolGrid2D;
use pevol_core::lab::{
    assemble, class_separation, run_single_k, DichotomyOutcome, DichotomySummary, ExperimentPlan, GrowthRecord,
};
use pevol_core::solver::{build_wavepacket, constant_coefficient_oracle, solve_cauchy};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::{
    emit_plotdata, num, write_csv, write_json, write_norms, write_record, write_trajectory, PlotKind, PlotSource,
    Stamp,
};
use crate::calculus::{all_rows, Harness};
use crate::config::{Command, FamilySpec, RunConfig};
use crate::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads for per-k experiments; 0 picks the rayon default.
    pub parallel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ChecksFailed,
    Violated,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::ChecksFailed => 1,
            Self::Violated => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Runs `cfg.run.command`, writing artifacts under `opts.out`.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&opts.out).map_err(|e| LabError::io(&opts.out, e))?;
    let stamp = Stamp::new(cfg.run.command, cfg.hash(), cfg.run.seed);
    match cfg.run.command {
        Command::CheckCondition => run_check_condition(cfg, &opts.out, &stamp),
        Command::Lemma1 => run_lemma1(cfg, &opts.out, &stamp),
        Command::Solve => run_solve(cfg, &opts.out, &stamp),
        Command::Dichotomy => run_dichotomy(cfg, opts, &stamp),
        Command::CalculusTests => run_calculus(cfg, &opts.out, &stamp),
    }
}

fn run_check_condition(cfg: &RunConfig, out: &Path, stamp: &Stamp) -> Result<RunReport> {
    let model = cfg.model()?;
    let rep = check_condition(&model, &cfg.condition.rho_grid, &cfg.search())?;
    let name = cfg.family.name();
    let rows = (0..rep.rho_grid.len()).map(|i| {
        let r = rep.rho_grid[i];
        vec![num(r), num(rep.sup_integrals[i]), num(rep.bound_value(r)), num(rep.argmax_x[i])]
    });
    let mut files =
        vec![write_csv(out, &format!("{name}_condition.csv"), stamp, &["rho", "sup_integral", "bound_value", "argmax_x"], rows)?];
    let summary = json!({
        "family": name,
        "verdict": rep.verdict.as_str(),
        "fitted_M": rep.fitted_m,
        "fitted_N": rep.fitted_n,
        "fitted_N_ls": rep.fitted_n_ls,
        "growth_exponent": rep.growth_exponent,
        "window_sensitive": rep.window_sensitive,
        "refinement_delta": rep.refinement_delta,
    });
    files.push(write_json(out, &format!("{name}_condition.json"), stamp, &summary)?);
    files.push(emit_plotdata(out, name, stamp, PlotKind::ConditionProfile, PlotSource::Condition(&rep))?);
    let outcome = if rep.verdict == Verdict::Violated { Outcome::Violated } else { Outcome::Ok };
    Ok(RunReport { outcome, files, summary })
}

fn run_lemma1(cfg: &RunConfig, out: &Path, stamp: &Stamp) -> Result<RunReport> {
    let model = cfg.model()?;
    let seed = SeedSearch { search: cfg.search(), ..SeedSearch::default() };
    let pts = lemma1_sequence(&model, cfg.plan.m_target, &cfg.plan.ks, &seed)?;
    let name = cfg.family.name();
    let columns = [
        "k", "m_target", "x_k", "rho_k", "s_k", "y_k", "delta_k", "tau_star", "t_star", "margin_ii", "min_partial",
        "tau_dependence",
    ];
    let rows = pts.iter().map(|p| {
        vec![
            p.k.to_string(),
            num(p.m_target),
            num(p.x_k),
            num(p.rho_k),
            num(p.s_k),
            num(p.y_k),
            num(p.delta_k),
            num(p.tau_star),
            num(p.t_star),
            num(p.margin_ii),
            num(p.min_partial),
            num(p.tau_dependence),
        ]
    });
    let mut files = vec![write_csv(out, &format!("{name}_lemma1.csv"), stamp, &columns, rows)?];
    let profile = pts.iter().flat_map(|p| p.f_profile.iter().map(move |(tau, f)| vec![p.k.to_string(), num(*tau), num(*f)]));
    files.push(write_csv(out, &format!("{name}_lemma1_profile.csv"), stamp, &["k", "tau", "f"], profile)?);
    let summary = json!({
        "family": name,
        "points": pts.len(),
        "min_margin_ii": pts.iter().map(|p| p.margin_ii).fold(f64::INFINITY, f64::min),
        "min_partial": pts.iter().map(|p| p.min_partial).fold(f64::INFINITY, f64::min),
    });
    files.push(write_json(out, &format!("{name}_lemma1.json"), stamp, &summary)?);
    Ok(RunReport { outcome: Outcome::Ok, files, summary })
}

fn run_solve(cfg: &RunConfig, out: &Path, stamp: &Stamp) -> Result<RunReport> {
    let model = cfg.model()?;
    let s = &cfg.solve;
    let grid = if cfg.grid.n == 0 {
        SymbolGrid2D::for_packet(cfg.grid.half_length, s.packet_frequency, cfg.grid.oversampling)?
    } else {
        SymbolGrid2D::new(cfg.grid.half_length, cfg.grid.n)?
    };
    let profile = build_packet_profile(&SmoothCutoff::new(2), &grid)?;
    let g = build_wavepacket(&profile, s.packet_center, s.packet_frequency, &grid, cfg.grid.guard)?;
    let times: Vec<f64> = (1..=s.checkpoints).map(|i| s.t_end * i as f64 / s.checkpoints as f64).collect();
    let mut traj = solve_cauchy(&model, &g, &times, &grid, &cfg.solver()?)?;
    traj.states.insert(0, g.clone());
    let prefix = format!("{}_{}", cfg.family.name(), cfg.plan.p);
    let files = vec![
        write_trajectory(out, &format!("{prefix}_trajectory.csv"), stamp, &traj)?,
        write_norms(out, &format!("{prefix}_norms.csv"), stamp, &traj, &grid)?,
    ];
    let oracle_error = match constant_coefficient_oracle(&model, &g, s.t_end, &grid) {
        Ok(exact) => {
            let last = traj.states.last().expect("datum is present");
            let d: Vec<_> = last.values.iter().zip(&exact.values).map(|(a, b)| a - b).collect();
            Some(grid.l2_norm(&d) / exact.norm(&grid))
        }
        Err(_) => None,
    };
    let summary = json!({
        "family": cfg.family.name(),
        "grid_n": grid.n(),
        "steps": traj.steps,
        "dt_max": traj.dt_max,
        "log_norm_end": traj.log_norms.last().map(|p| p.1),
        "oracle_relative_error": oracle_error,
    });
    let mut files = files;
    files.push(write_json(out, &format!("{prefix}_solve.json"), stamp, &summary)?);
    Ok(RunReport { outcome: Outcome::Ok, files, summary })
}

/// Runs every radius on `pool`; each worker writes its own record file.
/// Records are kept in `k` order up to the first failure.
fn sweep(
    plan: &ExperimentPlan,
    name: &str,
    out: &Path,
    stamp: &Stamp,
    pool: &rayon::ThreadPool,
) -> Result<(DichotomyOutcome, Vec<PathBuf>)> {
    plan.validate()?;
    let model = plan.model()?;
    let results: Vec<Result<(GrowthRecord, PathBuf)>> = pool.install(|| {
        (0..plan.radii.len())
            .into_par_iter()
            .map(|i| {
                let r = run_single_k(plan, &model, i)?;
                let path = write_record(out, name, plan.p, stamp, &r)?;
                Ok((r, path))
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut files = Vec::new();
    let mut error = None;
    for res in results {
        match res {
            Ok((r, p)) if error.is_none() => {
                records.push(r);
                files.push(p);
            }
            Ok(_) => {}
            Err(LabError::Core(e)) if error.is_none() => error = Some(e),
            Err(e) => return Err(e),
        }
    }
    Ok((assemble(plan, records, error), files))
}

pub fn summary_json(s: &DichotomySummary) -> Value {
    let fit = |f: &pevol_core::fit::LineFit| json!({ "slope": f.slope, "intercept": f.intercept, "rss": f.rss });
    json!({
        "family": s.family,
        "p": s.p,
        "regime": s.regime.as_str(),
        "a_eff": s.exponents.a,
        "mu_eff": s.exponents.mu,
        "s_used": s.s_used,
        "rho": s.rho,
        "log_sigma0": s.log_sigma0,
        "log_sigma_end": s.log_sigma_end,
        "log_growth": s.log_growth,
        "lower_fit": fit(&s.lower_fit),
        "upper_slope": s.upper_slope,
        "growth_class": s.growth.class.as_str(),
        "exponential_fit": fit(&s.growth.exponential),
        "polynomial_fit": fit(&s.growth.polynomial),
        "lr_exponential": s.growth.lr_exponential,
        "q_verdicts": s.q_verdicts.iter().map(|q| json!({
            "q": q.q,
            "threshold_m": q.threshold_m,
            "slope_bound": q.slope_bound,
            "within_upper_bound": q.within_upper_bound,
            "secant_exponent": q.secant_exponent,
            "contradiction": q.contradiction,
            "crossover_rho": q.crossover_rho,
        })).collect::<Vec<_>>(),
        "tail_weight_max": s.tail_weight_max,
    })
}

/// Dichotomy results for the primary family and its optional contrast.
pub struct DichotomyRun {
    pub primary: DichotomyOutcome,
    pub contrast: Option<DichotomyOutcome>,
    pub separation: Option<f64>,
    pub files: Vec<PathBuf>,
}

pub fn dichotomy(cfg: &RunConfig, opts: &RunOptions, stamp: &Stamp) -> Result<DichotomyRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let out = &opts.out;
    let mut files = Vec::new();
    let mut run_family = |spec: &FamilySpec| -> Result<DichotomyOutcome> {
        let plan = cfg.plan_for(spec)?;
        let name = spec.name();
        let (outcome, written) = sweep(&plan, name, out, stamp, &pool)?;
        files.extend(written);
        if !outcome.records.is_empty() {
            let recs = &outcome.records;
            files.push(emit_plotdata(out, name, stamp, PlotKind::GrowthCurve, PlotSource::Records(recs))?);
            files.push(emit_plotdata(out, name, stamp, PlotKind::ExponentFit, PlotSource::Records(recs))?);
        }
        if let Some(s) = &outcome.summary {
            files.push(write_json(out, &format!("{name}_summary.json"), stamp, &summary_json(s))?);
        }
        Ok(outcome)
    };
    let primary = run_family(&cfg.family)?;
    let contrast = match (&cfg.contrast, &primary.error) {
        (Some(c), None) => Some(run_family(c)?),
        _ => None,
    };
    let separation = match (&primary.summary, contrast.as_ref().and_then(|c| c.summary.as_ref())) {
        (Some(a), Some(b)) => Some(class_separation(a, b)),
        _ => None,
    };
    Ok(DichotomyRun { primary, contrast, separation, files })
}

fn run_dichotomy(cfg: &RunConfig, opts: &RunOptions, stamp: &Stamp) -> Result<RunReport> {
    let mut d = dichotomy(cfg, opts, stamp)?;
    let summary = json!({
        "family": cfg.family.name(),
        "contrast": cfg.contrast.as_ref().map(|c| c.name()),
        "primary": d.primary.summary.as_ref().map(summary_json),
        "contrast_summary": d.contrast.as_ref().and_then(|c| c.summary.as_ref()).map(summary_json),
        "class_separation": d.separation,
        "error": d.primary.error.as_ref().or(d.contrast.as_ref().and_then(|c| c.error.as_ref())).map(|e| e.to_string()),
    });
    d.files.push(write_json(&opts.out, "dichotomy.json", stamp, &summary)?);
    if let Some(e) = d.primary.error.take().or_else(|| d.contrast.as_mut().and_then(|c| c.error.take())) {
        return Err(e.into());
    }
    Ok(RunReport { outcome: Outcome::Ok, files: d.files, summary })
}

fn run_calculus(cfg: &RunConfig, out: &Path, stamp: &Stamp) -> Result<RunReport> {
    let c = &cfg.calculus;
    let h = Harness::new(c.half_length, c.grid_n, c.probes, c.band, cfg.run.seed)?;
    let rows = all_rows(&h)?;
    let files = vec![write_csv(
        out,
        "calculus.csv",
        stamp,
        &["check", "value", "tolerance", "pass"],
        rows.iter().map(|r| vec![r.check.clone(), num(r.value), num(r.tolerance), r.pass.to_string()]),
    )?];
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    let summary = json!({ "checks": rows.len(), "failed": failed });
    let mut files = files;
    files.push(write_json(out, "calculus.json", stamp, &summary)?);
    let outcome = if failed.is_empty() { Outcome::Ok } else { Outcome::ChecksFailed };
    Ok(RunReport { outcome, files, summary })
}
