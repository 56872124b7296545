//! The `check`, `solve`, `scan` and `compare` commands.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::bangbang::{verify_bangbang, BangBangReport, DEFAULT_TOLERANCE};
use crate::genericity::{scan, ScanGrid, ScanPoint};
use crate::simulator::{simulate_truncated, target_distance};
use crate::solver::{brute_force_min_time, diagonal_synthesis, min_time_bisect, OracleReport, SolveReport, SolverOptions};
use crate::structural::{
    check_d1, check_d2, check_d2_tilde, classify_existence, general_position, kalman_rank, D2Report, ExistenceTag,
    ExistenceVerdict, GeneralPosition,
};
use crate::Error;

use super::csv_io::{write_control_csv, write_scan_csv, write_trajectory_csv};
use super::spec::{FullTag, OmegaSection, Problem, ProblemSpec};
use super::{CommandError, Overrides};

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub m: usize,
    pub k: usize,
    pub full_domain: bool,
    pub verdict: ExistenceVerdict,
    pub delta: f64,
    pub simple_spectrum: bool,
    pub coupling: Vec<Vec<f64>>,
    pub nonvanishing_couplings: D2Report,
    pub nonvanishing_first_column: bool,
    pub general_position: GeneralPosition,
    pub kalman_rank: usize,
}

fn delta(problem: &Problem, ov: &Overrides) -> f64 {
    ov.delta.unwrap_or(problem.spec.solver.delta)
}

pub fn check_report(problem: &Problem, ov: &Overrides) -> Result<CheckReport> {
    let plant = problem.system.plant();
    let (m, k) = (problem.system.m(), problem.system.k());
    let delta = delta(problem, ov);
    let b = plant.coupling();
    let a = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(plant.rates()));
    Ok(CheckReport {
        m,
        k,
        full_domain: problem.region.is_full_domain(),
        verdict: classify_existence(&problem.system, &problem.region, delta),
        delta,
        simple_spectrum: check_d1(plant.rates(), m),
        coupling: b.row_iter().map(|r| r.iter().copied().collect()).collect(),
        nonvanishing_couplings: check_d2(b, delta),
        nonvanishing_first_column: check_d2_tilde(b, delta),
        general_position: general_position(plant.rates(), b, plant.bounds(), delta)?,
        kalman_rank: kalman_rank(&a, b)?,
    })
}

fn solver_options(problem: &Problem, ov: &Overrides) -> SolverOptions {
    let s = &problem.spec.solver;
    let t_hi = s.t_hi;
    SolverOptions {
        tol: ov.tol.unwrap_or(s.tol),
        t_hi,
        horizon_cap: ov.horizon_cap.or(s.horizon_cap).unwrap_or(65536.0 * t_hi),
        seed: ov.seed.unwrap_or(s.seed),
        ..SolverOptions::default()
    }
}

#[derive(Debug, Serialize)]
pub struct OracleComparison {
    pub report: OracleReport,
    pub gap: Option<f64>,
    pub brackets: bool,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub verdict: ExistenceVerdict,
    /// Set when no existence result covers the instance.
    pub outside_theory: bool,
    pub solve: SolveReport,
    pub bang_bang: BangBangReport,
    pub truncation: usize,
    /// Distance of the simulated truncated state to the target at `T*`.
    pub target_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleComparison>,
}

/// Solves the instance along the path its classification selects.
fn solve_problem(problem: &Problem, ov: &Overrides) -> std::result::Result<(ExistenceVerdict, SolveReport), CommandError> {
    let verdict = classify_existence(&problem.system, &problem.region, delta(problem, ov));
    let report = match verdict.tag {
        ExistenceTag::Nonexistent => {
            return Err(CommandError::Nonexistent(verdict.witness.clone().unwrap_or_default()));
        }
        ExistenceTag::ExistsDiagonalFull | ExistenceTag::ExistsDiagonalReduced => diagonal_synthesis(&problem.system),
        ExistenceTag::AlreadyInTarget if problem.region.is_full_domain() => diagonal_synthesis(&problem.system),
        _ => min_time_bisect(problem.system.plant(), &solver_options(problem, ov)),
    }
    .map_err(|e| CommandError::Runtime(e.into()))?;
    Ok((verdict, report))
}

pub fn solve_summary(problem: &Problem, ov: &Overrides, oracle: bool) -> std::result::Result<SolveSummary, CommandError> {
    let (verdict, solve) = solve_problem(problem, ov)?;
    let plant = problem.system.plant();
    let bang_bang = verify_bangbang(&solve.control, plant.bounds(), DEFAULT_TOLERANCE);
    let sim = simulate_truncated(
        &problem.basis,
        &problem.region,
        &solve.control,
        &problem.spec.y0.coefficients,
        problem.spec.solver.samples,
    )
    .map_err(|e| CommandError::Runtime(e.into()))?;
    let oracle = if oracle {
        let cfg = problem.spec.oracle.clone().unwrap_or_default();
        let t_max = cfg.t_max.unwrap_or(if solve.optimal_time > 0.0 { 2.0 * solve.optimal_time } else { 1.0 });
        let grid: Vec<f64> = (1..=cfg.points.max(1)).map(|i| i as f64 * t_max / cfg.points.max(1) as f64).collect();
        let report = brute_force_min_time(plant, cfg.q, &grid).map_err(|e| CommandError::Runtime(e.into()))?;
        Some(OracleComparison {
            gap: report.estimate.map(|e| (e - solve.optimal_time).abs()),
            brackets: report.brackets(solve.optimal_time),
            report,
        })
    } else {
        None
    };
    Ok(SolveSummary {
        outside_theory: verdict.tag == ExistenceTag::UnknownExistence,
        verdict,
        target_distance: target_distance(sim.final_state(), problem.system.m()),
        truncation: problem.basis.len(),
        bang_bang,
        oracle,
        solve,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

pub fn cmd_check(spec: &ProblemSpec, ov: &Overrides) -> std::result::Result<String, CommandError> {
    let problem = spec.build()?;
    let report = check_report(&problem, ov)?;
    if let Some(dir) = &ov.out_dir {
        write_json(dir, "check.json", &report)?;
    }
    Ok(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?)
}

pub fn cmd_solve(spec: &ProblemSpec, ov: &Overrides, oracle: bool) -> std::result::Result<String, CommandError> {
    let problem = spec.build()?;
    let summary = solve_summary(&problem, ov, oracle)?;
    let dir = ov.out_dir.clone().unwrap_or_else(|| ".".into());
    write_json(&dir, "solve.json", &summary)?;
    write_control_csv(create(&dir, "control.csv")?, &summary.solve.control, spec.solver.samples)?;
    let sim = simulate_truncated(
        &problem.basis,
        &problem.region,
        &summary.solve.control,
        &spec.y0.coefficients,
        spec.solver.samples,
    )
    .map_err(anyhow::Error::from)?;
    write_trajectory_csv(create(&dir, "trajectory.csv")?, &sim)?;
    Ok(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?)
}

#[derive(Debug, Serialize)]
pub struct ScanSummary {
    pub grid_size: usize,
    pub admissible: usize,
    pub delta: f64,
    pub zero_set_fraction: f64,
    pub candidate_count: usize,
    /// Best candidates, at most 25.
    pub candidates: Vec<ScanPoint>,
}

pub fn cmd_scan(spec: &ProblemSpec, ov: &Overrides) -> std::result::Result<String, CommandError> {
    let problem = spec.build()?;
    let cfg = spec
        .scan
        .as_ref()
        .ok_or_else(|| super::spec::SpecError("missing `scan` section".into()))?;
    let scan_delta = ov.delta.unwrap_or(cfg.delta);
    let (m, k) = (spec.modes.m, spec.modes.k);
    let grid = ScanGrid::uniform(cfg.x_range, cfg.grid.0, cfg.rho_range, cfg.grid.1, scan_delta, m, k)
        .map_err(|e| super::spec::SpecError(format!("invalid `scan`: {e}")))?;
    let result = match scan(&problem.basis, &problem.region, &grid) {
        Ok(r) => r,
        Err(e @ Error::EmptyAdmissibleGrid(_)) => return Err(CommandError::NoCandidate(e.to_string())),
        Err(e) => return Err(CommandError::Runtime(e.into())),
    };
    let dir = ov.out_dir.clone().unwrap_or_else(|| ".".into());
    write_scan_csv(create(&dir, "scan.csv")?, &result.points)?;
    let summary = ScanSummary {
        grid_size: result.grid_size,
        admissible: result.points.len(),
        delta: scan_delta,
        zero_set_fraction: result.zero_set_fraction,
        candidate_count: result.candidates.len(),
        candidates: result.candidates.iter().take(25).copied().collect(),
    };
    write_json(&dir, "candidates.json", &summary)?;
    let text = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?;
    if summary.candidate_count == 0 {
        return Err(CommandError::NoCandidate(text));
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct RegionOutcome {
    pub region: Vec<(f64, f64)>,
    pub full_domain: bool,
    pub tag: ExistenceTag,
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub is_bang_bang: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switching_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idle_intervals: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub m: usize,
    pub k: usize,
    pub y0: Vec<f64>,
    pub bounds: Vec<f64>,
    pub full: RegionOutcome,
    pub proper: RegionOutcome,
}

fn region_outcome(problem: &Problem, ov: &Overrides) -> RegionOutcome {
    let verdict = classify_existence(&problem.system, &problem.region, delta(problem, ov));
    let mut out = RegionOutcome {
        region: problem.region.intervals().to_vec(),
        full_domain: problem.region.is_full_domain(),
        tag: verdict.tag,
        witness: verdict.witness,
        optimal_time: None,
        terminal_error: None,
        is_bang_bang: None,
        switching_counts: None,
        idle_intervals: None,
        error: None,
    };
    if verdict.tag == ExistenceTag::Nonexistent {
        return out;
    }
    match solve_problem(problem, ov) {
        Ok((_, report)) => {
            let bb = verify_bangbang(&report.control, problem.system.plant().bounds(), DEFAULT_TOLERANCE);
            out.optimal_time = Some(report.optimal_time);
            out.terminal_error = Some(report.terminal_error);
            out.is_bang_bang = Some(bb.is_bang_bang);
            out.switching_counts = Some(bb.switching_counts);
            out.idle_intervals = Some(bb.idle_intervals.len());
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

pub fn cmd_compare(spec: &ProblemSpec, ov: &Overrides) -> std::result::Result<String, CommandError> {
    let full = spec.build_with(&OmegaSection::Full(FullTag::Full))?;
    let proper = spec.build()?;
    let summary = CompareSummary {
        m: spec.modes.m,
        k: spec.modes.k,
        y0: spec.y0.coefficients.clone(),
        bounds: spec.bounds.clone(),
        full: region_outcome(&full, ov),
        proper: region_outcome(&proper, ov),
    };
    if let Some(dir) = &ov.out_dir {
        write_json(dir, "compare.json", &summary)?;
    }
    Ok(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?)
}
