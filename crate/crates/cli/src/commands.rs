//! `run`, `check` and `compare`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use apg_restart::diagnostics::{check_invariants, path_length_summary, InvariantReport};
use apg_restart::par::Execution;
use apg_restart::restart::SchemeKind;
use apg_restart::solver::Algorithm;
use apg_restart::{SolverTrace, StepsizeMode};

use crate::config::{ExperimentConfig, SolverSpec};
use crate::output::{csv_text, float, write_atomic};
use crate::runner::{reference_value, run_cells, Cell, CellStatus};

pub const SUMMARY_HEADER: [&str; 16] = [
    "solver",
    "algorithm",
    "scheme",
    "stepsize",
    "seed",
    "status",
    "iterations",
    "restarts",
    "final_F",
    "f_star",
    "final_loss_gap",
    "final_grad_map_norm",
    "final_subdiff_distance",
    "lipschitz",
    "prox_calls",
    "grad_calls",
];
pub const CHECK_HEADER: [&str; 8] = [
    "solver",
    "seed",
    "check",
    "passed",
    "worst_margin",
    "worst_location",
    "first_failure",
    "evaluated",
];
pub const PATH_HEADER: [&str; 6] = ["solver", "seed", "periods", "total_path_length", "tail_increment", "converged"];
pub const COMPARE_HEADER: [&str; 4] = ["scheme", "seed", "iteration", "loss_gap"];
pub const RESTART_HEADER: [&str; 6] = [
    "scheme",
    "seeds",
    "mean_restarts",
    "min_restarts",
    "max_restarts",
    "mean_final_loss_gap",
];

/// Exit status: all cells ran (and, for `check`, every invariant held).
pub const EXIT_OK: i32 = 0;
/// A cell failed or an invariant was violated.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub quiet: bool,
    pub exec: Execution,
}

impl Options {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Test hook applied to each trace before `check` evaluates it.
pub type TraceHook<'a> = &'a dyn Fn(&SolverSpec, u64, &mut SolverTrace);

pub fn trace_path(out: &Path, spec: &SolverSpec, seed: u64) -> PathBuf {
    out.join("traces").join(format!("{}_seed{seed}.csv", spec.name))
}

fn write_traces(cfg: &ExperimentConfig, cells: &[Cell], out: &Path) -> Result<()> {
    for cell in cells {
        if let Some(trace) = &cell.trace {
            let path = trace_path(out, &cfg.solvers[cell.solver], cell.seed);
            write_atomic(&path, trace.to_csv_string().as_bytes())
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, csv_text(header, rows).as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn report_cell_problems(cfg: &ExperimentConfig, cells: &[Cell], opts: &Options) -> bool {
    let mut any_failed = false;
    for cell in cells {
        let name = &cfg.solvers[cell.solver].name;
        match &cell.status {
            CellStatus::Ok => {}
            CellStatus::Diverged { iteration, value } => opts.note(format!(
                "warning: {name} seed {}: diverged at iteration {iteration} (F = {value})",
                cell.seed
            )),
            CellStatus::Failed(msg) => {
                any_failed = true;
                eprintln!("error: {name} seed {}: {msg}", cell.seed);
            }
        }
    }
    any_failed
}

fn summary_rows(cfg: &ExperimentConfig, cells: &[Cell], f_star: f64) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|cell| {
            let spec = &cfg.solvers[cell.solver];
            let mut row = vec![
                spec.name.clone(),
                spec.algorithm.name().to_string(),
                spec.scheme_label(),
                spec.config.stepsize.name().to_string(),
                cell.seed.to_string(),
                cell.status.label().to_string(),
            ];
            match &cell.trace {
                Some(t) => row.extend([
                    t.n_iterations().to_string(),
                    t.restart_count().to_string(),
                    float(t.final_value),
                    float(f_star),
                    float(t.final_value - f_star),
                    t.iterations.last().map_or_else(String::new, |r| float(r.grad_map_norm)),
                    float(t.final_subdiff_distance),
                    float(t.lipschitz),
                    t.prox_calls.to_string(),
                    t.grad_calls.to_string(),
                ]),
                None => row.resize(SUMMARY_HEADER.len(), String::new()),
            }
            row
        })
        .collect()
}

/// Runs every cell, writes one trace CSV per cell and `summary.csv`.
pub fn run(cfg: &ExperimentConfig, opts: &Options) -> Result<i32> {
    let cells = run_cells(cfg, opts.exec);
    let f_star = reference_value(cfg, &cells);
    write_traces(cfg, &cells, &opts.out)?;
    write_csv(&opts.out.join("summary.csv"), &SUMMARY_HEADER, &summary_rows(cfg, &cells, f_star))?;
    let failed = report_cell_problems(cfg, &cells, opts);
    opts.note(format!("{}: {} cells -> {}", cfg.name, cells.len(), opts.out.display()));
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

fn check_preconditions(cfg: &ExperimentConfig) -> Result<()> {
    for (i, s) in cfg.solvers.iter().enumerate() {
        if s.config.stepsize != StepsizeMode::Theory {
            bail!(
                "solvers[{i}] ({}): check needs theory stepsizes, got {}",
                s.name,
                s.config.stepsize.name()
            );
        }
        if !matches!(s.algorithm, Algorithm::ApgRestart | Algorithm::NeverRestartApg) {
            bail!(
                "solvers[{i}] ({}): check applies to APG-restart solvers, got {}",
                s.name,
                s.algorithm.name()
            );
        }
    }
    Ok(())
}

pub fn check(cfg: &ExperimentConfig, opts: &Options) -> Result<i32> {
    check_with_hook(cfg, opts, &|_, _, _| {})
}

/// `check` with `hook` applied to every trace before it is evaluated.
pub fn check_with_hook(cfg: &ExperimentConfig, opts: &Options, hook: TraceHook<'_>) -> Result<i32> {
    check_preconditions(cfg)?;
    let mut cells = run_cells(cfg, opts.exec);
    let mut failed = report_cell_problems(cfg, &cells, opts);
    let mut report_rows = Vec::new();
    let mut path_rows = Vec::new();
    for cell in &mut cells {
        let spec = &cfg.solvers[cell.solver];
        let Some(trace) = cell.trace.as_mut() else { continue };
        if cell.status != CellStatus::Ok {
            failed = true;
            eprintln!("FAIL {} seed {}: run {}", spec.name, cell.seed, cell.status.label());
            continue;
        }
        hook(spec, cell.seed, trace);
        let report: InvariantReport = check_invariants(trace, trace.lipschitz)?;
        for c in &report.checks {
            report_rows.push(vec![
                spec.name.clone(),
                cell.seed.to_string(),
                c.name.to_string(),
                c.passed().to_string(),
                float(c.margin_or_zero()),
                c.worst_location.map_or_else(String::new, |l| l.to_string()),
                c.first_failure.map_or_else(String::new, |l| l.to_string()),
                c.evaluated.to_string(),
            ]);
            if let Some(at) = c.first_failure {
                failed = true;
                eprintln!(
                    "FAIL {} seed {}: {} violated at {at} (worst margin {:e})",
                    spec.name, cell.seed, c.name, c.worst_margin
                );
            }
        }
        let paths = path_length_summary(trace);
        path_rows.push(vec![
            spec.name.clone(),
            cell.seed.to_string(),
            paths.rows.len().to_string(),
            float(paths.total()),
            float(paths.tail_increment),
            paths.converged.to_string(),
        ]);
    }
    write_csv(&opts.out.join("check_report.csv"), &CHECK_HEADER, &report_rows)?;
    write_csv(&opts.out.join("path_lengths.csv"), &PATH_HEADER, &path_rows)?;
    opts.note(format!(
        "{}: {} cells checked, {}",
        cfg.name,
        cells.len(),
        if failed { "FAILED" } else { "all invariants hold" }
    ));
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

/// Restart statistics of one solver over its seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartStats {
    pub scheme: String,
    pub seeds: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    pub mean_final_gap: f64,
}

pub fn compare(cfg: &ExperimentConfig, opts: &Options) -> Result<i32> {
    if cfg.solvers.len() < 2 {
        bail!("solvers: compare needs at least two solvers, got {}", cfg.solvers.len());
    }
    let cells = run_cells(cfg, opts.exec);
    let f_star = reference_value(cfg, &cells);
    let failed = report_cell_problems(cfg, &cells, opts);

    let mut long_rows = Vec::new();
    for cell in &cells {
        let Some(trace) = &cell.trace else { continue };
        let name = &cfg.solvers[cell.solver].name;
        for r in &trace.iterations {
            long_rows.push(vec![
                name.clone(),
                cell.seed.to_string(),
                r.k.to_string(),
                float(r.f_value - f_star),
            ]);
        }
    }
    write_csv(&opts.out.join("compare_long.csv"), &COMPARE_HEADER, &long_rows)?;

    let stats = restart_stats(cfg, &cells, f_star);
    let stat_rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.scheme.clone(),
                s.seeds.to_string(),
                float(s.mean),
                s.min.to_string(),
                s.max.to_string(),
                float(s.mean_final_gap),
            ]
        })
        .collect();
    write_csv(&opts.out.join("restart_counts.csv"), &RESTART_HEADER, &stat_rows)?;

    if !opts.quiet {
        eprintln!("{:<28} {:>6} {:>14} {:>14}", "scheme", "seeds", "mean restarts", "mean gap");
        for s in &stats {
            eprintln!("{:<28} {:>6} {:>14.1} {:>14.3e}", s.scheme, s.seeds, s.mean, s.mean_final_gap);
        }
        if let Some(line) = function_value_note(cfg, &stats) {
            eprintln!("{line}");
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

pub fn restart_stats(cfg: &ExperimentConfig, cells: &[Cell], f_star: f64) -> Vec<RestartStats> {
    cfg.solvers
        .iter()
        .enumerate()
        .filter_map(|(i, spec)| {
            let traces: Vec<&SolverTrace> = cells
                .iter()
                .filter(|c| c.solver == i && c.status == CellStatus::Ok)
                .filter_map(|c| c.trace.as_ref())
                .collect();
            if traces.is_empty() {
                return None;
            }
            let counts: Vec<usize> = traces.iter().map(|t| t.restart_count()).collect();
            let n = traces.len() as f64;
            Some(RestartStats {
                scheme: spec.name.clone(),
                seeds: traces.len(),
                mean: counts.iter().sum::<usize>() as f64 / n,
                min: *counts.iter().min().expect("nonempty"),
                max: *counts.iter().max().expect("nonempty"),
                mean_final_gap: traces.iter().map(|t| t.final_value - f_star).sum::<f64>() / n,
            })
        })
        .collect()
}

/// Informational: does the function-value scheme restart most often?
pub fn function_value_note(cfg: &ExperimentConfig, stats: &[RestartStats]) -> Option<String> {
    let is_fs = |name: &str| {
        cfg.solvers.iter().any(|s| {
            s.name == name
                && s.algorithm == Algorithm::ApgRestart
                && matches!(s.config.scheme.kind(), SchemeKind::FunctionValue { .. })
        })
    };
    let fs = stats.iter().filter(|s| is_fs(&s.scheme)).max_by(|a, b| a.mean.total_cmp(&b.mean))?;
    let others: Vec<&RestartStats> = stats.iter().filter(|s| !is_fs(&s.scheme)).collect();
    if others.is_empty() {
        return None;
    }
    let top = others.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max);
    Some(format!(
        "note: function-value scheme {} restarts most often: {} ({:.1} vs {:.1} for the next scheme)",
        fs.scheme,
        if fs.mean >= top { "yes" } else { "no" },
        fs.mean,
        top
    ))
}
