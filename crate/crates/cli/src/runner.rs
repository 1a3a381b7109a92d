//! Cell fan-out: one independent solver run per (solver, seed).

use apg_restart::par::{self, Execution};
use apg_restart::solver::{self, Algorithm};
use apg_restart::{DenseVector, Error, RestartScheme, SolverConfig, SolverTrace};

use crate::config::{ExperimentConfig, Problem, SolverSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Diverged { iteration: usize, value: f64 },
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Diverged { .. } => "diverged",
            CellStatus::Failed(_) => "error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub solver: usize,
    pub seed: u64,
    pub status: CellStatus,
    /// Full trace, or the partial one for a diverged run.
    pub trace: Option<SolverTrace>,
}

/// `x_init` for a seed: i.i.d. normal entries scaled by `init_scale`.
pub fn start_point(problem: &Problem, seed: u64) -> DenseVector {
    DenseVector::random_normal(problem.objective.dim(), problem.init_scale, seed)
}

pub fn run_one(problem: &Problem, spec: &SolverSpec, seed: u64) -> Result<SolverTrace, Error> {
    let cfg = spec.config.clone().with_seed(seed);
    solver::run_algorithm(
        spec.algorithm,
        &problem.objective,
        problem.regularizer,
        &cfg,
        start_point(problem, seed),
    )
}

/// Runs every cell. Results come back in config order whatever `exec` is.
pub fn run_cells(cfg: &ExperimentConfig, exec: Execution) -> Vec<Cell> {
    let jobs: Vec<(usize, u64)> = cfg
        .solvers
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.seeds.iter().map(move |&seed| (i, seed)))
        .collect();
    par::map(&jobs, exec, |&(i, seed)| {
        let (status, trace) = match run_one(&cfg.problem, &cfg.solvers[i], seed) {
            Ok(t) => (CellStatus::Ok, Some(t)),
            Err(Error::Diverged {
                iteration,
                value,
                partial,
            }) => (CellStatus::Diverged { iteration, value }, Some(*partial)),
            Err(e) => (CellStatus::Failed(e.to_string()), None),
        };
        Cell {
            solver: i,
            seed,
            status,
            trace,
        }
    })
}

/// Reference optimum for loss gaps: the configured `f_star` if any,
/// otherwise the smallest finite value seen in any cell or in a reference
/// run ten times longer than the longest configured solver.
pub fn reference_value(cfg: &ExperimentConfig, cells: &[Cell]) -> f64 {
    if let Some(f) = cfg.problem.f_star {
        return f;
    }
    let max_iters = cfg.solvers.iter().map(|s| s.config.max_iters).max().unwrap_or(0);
    let reference = SolverSpec {
        name: "reference".into(),
        algorithm: Algorithm::ApgRestart,
        config: SolverConfig::new(10 * max_iters.max(1), RestartScheme::fixed(10).expect("q >= 1")),
        seeds: vec![0],
    };
    let mut best = run_one(&cfg.problem, &reference, 0).map_or(f64::INFINITY, |t| t.final_value);
    for trace in cells.iter().filter(|c| c.status == CellStatus::Ok).filter_map(|c| c.trace.as_ref()) {
        for v in trace.iterations.iter().map(|r| r.f_value).chain([trace.final_value]) {
            if v.is_finite() && v < best {
                best = v;
            }
        }
    }
    best
}
