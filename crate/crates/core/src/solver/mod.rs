//! APG-restart and the baseline solvers.
//!
//! One APG-restart iteration `k`:
//!
//! ```text
//! if k starts a period:  Q_t = k,  y_k = x_k
//! α_{k+1} = 2 / (k + 1 − Q_t + 2)
//! z_k     = (1 − α_{k+1}) y_k + α_{k+1} x_k
//! G       = G_{λ_k}(x_k, ∇f(z_k))
//! x_{k+1} = x_k − λ_k G
//! y_{k+1} = z_k − β_k G
//! ```
//!
//! Iteration 0 always starts period 0. A restart scheme is queried at the end
//! of every iteration; when it fires, iteration `k + 1` starts a new period.

mod trace;

pub use trace::{IterationRecord, PeriodRecord, SolverTrace, TRACE_CSV_HEADER};

use crate::numkit::DenseVector;
use crate::objectives::SmoothObjective;
use crate::prox::Regularizer;
use crate::restart::{RestartObservation, RestartScheme};
use crate::{Error, Result};

/// Values above `DIVERGENCE_FACTOR · (1 + |F(x_0)|)` abort a run.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeMode {
    /// `β_k = 1/(8L)`, the regime where the descent guarantees hold.
    Theory,
    /// `β_k = 1`.
    Experiment,
    Custom { beta: f64 },
}

impl StepsizeMode {
    pub fn beta(self, lipschitz: f64) -> f64 {
        match self {
            StepsizeMode::Theory => 1.0 / (8.0 * lipschitz),
            StepsizeMode::Experiment => 1.0,
            StepsizeMode::Custom { beta } => beta,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepsizeMode::Theory => "theory",
            StepsizeMode::Experiment => "experiment",
            StepsizeMode::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ApgRestart,
    ProxGrad,
    Ag,
    NeverRestartApg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ApgRestart => "apg_restart",
            Algorithm::ProxGrad => "prox_grad",
            Algorithm::Ag => "ag",
            Algorithm::NeverRestartApg => "apg_never",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    ProxGrad,
    Ag,
    NeverRestartApg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub stepsize: StepsizeMode,
    /// `c` in `λ_k = (1 − c) β_k + c (1 + α_{k+1}) β_k`.
    pub lambda_rule: f64,
    /// Stop once `‖G_{λ_k}(z_k, ∇f(z_k))‖ <= tolerance`; 0 runs all iterations.
    pub tolerance: f64,
    pub seed: u64,
    pub scheme: RestartScheme,
}

impl SolverConfig {
    pub fn new(max_iters: usize, scheme: RestartScheme) -> Self {
        Self {
            max_iters,
            stepsize: StepsizeMode::Theory,
            lambda_rule: 1.0,
            tolerance: 0.0,
            seed: 0,
            scheme,
        }
    }

    pub fn with_stepsize(mut self, stepsize: StepsizeMode) -> Self {
        self.stepsize = stepsize;
        self
    }

    pub fn with_lambda_rule(mut self, c: f64) -> Self {
        self.lambda_rule = c;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_rule) {
            return Err(Error::InvalidArgument(format!(
                "lambda_rule must lie in [0, 1], got {}",
                self.lambda_rule
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be >= 0".into()));
        }
        if let StepsizeMode::Custom { beta } = self.stepsize {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
            }
        }
        Ok(())
    }

    /// `(β_k, λ_k)` for a given `α_{k+1}`.
    pub fn stepsizes(&self, lipschitz: f64, alpha_next: f64) -> (f64, f64) {
        let beta = self.stepsize.beta(lipschitz);
        (beta, beta * (1.0 + self.lambda_rule * alpha_next))
    }
}

/// `α_k = 2 / (k − Q_t + 2)`.
pub fn momentum_coefficient(k: usize, checkpoint: usize) -> Result<f64> {
    if k < checkpoint {
        return Err(Error::InvalidArgument(format!(
            "iteration {k} precedes checkpoint {checkpoint}"
        )));
    }
    Ok(2.0 / ((k - checkpoint) as f64 + 2.0))
}

/// Mutable state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: DenseVector,
    pub y: DenseVector,
    pub k: usize,
    /// Last restart checkpoint `Q_t`.
    pub checkpoint: usize,
    /// Period index `t`.
    pub period: usize,
    pub alpha_next: f64,
    /// Iteration `k` starts a new period.
    pub restart_pending: bool,
    /// `F(x_k)`
    pub f_x: f64,
    f_initial: f64,
    pub prox_calls: usize,
    pub grad_calls: usize,
}

impl SolverState {
    pub fn new(x_init: DenseVector, obj: &SmoothObjective, reg: Regularizer) -> Result<Self> {
        let f_x = composite_value(obj, reg, &x_init)?;
        if !f_x.is_finite() {
            return Err(Error::InvalidArgument("F is not finite at the initial point".into()));
        }
        Ok(Self {
            y: x_init.clone(),
            x: x_init,
            k: 0,
            checkpoint: 0,
            period: 0,
            alpha_next: 1.0,
            restart_pending: true,
            f_x,
            f_initial: f_x,
            prox_calls: 0,
            grad_calls: 0,
        })
    }
}

/// `F(x) = f(x) + g(x)`.
pub fn composite_value(obj: &SmoothObjective, reg: Regularizer, x: &DenseVector) -> Result<f64> {
    Ok(obj.value(x)? + reg.value(x))
}

/// Result of one iteration.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub record: IterationRecord,
    /// `z_k`, exposed for tests.
    pub z: DenseVector,
}

fn divergence_check(state: &SolverState, iteration: usize, value: f64) -> Result<(), (usize, f64)> {
    let limit = DIVERGENCE_FACTOR * (1.0 + state.f_initial.abs());
    if !value.is_finite() || value > limit {
        return Err((iteration, value));
    }
    Ok(())
}

/// Executes one APG-restart iteration on `state`.
///
/// Exactly one gradient evaluation (at `z_k`) and one proximal evaluation are
/// charged to the state's counters. The diagnostic `‖G_{λ_k}(z_k, ∇f(z_k))‖`
/// reuses the same gradient.
pub fn apg_restart_step(
    state: &mut SolverState,
    obj: &SmoothObjective,
    reg: Regularizer,
    cfg: &SolverConfig,
    lipschitz: f64,
) -> Result<StepOutcome> {
    let k = state.k;
    let reset = state.restart_pending;
    if reset {
        if k > 0 {
            state.period += 1;
        }
        state.checkpoint = k;
        state.y = state.x.clone();
    }
    let alpha = momentum_coefficient(k + 1, state.checkpoint)?;
    state.alpha_next = alpha;
    let (beta, lambda) = cfg.stepsizes(lipschitz, alpha);

    // z = x + (1 − α)(y − x) is exactly x whenever y = x
    let z = state.x.add_scaled(1.0 - alpha, &state.y.sub(&state.x));
    let grad = obj.gradient(&z)?;
    state.grad_calls += 1;
    let (g_map, x_next) = reg.gradient_mapping_with_prox(lambda, &state.x, &grad)?;
    state.prox_calls += 1;
    let y_next = z.add_scaled(-beta, &g_map);

    let grad_map_norm = if z == state.x {
        g_map.norm()
    } else {
        reg.gradient_mapping(lambda, &z, &grad)?.norm()
    };
    let step_norm = x_next.distance(&state.x);
    let f_next = composite_value(obj, reg, &x_next)?;

    let record = IterationRecord {
        k,
        f_value: state.f_x,
        grad_map_norm,
        step_norm,
        restart: reset,
        lambda,
        beta,
        alpha_next: alpha,
    };

    if let Err((iteration, value)) = divergence_check(state, k + 1, f_next) {
        return Err(Error::Diverged {
            iteration,
            value,
            partial: Box::new(empty_trace(Algorithm::ApgRestart, cfg, lipschitz)),
        });
    }

    state.restart_pending = cfg.scheme.should_restart(&RestartObservation {
        k,
        since_restart: k - state.checkpoint,
        f_curr: f_next,
        f_prev: state.f_x,
        y: &state.y,
        z: &z,
        y_next: &y_next,
        x: &state.x,
    });
    state.x = x_next;
    state.y = y_next;
    state.f_x = f_next;
    state.k += 1;
    Ok(StepOutcome { record, z })
}

/// Proximal gradient step with `η = 1/L`.
fn prox_grad_step(
    state: &mut SolverState,
    obj: &SmoothObjective,
    reg: Regularizer,
    lipschitz: f64,
) -> Result<StepOutcome> {
    let eta = 1.0 / lipschitz;
    let reset = state.k == 0;
    let grad = obj.gradient(&state.x)?;
    state.grad_calls += 1;
    let (g_map, x_next) = reg.gradient_mapping_with_prox(eta, &state.x, &grad)?;
    state.prox_calls += 1;
    let record = IterationRecord {
        k: state.k,
        f_value: state.f_x,
        grad_map_norm: g_map.norm(),
        step_norm: x_next.distance(&state.x),
        restart: reset,
        lambda: eta,
        beta: eta,
        alpha_next: 1.0,
    };
    let z = state.x.clone();
    state.f_x = composite_value(obj, reg, &x_next)?;
    state.y = x_next.clone();
    state.x = x_next;
    state.k += 1;
    Ok(StepOutcome { record, z })
}

/// Accelerated gradient with two proximal updates per iteration and no restart.
fn ag_step(
    state: &mut SolverState,
    obj: &SmoothObjective,
    reg: Regularizer,
    cfg: &SolverConfig,
    lipschitz: f64,
) -> Result<StepOutcome> {
    let k = state.k;
    let alpha = momentum_coefficient(k + 1, 0)?;
    state.alpha_next = alpha;
    let (beta, lambda) = cfg.stepsizes(lipschitz, alpha);
    let z = state.x.add_scaled(1.0 - alpha, &state.y.sub(&state.x));
    let grad = obj.gradient(&z)?;
    state.grad_calls += 1;
    let x_next = reg.prox(lambda, &state.x.add_scaled(-lambda, &grad))?;
    let y_next = reg.prox(lambda, &z.add_scaled(-beta, &grad))?;
    state.prox_calls += 2;
    let record = IterationRecord {
        k,
        f_value: state.f_x,
        grad_map_norm: reg.gradient_mapping(lambda, &z, &grad)?.norm(),
        step_norm: x_next.distance(&state.x),
        restart: k == 0,
        lambda,
        beta,
        alpha_next: alpha,
    };
    state.f_x = composite_value(obj, reg, &x_next)?;
    state.x = x_next;
    state.y = y_next;
    state.k += 1;
    Ok(StepOutcome { record, z })
}

fn empty_trace(algorithm: Algorithm, cfg: &SolverConfig, lipschitz: f64) -> SolverTrace {
    SolverTrace {
        algorithm,
        scheme_label: cfg.scheme.label(),
        stepsize: cfg.stepsize,
        lipschitz,
        seed: cfg.seed,
        iterations: Vec::new(),
        periods: Vec::new(),
        final_value: f64::NAN,
        final_subdiff_distance: f64::NAN,
        final_x: DenseVector::default(),
        prox_calls: 0,
        grad_calls: 0,
    }
}

fn subdiff_at(obj: &SmoothObjective, reg: Regularizer, x: &DenseVector) -> Result<f64> {
    Ok(reg.subdiff_distance(&obj.gradient(x)?, x))
}

/// Runs APG-restart with `cfg.scheme` from `x_init` for `cfg.max_iters`
/// iterations and returns the full trace.
pub fn run(
    obj: &SmoothObjective,
    reg: Regularizer,
    cfg: &SolverConfig,
    x_init: DenseVector,
) -> Result<SolverTrace> {
    drive(Algorithm::ApgRestart, obj, reg, cfg, x_init)
}

/// Runs one of the comparison baselines.
pub fn run_baseline(
    kind: BaselineKind,
    obj: &SmoothObjective,
    reg: Regularizer,
    cfg: &SolverConfig,
    x_init: DenseVector,
) -> Result<SolverTrace> {
    match kind {
        BaselineKind::ProxGrad => drive(Algorithm::ProxGrad, obj, reg, cfg, x_init),
        BaselineKind::Ag => drive(Algorithm::Ag, obj, reg, cfg, x_init),
        BaselineKind::NeverRestartApg => {
            let cfg = SolverConfig {
                scheme: RestartScheme::never(),
                ..cfg.clone()
            };
            drive(Algorithm::NeverRestartApg, obj, reg, &cfg, x_init)
        }
    }
}

/// Runs any algorithm by tag.
pub fn run_algorithm(
    algorithm: Algorithm,
    obj: &SmoothObjective,
    reg: Regularizer,
    cfg: &SolverConfig,
    x_init: DenseVector,
) -> Result<SolverTrace> {
    match algorithm {
        Algorithm::ApgRestart => run(obj, reg, cfg, x_init),
        Algorithm::ProxGrad => run_baseline(BaselineKind::ProxGrad, obj, reg, cfg, x_init),
        Algorithm::Ag => run_baseline(BaselineKind::Ag, obj, reg, cfg, x_init),
        Algorithm::NeverRestartApg => run_baseline(BaselineKind::NeverRestartApg, obj, reg, cfg, x_init),
    }
}

fn drive(
    algorithm: Algorithm,
    obj: &SmoothObjective,
    reg: Regularizer,
    cfg: &SolverConfig,
    x_init: DenseVector,
) -> Result<SolverTrace> {
    cfg.validate()?;
    if x_init.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            actual: x_init.len(),
        });
    }
    let lipschitz = obj.lipschitz_estimate(cfg.seed)?;
    let needs_l = algorithm == Algorithm::ProxGrad || cfg.stepsize == StepsizeMode::Theory;
    if needs_l && !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::Precondition(format!(
            "stepsizes need a positive Lipschitz estimate, got {lipschitz}"
        )));
    }

    let mut trace = empty_trace(algorithm, cfg, lipschitz);
    let mut state = SolverState::new(x_init, obj, reg)?;
    trace.periods.push(PeriodRecord {
        t: 0,
        checkpoint: 0,
        f_value: state.f_x,
        path_length: 0.0,
        subdiff_distance: subdiff_at(obj, reg, &state.x)?,
        x: state.x.clone(),
    });
    let mut period_sq: f64 = 0.0;

    while state.k < cfg.max_iters {
        let k = state.k;
        let starts_period = algorithm != Algorithm::ProxGrad
            && algorithm != Algorithm::Ag
            && state.restart_pending
            && k > 0;
        if starts_period {
            let last = trace.periods.last_mut().expect("period 0 exists");
            last.path_length = period_sq.sqrt();
            period_sq = 0.0;
            trace.periods.push(PeriodRecord {
                t: trace.periods.len(),
                checkpoint: k,
                f_value: state.f_x,
                path_length: 0.0,
                subdiff_distance: subdiff_at(obj, reg, &state.x)?,
                x: state.x.clone(),
            });
        }

        let step = match algorithm {
            Algorithm::ApgRestart | Algorithm::NeverRestartApg => {
                apg_restart_step(&mut state, obj, reg, cfg, lipschitz)
            }
            Algorithm::ProxGrad => prox_grad_step(&mut state, obj, reg, lipschitz),
            Algorithm::Ag => ag_step(&mut state, obj, reg, cfg, lipschitz),
        };
        let outcome = match step {
            Ok(outcome) => outcome,
            Err(Error::Diverged { iteration, value, .. }) => {
                trace.final_value = value;
                trace.final_x = state.x.clone();
                trace.prox_calls = state.prox_calls;
                trace.grad_calls = state.grad_calls;
                if let Some(last) = trace.periods.last_mut() {
                    last.path_length = period_sq.sqrt();
                }
                return Err(Error::Diverged {
                    iteration,
                    value,
                    partial: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        let record = outcome.record;
        period_sq += record.step_norm * record.step_norm;
        let stop = cfg.tolerance > 0.0 && record.grad_map_norm <= cfg.tolerance;
        trace.iterations.push(record);

        if algorithm != Algorithm::ApgRestart && algorithm != Algorithm::NeverRestartApg {
            if let Err((iteration, value)) = divergence_check(&state, state.k, state.f_x) {
                trace.final_value = value;
                trace.final_x = state.x.clone();
                return Err(Error::Diverged {
                    iteration,
                    value,
                    partial: Box::new(trace),
                });
            }
        }
        if stop {
            break;
        }
    }

    if let Some(last) = trace.periods.last_mut() {
        last.path_length = period_sq.sqrt();
    }
    trace.final_value = state.f_x;
    trace.final_subdiff_distance = subdiff_at(obj, reg, &state.x)?;
    trace.final_x = state.x;
    trace.prox_calls = state.prox_calls;
    trace.grad_calls = state.grad_calls;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SparseMatrixCsr;
    use crate::restart::{RELAXED_RHO, RELAXED_TAU};

    fn half_square() -> SmoothObjective {
        // f(x) = x²/2 with n = 1
        SmoothObjective::quadratic(SparseMatrixCsr::identity(1), DenseVector::zeros(1)).unwrap()
    }

    fn small_lasso() -> (SmoothObjective, Regularizer) {
        let a = SparseMatrixCsr::from_dense(&[
            vec![1.0, 0.2, 0.0],
            vec![0.3, 1.5, -0.4],
            vec![0.0, -0.7, 2.0],
            vec![1.1, 0.0, 0.5],
        ])
        .unwrap();
        let b = DenseVector::from(vec![1.0, -2.0, 0.5, 3.0]);
        (SmoothObjective::quadratic(a, b).unwrap(), Regularizer::L1(0.1))
    }

    #[test]
    fn momentum_examples() {
        assert_eq!(momentum_coefficient(5, 5).unwrap(), 1.0);
        assert_eq!(momentum_coefficient(7, 5).unwrap(), 0.5);
        let seq: Vec<f64> = (0..50).map(|k| momentum_coefficient(k, 0).unwrap()).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(seq[49] < 0.04);
        assert!(momentum_coefficient(3, 4).is_err());
    }

    #[test]
    fn first_iteration_by_hand() {
        let cfg = SolverConfig::new(1, RestartScheme::never()).with_lambda_rule(0.0);
        let trace = run(&half_square(), Regularizer::Zero, &cfg, DenseVector::from(vec![1.0])).unwrap();
        assert_eq!(trace.lipschitz, 1.0);
        assert_eq!(trace.iterations[0].beta, 0.125);
        assert_eq!(trace.iterations[0].lambda, 0.125);
        assert_eq!(trace.final_x[0], 0.875);
    }

    #[test]
    fn one_gradient_and_one_prox_per_iteration() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(40, RestartScheme::fixed(3).unwrap());
        let l = obj.lipschitz_estimate(0).unwrap();
        let mut state = SolverState::new(DenseVector::from(vec![2.0, -1.0, 0.5]), &obj, reg).unwrap();
        let mut resets = 0;
        for _ in 0..40 {
            let pending = state.restart_pending;
            let out = apg_restart_step(&mut state, &obj, reg, &cfg, l).unwrap();
            assert_eq!(out.record.restart, pending);
            resets += usize::from(pending);
        }
        assert_eq!(resets, 14);
        assert_eq!(state.prox_calls, 40);
        assert_eq!(state.grad_calls, 40);
    }

    #[test]
    fn reset_sets_y_to_x_exactly() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(30, RestartScheme::function_value(RELAXED_RHO).unwrap());
        let l = obj.lipschitz_estimate(0).unwrap();
        let mut state = SolverState::new(DenseVector::from(vec![2.0, -1.0, 0.5]), &obj, reg).unwrap();
        for _ in 0..30 {
            let x_before = state.x.clone();
            let pending = state.restart_pending;
            let out = apg_restart_step(&mut state, &obj, reg, &cfg, l).unwrap();
            if pending {
                assert_eq!(out.z, x_before);
                assert_eq!(out.record.alpha_next, 2.0 / 3.0);
            }
            assert!(out.record.alpha_next > 0.0 && out.record.alpha_next <= 1.0);
        }
    }

    #[test]
    fn zero_iterations() {
        let (obj, reg) = small_lasso();
        let x0 = DenseVector::from(vec![0.1, 0.2, 0.3]);
        let trace = run(&obj, reg, &SolverConfig::new(0, RestartScheme::never()), x0.clone()).unwrap();
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.periods.len(), 1);
        assert_eq!(trace.final_x, x0);
        assert_eq!(trace.final_value, trace.periods[0].f_value);
    }

    #[test]
    fn fixed_periods_have_exact_length() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(95, RestartScheme::fixed(10).unwrap());
        let trace = run(&obj, reg, &cfg, DenseVector::zeros(3)).unwrap();
        let checkpoints: Vec<usize> = trace.periods.iter().map(|p| p.checkpoint).collect();
        assert_eq!(checkpoints, (0..10).map(|t| 10 * t).collect::<Vec<_>>());
        let flagged: Vec<usize> = trace.iterations.iter().filter(|r| r.restart).map(|r| r.k).collect();
        assert_eq!(flagged, checkpoints);
    }

    #[test]
    fn lasso_checkpoint_values_strictly_decrease() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(300, RestartScheme::fixed(10).unwrap());
        let trace = run(&obj, reg, &cfg, DenseVector::from(vec![3.0, 3.0, -3.0])).unwrap();
        // strict while the iterates still move
        for w in trace.periods.windows(2) {
            if w[0].path_length > 1e-7 {
                assert!(w[1].f_value < w[0].f_value, "{:?}", w);
            }
        }
    }

    #[test]
    fn min_period_respected() {
        let (obj, reg) = small_lasso();
        for scheme in [
            RestartScheme::function_value(RELAXED_RHO).unwrap(),
            RestartScheme::gradient_mapping(RELAXED_TAU).unwrap().with_min_period(4).unwrap(),
            RestartScheme::non_monotone(RELAXED_TAU).unwrap(),
        ] {
            let cfg = SolverConfig::new(200, scheme);
            let trace = run(&obj, reg, &cfg, DenseVector::from(vec![3.0, 3.0, -3.0])).unwrap();
            for w in trace.periods.windows(2) {
                assert!(w[1].checkpoint - w[0].checkpoint >= scheme.min_period());
            }
        }
    }

    #[test]
    fn never_matches_baseline_and_is_single_period() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(100, RestartScheme::never());
        let x0 = DenseVector::from(vec![1.0, 1.0, 1.0]);
        let a = run(&obj, reg, &cfg, x0.clone()).unwrap();
        let b = run_baseline(
            BaselineKind::NeverRestartApg,
            &obj,
            reg,
            &cfg.clone().with_stepsize(StepsizeMode::Theory),
            x0,
        )
        .unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.periods.len(), 1);
        assert_eq!(a.restart_count(), 1);
    }

    #[test]
    fn prox_call_counts() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(37, RestartScheme::fixed(5).unwrap());
        let x0 = DenseVector::zeros(3);
        let apg = run(&obj, reg, &cfg, x0.clone()).unwrap();
        let ag = run_baseline(BaselineKind::Ag, &obj, reg, &cfg, x0.clone()).unwrap();
        let pg = run_baseline(BaselineKind::ProxGrad, &obj, reg, &cfg, x0).unwrap();
        assert_eq!(apg.prox_calls, 37);
        assert_eq!(ag.prox_calls, 74);
        assert_eq!(pg.prox_calls, 37);
        assert_eq!(apg.grad_calls, 37);
    }

    #[test]
    fn prox_grad_is_gradient_descent_without_regularizer() {
        let (obj, _) = small_lasso();
        let cfg = SolverConfig::new(20, RestartScheme::never());
        let trace = run_baseline(BaselineKind::ProxGrad, &obj, Regularizer::Zero, &cfg, DenseVector::zeros(3)).unwrap();
        let eta = 1.0 / trace.lipschitz;
        let mut x = DenseVector::zeros(3);
        for _ in 0..20 {
            x = x.add_scaled(-eta, &obj.gradient(&x).unwrap());
        }
        assert!(x.distance(&trace.final_x) <= 1e-14);
    }

    #[test]
    fn deterministic_reruns() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(150, RestartScheme::gradient_mapping(RELAXED_TAU).unwrap()).with_seed(9);
        let x0 = DenseVector::random_normal(3, 1.0, 4);
        assert_eq!(run(&obj, reg, &cfg, x0.clone()).unwrap(), run(&obj, reg, &cfg, x0).unwrap());
    }

    #[test]
    fn tolerance_stops_early() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(100_000, RestartScheme::fixed(10).unwrap()).with_tolerance(1e-6);
        let trace = run(&obj, reg, &cfg, DenseVector::zeros(3)).unwrap();
        assert!(trace.n_iterations() < 100_000);
        assert!(trace.iterations.last().unwrap().grad_map_norm <= 1e-6);
    }

    #[test]
    fn divergence_aborts_with_partial_trace() {
        let (obj, reg) = small_lasso();
        let cfg = SolverConfig::new(10_000, RestartScheme::never()).with_stepsize(StepsizeMode::Custom { beta: 50.0 });
        match run(&obj, reg, &cfg, DenseVector::from(vec![1.0, 1.0, 1.0])) {
            Err(Error::Diverged { iteration, partial, .. }) => {
                assert!(iteration > 0);
                assert_eq!(partial.iterations.len(), iteration - 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        let (obj, reg) = small_lasso();
        let x0 = DenseVector::zeros(3);
        let bad_rule = SolverConfig::new(5, RestartScheme::never()).with_lambda_rule(1.5);
        assert!(run(&obj, reg, &bad_rule, x0.clone()).is_err());
        let bad_dim = SolverConfig::new(5, RestartScheme::never());
        assert!(run(&obj, reg, &bad_dim, DenseVector::zeros(2)).is_err());
    }
}
