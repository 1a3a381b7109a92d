//! Post-hoc analysis of solver traces: the period-wise descent and
//! subdifferential inequalities, the telescoped global-rate inequality, path
//! lengths per period, and asymptotic rate classification.

use std::fmt;

use crate::numkit::DenseVector;
use crate::solver::{Algorithm, SolverTrace, StepsizeMode};
use crate::{Error, Result};

/// Relative slack for the period-wise descent check.
pub const DESCENT_REL_TOL: f64 = 1e-9;
/// Absolute slack for the subdifferential and global-rate checks.
pub const ABS_TOL: f64 = 1e-9;
/// Constant in `dist²(0, ∂F(x_{Q_t})) <= 162 L² Σ‖Δx‖²`.
pub const SUBDIFF_CONSTANT: f64 = 162.0;
/// Constant in `(1/(256L)) Σ ‖G‖² <= F(x_0) − F(x_K)`.
pub const GLOBAL_RATE_CONSTANT: f64 = 256.0;
/// Number of trailing periods examined by [`path_length_summary`].
pub const TAIL_PERIODS: usize = 50;
/// Tail increment below which the path length is reported as converged.
pub const PATH_TAIL_TOL: f64 = 1e-8;
/// A gap at or below this value followed only by exact zeros is classified as
/// finite termination.
pub const ZERO_GAP: f64 = 1e-14;
/// Minimum R² for a regime to be reported.
pub const MIN_R_SQUARED: f64 = 0.9;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckName {
    /// `F(x_{Q_t}) <= F(x_{Q_{t−1}}) − (L/4) Σ‖x_{k+1} − x_k‖²`
    PeriodDescent,
    /// `dist²(0, ∂F(x_{Q_t})) <= 162 L² Σ‖x_{k+1} − x_k‖²`
    SubdiffBound,
    /// `(1/(256L)) Σ_{j<K} ‖G_{λ_j}(z_j, ∇f(z_j))‖² <= F(x_0) − F(x_K)`
    GlobalRate,
    /// `β_k = 1/(8L)` and `β_k <= λ_k <= (1 + α_{k+1}) β_k`
    StepsizeRule,
}

impl CheckName {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::PeriodDescent => "period_descent",
            CheckName::SubdiffBound => "subdiff_bound",
            CheckName::GlobalRate => "global_rate",
            CheckName::StepsizeRule => "stepsize_rule",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Period(usize),
    Iteration(usize),
    /// The segment from the last checkpoint to `x_K`.
    Final,
    Whole,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Period(t) => write!(f, "period {t}"),
            Location::Iteration(k) => write!(f, "iteration {k}"),
            Location::Final => f.write_str("final"),
            Location::Whole => f.write_str("whole trace"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: CheckName,
    /// Largest `lhs − rhs − slack` seen; the check passes iff this is `<= 0`.
    pub worst_margin: f64,
    pub worst_location: Option<Location>,
    pub first_failure: Option<Location>,
    pub evaluated: usize,
}

impl CheckRecord {
    fn new(name: CheckName) -> Self {
        Self {
            name,
            worst_margin: f64::NEG_INFINITY,
            worst_location: None,
            first_failure: None,
            evaluated: 0,
        }
    }

    fn observe(&mut self, margin: f64, at: Location) {
        self.evaluated += 1;
        if margin > self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_location = Some(at);
        }
        if self.first_failure.is_none() && !(margin <= 0.0) {
            self.first_failure = Some(at);
        }
    }

    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }

    /// Worst margin with the `-inf` of an empty check mapped to 0.
    pub fn margin_or_zero(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.worst_margin
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<CheckRecord>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckRecord::passed)
    }

    pub fn get(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            write!(
                f,
                "{status} {:<15} worst margin {:+.3e} over {} evaluations",
                c.name.as_str(),
                c.margin_or_zero(),
                c.evaluated
            )?;
            if let Some(at) = c.first_failure {
                write!(f, ", first failure at {at}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Evaluates the period-wise descent, subdifferential, global-rate and
/// stepsize inequalities using only the data recorded in `trace`.
///
/// The inequalities only hold for the theory stepsizes, so traces from other
/// stepsize modes or from algorithms other than APG-restart are refused.
pub fn check_invariants(trace: &SolverTrace, lipschitz: f64) -> Result<InvariantReport> {
    if trace.stepsize != StepsizeMode::Theory {
        return Err(Error::Precondition(format!(
            "invariant checks need theory stepsizes (beta = 1/(8L)); trace uses {} stepsizes",
            trace.stepsize.name()
        )));
    }
    if !matches!(trace.algorithm, Algorithm::ApgRestart | Algorithm::NeverRestartApg) {
        return Err(Error::Precondition(format!(
            "invariant checks apply to APG-restart traces, not {}",
            trace.algorithm.name()
        )));
    }
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidArgument(format!("L must be > 0, got {lipschitz}")));
    }
    let l = lipschitz;
    let mut descent = CheckRecord::new(CheckName::PeriodDescent);
    let mut subdiff = CheckRecord::new(CheckName::SubdiffBound);
    let mut global = CheckRecord::new(CheckName::GlobalRate);
    let mut steps = CheckRecord::new(CheckName::StepsizeRule);

    let path_sq: Vec<f64> = trace
        .recomputed_path_lengths()
        .into_iter()
        .map(|p| p * p)
        .collect();

    for t in 1..trace.periods.len() {
        let (prev, curr) = (&trace.periods[t - 1], &trace.periods[t]);
        let rhs = prev.f_value - 0.25 * l * path_sq[t - 1];
        let slack = DESCENT_REL_TOL * prev.f_value.abs().max(1.0);
        descent.observe(curr.f_value - rhs - slack, Location::Period(t));

        let bound = SUBDIFF_CONSTANT * l * l * path_sq[t - 1];
        subdiff.observe(curr.subdiff_distance.powi(2) - bound - ABS_TOL, Location::Period(t));
    }
    if let Some(last) = trace.periods.last() {
        let t = trace.periods.len() - 1;
        if !trace.period_range(t).is_empty() {
            let rhs = last.f_value - 0.25 * l * path_sq[t];
            let slack = DESCENT_REL_TOL * last.f_value.abs().max(1.0);
            descent.observe(trace.final_value - rhs - slack, Location::Final);
            let bound = SUBDIFF_CONSTANT * l * l * path_sq[t];
            subdiff.observe(trace.final_subdiff_distance.powi(2) - bound - ABS_TOL, Location::Final);
        }
    }

    let sum_g_sq: f64 = trace.iterations.iter().map(|r| r.grad_map_norm * r.grad_map_norm).sum();
    let lhs = sum_g_sq / (GLOBAL_RATE_CONSTANT * l);
    global.observe(lhs - (trace.initial_value() - trace.final_value) - ABS_TOL, Location::Whole);

    let beta_theory = 1.0 / (8.0 * l);
    for r in &trace.iterations {
        let tol = 1e-12 * r.beta.abs();
        let margin = [
            (r.beta - beta_theory).abs() - 1e-12 * beta_theory,
            r.beta - r.lambda - tol,
            r.lambda - (1.0 + r.alpha_next) * r.beta - tol,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        steps.observe(margin, Location::Iteration(r.k));
    }

    Ok(InvariantReport {
        checks: vec![descent, subdiff, global, steps],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLengthRow {
    pub t: usize,
    pub length: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLengthSummary {
    pub rows: Vec<PathLengthRow>,
    /// Growth of the cumulative length over the last [`TAIL_PERIODS`] periods
    /// (the whole length when the trace has fewer periods).
    pub tail_increment: f64,
    pub converged: bool,
}

impl PathLengthSummary {
    pub fn total(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cumulative)
    }
}

/// Per-period path lengths `L_t` recomputed from the iteration rows, with
/// their running sum.
pub fn path_length_summary(trace: &SolverTrace) -> PathLengthSummary {
    let mut cumulative = 0.0;
    let rows: Vec<PathLengthRow> = trace
        .recomputed_path_lengths()
        .into_iter()
        .enumerate()
        .map(|(t, length)| {
            cumulative += length;
            PathLengthRow { t, length, cumulative }
        })
        .collect();
    let total = rows.last().map_or(0.0, |r| r.cumulative);
    let tail_increment = if rows.len() > TAIL_PERIODS {
        total - rows[rows.len() - 1 - TAIL_PERIODS].cumulative
    } else {
        total
    };
    PathLengthSummary {
        rows,
        tail_increment,
        converged: tail_increment < PATH_TAIL_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Finite,
    Linear,
    Sublinear,
    Inconclusive,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Finite => "finite",
            Regime::Linear => "linear",
            Regime::Sublinear => "sublinear",
            Regime::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub regime: Regime,
    /// `−slope` of `log r_t` against `t` (Linear) or against `log t`
    /// (Sublinear); for Finite, the first index with a zero gap.
    pub parameter: f64,
    pub r_squared: f64,
    /// Index range of the tail window.
    pub window: (usize, usize),
}

/// Least-squares line through `(x, y)`; returns `(slope, R²)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0);
    (slope, r2)
}

/// Classifies the decay of `gaps[t] = F(x_{Q_t}) − F*`.
///
/// Finite termination is reported when some gap is at most 1e-14 and every
/// later gap is exactly zero (after clipping). Otherwise the tail window is the last `ceil(tail_fraction · n)` entries. A linear
/// regime is a line in `(t, log r_t)`, a sublinear one a line in
/// `(log(t + 1), log r_t)`; whichever has the larger R² wins provided it
/// decreases and reaches R² >= 0.9.
pub fn fit_rate(gaps: &[f64], tail_fraction: f64) -> Result<RateFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    if let Some((t, r)) = gaps.iter().enumerate().find(|(_, r)| **r < -1e-12 || r.is_nan()) {
        return Err(Error::InvalidArgument(format!("gap {r} at index {t} is negative")));
    }
    let n = gaps.len();
    let start = n - ((tail_fraction * n as f64).ceil() as usize).min(n);
    let inconclusive = RateFit {
        regime: Regime::Inconclusive,
        parameter: f64::NAN,
        r_squared: 0.0,
        window: (start, n),
    };
    let first_zero = gaps.iter().position(|r| *r <= ZERO_GAP);
    if let Some(t) = first_zero.filter(|&t| gaps[t + 1..].iter().all(|r| *r <= 0.0)) {
        return Ok(RateFit {
            regime: Regime::Finite,
            parameter: t as f64,
            r_squared: 1.0,
            window: (start, n),
        });
    }
    if n - start < 5 {
        return Ok(inconclusive);
    }
    let log_r: Vec<f64> = gaps[start..].iter().map(|r| r.ln()).collect();
    let ts: Vec<f64> = (start..n).map(|t| t as f64).collect();
    let log_ts: Vec<f64> = (start..n).map(|t| ((t + 1) as f64).ln()).collect();
    let (lin_slope, lin_r2) = linear_fit(&ts, &log_r);
    let (pow_slope, pow_r2) = linear_fit(&log_ts, &log_r);

    let linear = (lin_slope < 0.0 && lin_r2 >= MIN_R_SQUARED).then_some((Regime::Linear, -lin_slope, lin_r2));
    let sublinear = (pow_slope < 0.0 && pow_r2 >= MIN_R_SQUARED).then_some((Regime::Sublinear, -pow_slope, pow_r2));
    let best = match (linear, sublinear) {
        (Some(a), Some(b)) => Some(if b.2 > a.2 { b } else { a }),
        (a, b) => a.or(b),
    };
    Ok(match best {
        Some((regime, parameter, r_squared)) => RateFit {
            regime,
            parameter,
            r_squared,
            window: (start, n),
        },
        None => inconclusive,
    })
}

/// `F(x_{Q_t}) − F*` for every checkpoint, clipped at 0.
pub fn checkpoint_gaps(trace: &SolverTrace, f_star: f64) -> Vec<f64> {
    trace.periods.iter().map(|p| (p.f_value - f_star).max(0.0)).collect()
}

/// `‖x_{Q_t} − x*‖` for every checkpoint.
pub fn checkpoint_distances(trace: &SolverTrace, x_star: &DenseVector) -> Vec<f64> {
    trace.periods.iter().map(|p| p.x.distance(x_star)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SparseMatrixCsr;
    use crate::objectives::SmoothObjective;
    use crate::prox::Regularizer;
    use crate::restart::RestartScheme;
    use crate::solver::{run, SolverConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lasso_trace(scheme: RestartScheme, iters: usize) -> SolverTrace {
        let a = SparseMatrixCsr::from_dense(&[
            vec![1.0, 0.2, 0.0],
            vec![0.3, 1.5, -0.4],
            vec![0.0, -0.7, 2.0],
            vec![1.1, 0.0, 0.5],
        ])
        .unwrap();
        let obj = SmoothObjective::quadratic(a, DenseVector::from(vec![1.0, -2.0, 0.5, 3.0])).unwrap();
        let cfg = SolverConfig::new(iters, scheme);
        run(&obj, Regularizer::L1(0.1), &cfg, DenseVector::from(vec![2.0, -2.0, 2.0])).unwrap()
    }

    #[test]
    fn clean_trace_passes_and_is_pure() {
        let trace = lasso_trace(RestartScheme::fixed(10).unwrap(), 200);
        let report = check_invariants(&trace, trace.lipschitz).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report, check_invariants(&trace, trace.lipschitz).unwrap());
    }

    #[test]
    fn corrupted_value_fails_descent_at_that_period() {
        let mut trace = lasso_trace(RestartScheme::fixed(10).unwrap(), 200);
        trace.periods[4].f_value += 1.0;
        let report = check_invariants(&trace, trace.lipschitz).unwrap();
        let descent = report.get(CheckName::PeriodDescent).unwrap();
        assert_eq!(descent.first_failure, Some(Location::Period(4)));
        assert!(!report.passed());
    }

    #[test]
    fn single_period_trace() {
        let trace = lasso_trace(RestartScheme::never(), 100);
        let report = check_invariants(&trace, trace.lipschitz).unwrap();
        assert!(report.passed(), "{report}");
        // only the final segment of the single period is checked
        assert_eq!(report.get(CheckName::PeriodDescent).unwrap().evaluated, 1);
        assert_eq!(report.get(CheckName::GlobalRate).unwrap().evaluated, 1);
    }

    #[test]
    fn refuses_experiment_traces() {
        let mut trace = lasso_trace(RestartScheme::never(), 5);
        trace.stepsize = StepsizeMode::Experiment;
        assert!(matches!(check_invariants(&trace, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn path_lengths() {
        let trace = lasso_trace(RestartScheme::fixed(7).unwrap(), 300);
        let summary = path_length_summary(&trace);
        for (row, p) in summary.rows.iter().zip(&trace.periods) {
            assert!((row.length - p.path_length).abs() <= 1e-12);
        }
        assert!(summary.rows.windows(2).all(|w| w[1].cumulative >= w[0].cumulative));
        let direct: f64 = trace.periods.iter().map(|p| p.path_length).sum();
        assert!((summary.total() - direct).abs() <= 1e-12);
    }

    #[test]
    fn stationary_trace_has_zero_length() {
        // start at the minimiser of x²/2 with g = 0
        let obj = SmoothObjective::quadratic(SparseMatrixCsr::identity(2), DenseVector::zeros(2)).unwrap();
        let cfg = SolverConfig::new(40, RestartScheme::fixed(4).unwrap());
        let trace = run(&obj, Regularizer::Zero, &cfg, DenseVector::zeros(2)).unwrap();
        let summary = path_length_summary(&trace);
        assert!(summary.rows.iter().all(|r| r.length == 0.0));
        assert!(summary.converged);
    }

    #[test]
    fn fit_examples() {
        let geometric: Vec<f64> = (0..=100).map(|t| 0.5f64.powi(t)).collect();
        let fit = fit_rate(&geometric, 0.5).unwrap();
        assert_eq!(fit.regime, Regime::Linear);
        assert!((fit.parameter - 2f64.ln()).abs() <= 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-12);

        // gaps[i] = (i + 1)^−2, i.e. t = 1..200
        let power: Vec<f64> = (1..=200).map(|t| (t as f64).powi(-2)).collect();
        let fit = fit_rate(&power, 0.5).unwrap();
        assert_eq!(fit.regime, Regime::Sublinear);
        assert!((fit.parameter - 2.0).abs() <= 0.05);

        let finite = [1.0, 0.5, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(fit_rate(&finite, 0.5).unwrap().regime, Regime::Finite);

        assert_eq!(fit_rate(&[1.0, 0.5, 0.25, 0.1], 1.0).unwrap().regime, Regime::Inconclusive);
        assert_eq!(fit_rate(&[1.0; 20], 1.0).unwrap().regime, Regime::Inconclusive);
        assert!(fit_rate(&[1.0, 2.0], 0.0).is_err());
        assert!(fit_rate(&[1.0, -0.5], 1.0).is_err());
    }

    #[test]
    fn fit_recovers_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let rate: f64 = rng.random_range(0.05..1.5);
            let c: f64 = rng.random_range(0.1..10.0);
            let gaps: Vec<f64> = (0..=100).map(|t| c * (-rate * t as f64).exp()).collect();
            let fit = fit_rate(&gaps, 0.5).unwrap();
            assert_eq!(fit.regime, Regime::Linear);
            assert!((fit.parameter - rate).abs() <= 1e-6);

            let p: f64 = rng.random_range(0.5..3.0);
            let gaps: Vec<f64> = (1..=200).map(|t| c * (t as f64).powf(-p)).collect();
            let fit = fit_rate(&gaps, 0.5).unwrap();
            assert_eq!(fit.regime, Regime::Sublinear);
            assert!((fit.parameter - p).abs() <= 0.05);
        }
    }
}
