use std::fmt::Write as _;

use crate::numkit::{format_float, DenseVector};

use super::{Algorithm, StepsizeMode};

/// One row per executed iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(x_k)` after any reset at this iteration.
    pub f_value: f64,
    /// `‖G_{λ_k}(z_k, ∇f(z_k))‖`
    pub grad_map_norm: f64,
    /// `‖x_{k+1} − x_k‖`
    pub step_norm: f64,
    /// The reset branch ran at this iteration.
    pub restart: bool,
    pub lambda: f64,
    pub beta: f64,
    /// `α_{k+1}`
    pub alpha_next: f64,
}

/// One row per restart period `t`, starting at checkpoint `Q_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub t: usize,
    pub checkpoint: usize,
    /// `F(x_{Q_t})`
    pub f_value: f64,
    /// `sqrt(Σ_{k=Q_t}^{Q_{t+1}−1} ‖x_{k+1} − x_k‖²)`; the last period is
    /// closed at the final iteration.
    pub path_length: f64,
    /// `dist(0, ∂F(x_{Q_t}))`
    pub subdiff_distance: f64,
    /// `x_{Q_t}`
    pub x: DenseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub algorithm: Algorithm,
    pub scheme_label: String,
    pub stepsize: StepsizeMode,
    /// Lipschitz estimate used by the run (also recorded in Experiment mode).
    pub lipschitz: f64,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    pub periods: Vec<PeriodRecord>,
    /// `F(x_K)`
    pub final_value: f64,
    /// `dist(0, ∂F(x_K))`
    pub final_subdiff_distance: f64,
    pub final_x: DenseVector,
    /// Proximal evaluations performed by the algorithm itself.
    pub prox_calls: usize,
    /// Gradient evaluations performed by the algorithm itself.
    pub grad_calls: usize,
}

impl SolverTrace {
    pub fn n_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn restart_count(&self) -> usize {
        self.iterations.iter().filter(|r| r.restart).count()
    }

    /// `F(x_0)`, i.e. the value at the first checkpoint.
    pub fn initial_value(&self) -> f64 {
        self.periods.first().map_or(self.final_value, |p| p.f_value)
    }

    /// Iteration range `[Q_t, Q_{t+1})` covered by period `t`.
    pub fn period_range(&self, t: usize) -> std::ops::Range<usize> {
        let start = self.periods[t].checkpoint;
        let end = self
            .periods
            .get(t + 1)
            .map_or(self.iterations.len(), |p| p.checkpoint);
        start..end
    }

    /// Per-period path lengths recomputed from the iteration rows.
    pub fn recomputed_path_lengths(&self) -> Vec<f64> {
        (0..self.periods.len())
            .map(|t| {
                self.iterations[self.period_range(t)]
                    .iter()
                    .map(|r| r.step_norm * r.step_norm)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

/// Column header of the per-iteration CSV.
pub const TRACE_CSV_HEADER: &str = "k,F,grad_map_norm,step_norm,restart,lambda,beta,alpha_next";

impl SolverTrace {
    /// Iteration rows as CSV with LF endings; `restart` is 0/1.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.iterations.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.k,
                format_float(r.f_value),
                format_float(r.grad_map_norm),
                format_float(r.step_norm),
                u8::from(r.restart),
                format_float(r.lambda),
                format_float(r.beta),
                format_float(r.alpha_next)
            );
        }
        out
    }
}
