//! Smooth parts `f` of the composite problem: value, gradient and an upper
//! bound on the Lipschitz constant of `∇f`.
//!
//! Every loss is averaged over the `n` rows of the design matrix.

use crate::numkit::{spectral_norm_sq, spmv, spmv_transpose, DenseVector, SparseMatrixCsr, POWER_ITERS};
use crate::{Error, Result};

/// Default weight of the nonconvex penalty `α Σ x_j²/(1+x_j²)`.
pub const DEFAULT_NCVX_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind {
    /// Cross-entropy on ±1 labels plus `α Σ x_j²/(1+x_j²)`.
    LogisticNcvx { alpha: f64 },
    /// Mean of `log(s²/2 + 1)` over residuals `s = aᵢᵀx − bᵢ`.
    RobustRegression,
    /// `‖Ax − b‖² / (2n)`.
    Quadratic,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::LogisticNcvx { .. } => "logistic_ncvx",
            ObjectiveKind::RobustRegression => "robust",
            ObjectiveKind::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoothObjective {
    kind: ObjectiveKind,
    features: SparseMatrixCsr,
    targets: DenseVector,
}

/// `log(1 + exp(m))` without overflow.
#[inline]
fn softplus(m: f64) -> f64 {
    (-m.abs()).exp().ln_1p() + m.max(0.0)
}

#[inline]
fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// `t²/(1+t²)`
#[inline]
fn ncvx_term(t: f64) -> f64 {
    let t2 = t * t;
    t2 / (1.0 + t2)
}

/// `d/dt t²/(1+t²) = 2t/(1+t²)²`
#[inline]
fn ncvx_derivative(t: f64) -> f64 {
    let q = 1.0 + t * t;
    2.0 * t / (q * q)
}

/// `log(s²/2 + 1)`
#[inline]
pub fn robust_loss(s: f64) -> f64 {
    (0.5 * s * s).ln_1p()
}

#[inline]
fn robust_derivative(s: f64) -> f64 {
    s / (0.5 * s * s + 1.0)
}

impl SmoothObjective {
    pub fn new(kind: ObjectiveKind, features: SparseMatrixCsr, targets: DenseVector) -> Result<Self> {
        if targets.len() != features.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                actual: targets.len(),
            });
        }
        if let ObjectiveKind::LogisticNcvx { alpha } = kind {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
            }
            if let Some((i, b)) = targets.iter().enumerate().find(|(_, b)| **b != 1.0 && **b != -1.0) {
                return Err(Error::InvalidArgument(format!(
                    "logistic labels must be +1/-1, row {i} has {b}"
                )));
            }
        }
        Ok(Self {
            kind,
            features,
            targets,
        })
    }

    pub fn logistic_ncvx(features: SparseMatrixCsr, labels: DenseVector, alpha: f64) -> Result<Self> {
        Self::new(ObjectiveKind::LogisticNcvx { alpha }, features, labels)
    }

    pub fn robust(features: SparseMatrixCsr, targets: DenseVector) -> Result<Self> {
        Self::new(ObjectiveKind::RobustRegression, features, targets)
    }

    pub fn quadratic(features: SparseMatrixCsr, targets: DenseVector) -> Result<Self> {
        Self::new(ObjectiveKind::Quadratic, features, targets)
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_rows()
    }

    pub fn features(&self) -> &SparseMatrixCsr {
        &self.features
    }

    pub fn targets(&self) -> &DenseVector {
        &self.targets
    }

    fn inv_n(&self) -> f64 {
        match self.n_samples() {
            0 => 0.0,
            n => 1.0 / n as f64,
        }
    }

    fn check_dim(&self, x: &DenseVector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &DenseVector) -> Result<f64> {
        self.check_dim(x)?;
        let ax = spmv(&self.features, x)?;
        let b = &self.targets;
        let inv_n = self.inv_n();
        let v = match self.kind {
            ObjectiveKind::LogisticNcvx { alpha } => {
                let loss: f64 = ax.iter().zip(b.iter()).map(|(t, bi)| softplus(-bi * t)).sum();
                let pen: f64 = x.iter().map(|&t| ncvx_term(t)).sum();
                inv_n * loss + alpha * pen
            }
            ObjectiveKind::RobustRegression => {
                inv_n * ax.iter().zip(b.iter()).map(|(t, bi)| robust_loss(t - bi)).sum::<f64>()
            }
            ObjectiveKind::Quadratic => {
                0.5 * inv_n * ax.iter().zip(b.iter()).map(|(t, bi)| (t - bi) * (t - bi)).sum::<f64>()
            }
        };
        Ok(v)
    }

    pub fn gradient(&self, x: &DenseVector) -> Result<DenseVector> {
        self.check_dim(x)?;
        let ax = spmv(&self.features, x)?;
        let b = &self.targets;
        let inv_n = self.inv_n();
        let residual: DenseVector = match self.kind {
            ObjectiveKind::LogisticNcvx { .. } => ax
                .iter()
                .zip(b.iter())
                .map(|(t, bi)| -bi * sigmoid(-bi * t) * inv_n)
                .collect(),
            ObjectiveKind::RobustRegression => ax
                .iter()
                .zip(b.iter())
                .map(|(t, bi)| robust_derivative(t - bi) * inv_n)
                .collect(),
            ObjectiveKind::Quadratic => ax.iter().zip(b.iter()).map(|(t, bi)| (t - bi) * inv_n).collect(),
        };
        let mut grad = spmv_transpose(&self.features, &residual)?;
        if let ObjectiveKind::LogisticNcvx { alpha } = self.kind {
            for (g, &t) in grad.iter_mut().zip(x.iter()) {
                *g += alpha * ncvx_derivative(t);
            }
        }
        Ok(grad)
    }

    /// Upper bound on the Lipschitz constant of `∇f` from curvature bounds of
    /// the scalar losses and a power-iteration estimate of `‖A‖₂²`.
    pub fn lipschitz_estimate(&self, seed: u64) -> Result<f64> {
        let a_sq = spectral_norm_sq(&self.features, POWER_ITERS, seed)?;
        let inv_n = self.inv_n();
        Ok(match self.kind {
            // sigmoid' <= 1/4, |d²/dt² t²/(1+t²)| <= 2
            ObjectiveKind::LogisticNcvx { alpha } => 0.25 * a_sq * inv_n + 2.0 * alpha,
            // |ℓ''| <= 1
            ObjectiveKind::RobustRegression => a_sq * inv_n,
            ObjectiveKind::Quadratic => a_sq * inv_n,
        })
    }
}
