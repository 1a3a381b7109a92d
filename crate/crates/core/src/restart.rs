//! Online restart predicates.
//!
//! A scheme is queried at the end of every iteration `k`; a `true` answer ends
//! the current period and makes iteration `k + 1` run the reset branch.

use crate::numkit::DenseVector;
use crate::{Error, Result};

/// Relaxation factor for the function-value scheme used in the experiments.
pub const RELAXED_RHO: f64 = 0.8;
/// Cosine slack for the gradient-mapping and non-monotone schemes used in the
/// experiments.
pub const RELAXED_TAU: f64 = -0.2;
/// Default guard between adaptive restarts.
pub const DEFAULT_MIN_PERIOD: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    /// Restart every `q` iterations.
    Fixed { q: usize },
    /// Restart when `F(x_{k+1}) > ρ F(x_k)`.
    FunctionValue { rho: f64 },
    /// Restart when `⟨z−y, y'−z⟩ ≥ τ ‖z−y‖ ‖y'−z‖`.
    GradientMapping { tau: f64 },
    /// Restart when `⟨z−y, y'−(z+x)/2⟩ ≥ τ ‖z−y‖ ‖y'−(z+x)/2‖`.
    NonMonotone { tau: f64 },
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartScheme {
    kind: SchemeKind,
    min_period: usize,
}

/// Quantities available at the end of iteration `k`.
#[derive(Debug, Clone, Copy)]
pub struct RestartObservation<'a> {
    pub k: usize,
    /// `k − Q_t`
    pub since_restart: usize,
    /// `F(x_{k+1})`
    pub f_curr: f64,
    /// `F(x_k)`
    pub f_prev: f64,
    pub y: &'a DenseVector,
    pub z: &'a DenseVector,
    pub y_next: &'a DenseVector,
    pub x: &'a DenseVector,
}

impl RestartScheme {
    /// Fixed period `q`. The guard is 1 so that every `q >= 1` is honoured.
    pub fn fixed(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("fixed restart period must be >= 1".into()));
        }
        Ok(Self {
            kind: SchemeKind::Fixed { q },
            min_period: 1,
        })
    }

    pub fn function_value(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
        }
        Ok(Self {
            kind: SchemeKind::FunctionValue { rho },
            min_period: DEFAULT_MIN_PERIOD,
        })
    }

    pub fn gradient_mapping(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            kind: SchemeKind::GradientMapping { tau },
            min_period: DEFAULT_MIN_PERIOD,
        })
    }

    pub fn non_monotone(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            kind: SchemeKind::NonMonotone { tau },
            min_period: DEFAULT_MIN_PERIOD,
        })
    }

    pub fn never() -> Self {
        Self {
            kind: SchemeKind::Never,
            min_period: 1,
        }
    }

    pub fn with_min_period(mut self, min_period: usize) -> Result<Self> {
        if min_period == 0 {
            return Err(Error::InvalidArgument("min_period must be >= 1".into()));
        }
        self.min_period = min_period;
        Ok(self)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn min_period(&self) -> usize {
        self.min_period
    }

    /// Short label, e.g. `fixed10`, `fs0.8`, `gs-0.2`.
    pub fn label(&self) -> String {
        match self.kind {
            SchemeKind::Fixed { q } => format!("fixed{q}"),
            SchemeKind::FunctionValue { rho } => format!("fs{rho}"),
            SchemeKind::GradientMapping { tau } => format!("gs{tau}"),
            SchemeKind::NonMonotone { tau } => format!("ns{tau}"),
            SchemeKind::Never => "never".into(),
        }
    }

    pub fn should_restart(&self, obs: &RestartObservation<'_>) -> bool {
        if obs.since_restart + 1 < self.min_period {
            return false;
        }
        match self.kind {
            SchemeKind::Fixed { q } => obs.since_restart + 1 == q,
            SchemeKind::FunctionValue { rho } => obs.f_curr > rho * obs.f_prev,
            SchemeKind::GradientMapping { tau } => {
                let d = obs.z.sub(obs.y);
                let e = obs.y_next.sub(obs.z);
                cosine_at_least(&d, &e, tau)
            }
            SchemeKind::NonMonotone { tau } => {
                let d = obs.z.sub(obs.y);
                let mid = obs.z.add(obs.x).scale(0.5);
                let e = obs.y_next.sub(&mid);
                cosine_at_least(&d, &e, tau)
            }
            SchemeKind::Never => false,
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if (-1.0..=0.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau must lie in [-1, 0], got {tau}")))
    }
}

/// `⟨a, b⟩ ≥ τ ‖a‖ ‖b‖`, false when either vector vanishes.
fn cosine_at_least(a: &DenseVector, b: &DenseVector, tau: f64) -> bool {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return false;
    }
    a.dot(b) >= tau * na * nb
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs<'a>(
        since: usize,
        f_curr: f64,
        f_prev: f64,
        vecs: &'a [DenseVector; 4],
    ) -> RestartObservation<'a> {
        RestartObservation {
            k: since,
            since_restart: since,
            f_curr,
            f_prev,
            y: &vecs[0],
            z: &vecs[1],
            y_next: &vecs[2],
            x: &vecs[3],
        }
    }

    fn zeros() -> [DenseVector; 4] {
        std::array::from_fn(|_| DenseVector::zeros(2))
    }

    #[test]
    fn function_value_examples() {
        let v = zeros();
        let strict = RestartScheme::function_value(1.0).unwrap();
        assert!(strict.should_restart(&obs(3, 1.2, 1.0, &v)));
        assert!(!strict.should_restart(&obs(3, 1.0, 1.0, &v)));
        let relaxed = RestartScheme::function_value(RELAXED_RHO).unwrap();
        assert!(relaxed.should_restart(&obs(3, 0.9, 1.0, &v)));
        assert!(!relaxed.should_restart(&obs(3, 0.7, 1.0, &v)));
    }

    #[test]
    fn gradient_mapping_boundary_fires() {
        // z − y = e1, y' − z = e2: inner product exactly 0
        let v = [
            DenseVector::from(vec![0.0, 0.0]),
            DenseVector::from(vec![1.0, 0.0]),
            DenseVector::from(vec![1.0, 1.0]),
            DenseVector::from(vec![0.0, 0.0]),
        ];
        let gs = RestartScheme::gradient_mapping(0.0).unwrap();
        assert!(gs.should_restart(&obs(4, 0.0, 0.0, &v)));
    }

    #[test]
    fn cosine_tests_ignore_zero_vectors() {
        let v = zeros();
        assert!(!RestartScheme::gradient_mapping(0.0).unwrap().should_restart(&obs(5, 0.0, 0.0, &v)));
        assert!(!RestartScheme::non_monotone(-1.0).unwrap().should_restart(&obs(5, 0.0, 0.0, &v)));
    }

    #[test]
    fn non_monotone_uses_midpoint() {
        // z − y = e1; midpoint (z + x)/2 = (1, 0); y' − mid = (−1, 0.1): obtuse
        let v = [
            DenseVector::from(vec![0.0, 0.0]),
            DenseVector::from(vec![1.0, 0.0]),
            DenseVector::from(vec![0.0, 0.1]),
            DenseVector::from(vec![1.0, 0.0]),
        ];
        assert!(!RestartScheme::non_monotone(0.0).unwrap().should_restart(&obs(4, 0.0, 0.0, &v)));
        assert!(RestartScheme::non_monotone(-1.0).unwrap().should_restart(&obs(4, 0.0, 0.0, &v)));
    }

    #[test]
    fn fixed_examples() {
        let v = zeros();
        let fixed = RestartScheme::fixed(10).unwrap();
        assert!(fixed.should_restart(&obs(9, 0.0, 0.0, &v)));
        assert!(!fixed.should_restart(&obs(5, 0.0, 0.0, &v)));
        assert!(RestartScheme::fixed(1).unwrap().should_restart(&obs(0, 0.0, 0.0, &v)));
        assert!(RestartScheme::fixed(0).is_err());
    }

    #[test]
    fn never_and_guard() {
        let v = zeros();
        assert!(!RestartScheme::never().should_restart(&obs(100, 9.0, 1.0, &v)));
        let fs = RestartScheme::function_value(1.0).unwrap().with_min_period(5).unwrap();
        assert!(!fs.should_restart(&obs(3, 9.0, 1.0, &v)));
        assert!(fs.should_restart(&obs(4, 9.0, 1.0, &v)));
    }

    #[test]
    fn parameter_validation() {
        assert!(RestartScheme::function_value(0.0).is_err());
        assert!(RestartScheme::function_value(1.5).is_err());
        assert!(RestartScheme::gradient_mapping(0.1).is_err());
        assert!(RestartScheme::non_monotone(-1.1).is_err());
        assert!(RestartScheme::never().with_min_period(0).is_err());
    }

    proptest! {
        #[test]
        fn cosine_criterion_is_scale_invariant(
            y in prop::collection::vec(-3.0..3.0f64, 4),
            z in prop::collection::vec(-3.0..3.0f64, 4),
            yn in prop::collection::vec(-3.0..3.0f64, 4),
            c in 1e-3..1e3f64,
            tau in -1.0..=0.0f64,
        ) {
            let (y, z, yn) = (DenseVector::from(y), DenseVector::from(z), DenseVector::from(yn));
            let d = z.sub(&y);
            let e = yn.sub(&z);
            // rebuild the triple with both difference vectors scaled by c
            let z2 = y.add_scaled(c, &d);
            let yn2 = z2.add_scaled(c, &e);
            let scheme = RestartScheme::gradient_mapping(tau).unwrap();
            let x = DenseVector::zeros(4);
            let a = scheme.should_restart(&RestartObservation { k: 3, since_restart: 3, f_curr: 0.0, f_prev: 0.0, y: &y, z: &z, y_next: &yn, x: &x });
            let scaled = [d.scale(c), e.scale(c)];
            let exact = cosine_at_least(&scaled[0], &scaled[1], tau);
            let b = scheme.should_restart(&RestartObservation { k: 3, since_restart: 3, f_curr: 0.0, f_prev: 0.0, y: &y, z: &z2, y_next: &yn2, x: &x });
            let cos = d.dot(&e) / (d.norm() * e.norm());
            // decisions may only differ when the cosine sits on the threshold
            if (cos - tau).abs() > 1e-9 {
                prop_assert_eq!(a, exact);
                prop_assert_eq!(a, b);
            }
        }
    }
}
