//! Separable convex regularizers `g`, their proximal maps, the gradient mapping
//! `G_η(x, u) = (x − prox_{ηg}(x − ηu)) / η`, and the exact distance from the
//! origin to `∇f(x) + ∂g(x)`.

use crate::numkit::DenseVector;
use crate::{Error, Result};

/// Convex separable regularizer. All weights are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularizer {
    #[default]
    Zero,
    /// `μ‖x‖₁`
    L1(f64),
    /// `(μ/2)‖x‖²`
    SquaredL2(f64),
    /// `μ1‖x‖₁ + (μ2/2)‖x‖²`
    ElasticNet(f64, f64),
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl Regularizer {
    pub fn l1(mu: f64) -> Result<Self> {
        check_weight(mu)?;
        Ok(Regularizer::L1(mu))
    }

    pub fn squared_l2(mu: f64) -> Result<Self> {
        check_weight(mu)?;
        Ok(Regularizer::SquaredL2(mu))
    }

    pub fn elastic_net(mu1: f64, mu2: f64) -> Result<Self> {
        check_weight(mu1)?;
        check_weight(mu2)?;
        Ok(Regularizer::ElasticNet(mu1, mu2))
    }

    /// `(ℓ1 weight, squared-ℓ2 weight)` of the equivalent elastic net.
    fn weights(self) -> (f64, f64) {
        match self {
            Regularizer::Zero => (0.0, 0.0),
            Regularizer::L1(mu) => (mu, 0.0),
            Regularizer::SquaredL2(mu) => (0.0, mu),
            Regularizer::ElasticNet(mu1, mu2) => (mu1, mu2),
        }
    }

    pub fn is_zero(self) -> bool {
        self.weights() == (0.0, 0.0)
    }

    pub fn value(self, x: &DenseVector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(mu) => mu * x.norm_l1(),
            Regularizer::SquaredL2(mu) => 0.5 * mu * x.norm_sq(),
            Regularizer::ElasticNet(mu1, mu2) => mu1 * x.norm_l1() + 0.5 * mu2 * x.norm_sq(),
        }
    }

    /// Scalar prox of the per-coordinate term.
    #[inline]
    pub fn prox_scalar(self, eta: f64, v: f64) -> f64 {
        let (mu1, mu2) = self.weights();
        soft_threshold(v, eta * mu1) / (1.0 + eta * mu2)
    }

    /// `argmin_z g(z) + ‖z − x‖² / (2η)`.
    pub fn prox(self, eta: f64, x: &DenseVector) -> Result<DenseVector> {
        check_eta(eta)?;
        if self.is_zero() {
            return Ok(x.clone());
        }
        Ok(x.iter().map(|&v| self.prox_scalar(eta, v)).collect())
    }

    /// `G_η(x, u) = (x − prox_{ηg}(x − ηu)) / η`.
    pub fn gradient_mapping(self, eta: f64, x: &DenseVector, u: &DenseVector) -> Result<DenseVector> {
        Ok(self.gradient_mapping_with_prox(eta, x, u)?.0)
    }

    /// Gradient mapping together with the prox point `prox_{ηg}(x − ηu)`.
    pub fn gradient_mapping_with_prox(
        self,
        eta: f64,
        x: &DenseVector,
        u: &DenseVector,
    ) -> Result<(DenseVector, DenseVector)> {
        check_eta(eta)?;
        if x.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: u.len(),
            });
        }
        if self.is_zero() {
            // prox is the identity, so G = u exactly
            return Ok((u.clone(), x.add_scaled(-eta, u)));
        }
        let p: DenseVector = x
            .iter()
            .zip(u.iter())
            .map(|(&xi, &ui)| self.prox_scalar(eta, xi - eta * ui))
            .collect();
        let g = x.iter().zip(p.iter()).map(|(xi, pi)| (xi - pi) / eta).collect();
        Ok((g, p))
    }

    /// Exact `dist(0, ∇f(x) + ∂g(x))` for the separable `g`.
    pub fn subdiff_distance(self, grad_f: &DenseVector, x: &DenseVector) -> f64 {
        let (mu1, mu2) = self.weights();
        grad_f
            .iter()
            .zip(x.iter())
            .map(|(&gi, &xi)| {
                let smooth = gi + mu2 * xi;
                let r = if mu1 == 0.0 {
                    smooth.abs()
                } else if xi == 0.0 {
                    (smooth.abs() - mu1).max(0.0)
                } else {
                    (smooth + mu1 * xi.signum()).abs()
                };
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn check_weight(mu: f64) -> Result<()> {
    if mu >= 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "regularizer weight must be finite and >= 0, got {mu}"
        )))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("prox stepsize must be > 0, got {eta}")))
    }
}

/// Golden-section minimiser of a unimodal scalar function on `[lo, hi]`.
/// Independent of the closed-form prox; used as a test oracle.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from(x)
    }

    /// Per-coordinate oracle: minimise `g_i(z) + (z − x)² / (2η)` by golden
    /// section with the coordinate terms written out by hand.
    fn oracle_prox(reg: Regularizer, eta: f64, x: f64) -> f64 {
        let g = |z: f64| match reg {
            Regularizer::Zero => 0.0,
            Regularizer::L1(mu) => mu * z.abs(),
            Regularizer::SquaredL2(mu) => 0.5 * mu * z * z,
            Regularizer::ElasticNet(a, b) => a * z.abs() + 0.5 * b * z * z,
        };
        let obj = |z: f64| g(z) + (z - x) * (z - x) / (2.0 * eta);
        let r = x.abs() + 1.0;
        golden_section_min(obj, -r, r, 1e-10)
    }

    #[test]
    fn g_value_examples() {
        assert_eq!(Regularizer::Zero.value(&v(&[3.0, -4.0])), 0.0);
        assert_eq!(Regularizer::L1(2.0).value(&v(&[1.0, -3.0])), 8.0);
        assert_eq!(Regularizer::ElasticNet(1.0, 2.0).value(&v(&[1.0, -1.0])), 4.0);
        assert_eq!(Regularizer::SquaredL2(1.0).value(&v(&[2.0])), 2.0);
    }

    #[test]
    fn prox_examples() {
        let x = v(&[2.0, -0.3]);
        assert_eq!(Regularizer::Zero.prox(1.0, &x).unwrap(), x);

        let p = Regularizer::L1(1.0).prox(0.5, &v(&[2.0, -0.3, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.5, 0.0, 0.0]);
        for (i, xi) in [2.0, -0.3, 0.0].into_iter().enumerate() {
            assert!((oracle_prox(Regularizer::L1(1.0), 0.5, xi) - p[i]).abs() < 1e-6);
        }

        let p = Regularizer::SquaredL2(1.0).prox(1.0, &v(&[2.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.0]);
        assert!((oracle_prox(Regularizer::SquaredL2(1.0), 1.0, 2.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn prox_rejects_nonpositive_eta() {
        let x = v(&[1.0]);
        assert!(Regularizer::L1(1.0).prox(0.0, &x).is_err());
        assert!(Regularizer::L1(1.0).prox(-1.0, &x).is_err());
        assert!(Regularizer::Zero.gradient_mapping(0.0, &x, &x).is_err());
        assert!(Regularizer::l1(-0.1).is_err());
    }

    #[test]
    fn gradient_mapping_examples() {
        let x = v(&[0.3, -2.0, 7.0]);
        let u = v(&[1.5, 0.25, -3.0]);
        for eta in [0.01, 1.0, 13.0] {
            assert_eq!(Regularizer::Zero.gradient_mapping(eta, &x, &u).unwrap(), u);
        }

        let g = Regularizer::L1(1.0)
            .gradient_mapping(0.5, &v(&[2.0]), &v(&[1.0]))
            .unwrap();
        assert_eq!(g.as_slice(), &[2.0]);

        // x = 0 with |u| <= μ is a fixed point of the L1 prox step
        let g = Regularizer::L1(1.0)
            .gradient_mapping(0.7, &v(&[0.0, 0.0]), &v(&[0.5, -1.0]))
            .unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn subdiff_distance_examples() {
        let l1 = Regularizer::L1(1.0);
        assert_eq!(l1.subdiff_distance(&v(&[0.5]), &v(&[0.0])), 0.0);
        assert_eq!(l1.subdiff_distance(&v(&[-1.0]), &v(&[1.0])), 0.0);
        assert_eq!(l1.subdiff_distance(&v(&[2.0]), &v(&[0.0])), 1.0);
        assert_eq!(Regularizer::Zero.subdiff_distance(&v(&[3.0, 4.0]), &v(&[1.0, 1.0])), 5.0);
        assert_eq!(
            Regularizer::SquaredL2(2.0).subdiff_distance(&v(&[1.0]), &v(&[1.0])),
            3.0
        );
        // elastic net at zero: max(|∇f| − μ1, 0); off zero: |∇f + μ2 x + μ1 sign x|
        let en = Regularizer::ElasticNet(1.0, 2.0);
        assert_eq!(en.subdiff_distance(&v(&[3.0]), &v(&[0.0])), 2.0);
        assert_eq!(en.subdiff_distance(&v(&[-5.0]), &v(&[1.0])), 2.0);
    }

    fn any_reg() -> impl Strategy<Value = Regularizer> {
        prop_oneof![
            Just(Regularizer::Zero),
            (0.0..3.0f64).prop_map(Regularizer::L1),
            (0.0..3.0f64).prop_map(Regularizer::SquaredL2),
            (0.0..3.0f64, 0.0..3.0f64).prop_map(|(a, b)| Regularizer::ElasticNet(a, b)),
        ]
    }

    fn vec_of(n: usize) -> impl Strategy<Value = DenseVector> {
        prop::collection::vec(-5.0..5.0f64, n).prop_map(DenseVector::from)
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(reg in any_reg(), eta in 0.01..10.0f64, x in vec_of(6), y in vec_of(6)) {
            let px = reg.prox(eta, &x).unwrap();
            let py = reg.prox(eta, &y).unwrap();
            prop_assert!(px.distance(&py) <= x.distance(&y) + 1e-12);
        }

        #[test]
        fn prox_matches_oracle(reg in any_reg(), eta in 0.01..10.0f64, x in -5.0..5.0f64) {
            let closed = reg.prox_scalar(eta, x);
            prop_assert!((closed - oracle_prox(reg, eta, x)).abs() <= 1e-6);
        }

        #[test]
        fn subdiff_distance_zero_at_prox_fixed_point(reg in any_reg(), eta in 0.1..2.0f64, x in vec_of(5), u in vec_of(5)) {
            // p = prox(x − ηu) satisfies (x − p)/η − u ∈ ∂g(p), so
            // dist(0, w + ∂g(p)) = 0 for w = u − (x − p)/η.
            let (gm, p) = reg.gradient_mapping_with_prox(eta, &x, &u).unwrap();
            let w = u.sub(&gm);
            prop_assert!(reg.subdiff_distance(&w, &p) <= 1e-9);
        }
    }
}
