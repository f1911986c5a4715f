//! Canonical energy functions, their Legendre conjugates, and the quadratic
//! geometric measure `xi = a |gamma|^2 + b`.
//!
//! A stored energy `W(gamma)` is written as `V(Lambda(gamma))` with `V` convex
//! on its domain and `dV` one-to-one, so the conjugate `V*` and its gradient
//! (the inverse of `dV`) are available in closed form for both built-in
//! models.

use std::fmt;

use nalgebra::Matrix3;

use crate::error::{CdtError, Result};

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpenInterval {
    pub const REALS: OpenInterval = OpenInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

impl fmt::Display for OpenInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Convex canonical function `V(xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CanonicalEnergy {
    /// `V(xi) = alpha xi^2 / 2`.
    Quadratic { alpha: f64 },
    /// `V(xi) = c1 xi + c2 xi log(xi)` on `xi > 0`.
    LogNeoHookean { c1: f64, c2: f64 },
}

impl CanonicalEnergy {
    pub fn quadratic(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(CdtError::InvalidParameter(format!(
                "quadratic stiffness alpha must be positive, got {alpha}"
            )));
        }
        Ok(CanonicalEnergy::Quadratic { alpha })
    }

    pub fn log_neo_hookean(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0 && c2.is_finite() && c2 > 0.0) {
            return Err(CdtError::InvalidParameter(format!(
                "material constants must be positive, got c1 = {c1}, c2 = {c2}"
            )));
        }
        Ok(CanonicalEnergy::LogNeoHookean { c1, c2 })
    }

    pub fn xi_domain(&self) -> OpenInterval {
        match self {
            CanonicalEnergy::Quadratic { .. } => OpenInterval::REALS,
            CanonicalEnergy::LogNeoHookean { .. } => OpenInterval {
                lo: 0.0,
                hi: f64::INFINITY,
            },
        }
    }

    /// Image of `dV` over the xi domain. Both models map onto the whole line.
    pub fn zeta_domain(&self) -> OpenInterval {
        OpenInterval::REALS
    }

    fn check_xi(&self, xi: f64) -> Result<()> {
        let dom = self.xi_domain();
        if dom.contains(xi) {
            Ok(())
        } else {
            Err(CdtError::Domain {
                what: "xi",
                value: xi,
                domain: dom.to_string(),
            })
        }
    }

    fn check_zeta(&self, zeta: f64) -> Result<()> {
        let dom = self.zeta_domain();
        if dom.contains(zeta) {
            Ok(())
        } else {
            Err(CdtError::Domain {
                what: "zeta",
                value: zeta,
                domain: dom.to_string(),
            })
        }
    }

    pub fn value(&self, xi: f64) -> Result<f64> {
        self.check_xi(xi)?;
        Ok(match *self {
            CanonicalEnergy::Quadratic { alpha } => 0.5 * alpha * xi * xi,
            CanonicalEnergy::LogNeoHookean { c1, c2 } => c1 * xi + c2 * xi * xi.ln(),
        })
    }

    /// `zeta = dV(xi)`.
    pub fn derivative(&self, xi: f64) -> Result<f64> {
        self.check_xi(xi)?;
        Ok(match *self {
            CanonicalEnergy::Quadratic { alpha } => alpha * xi,
            CanonicalEnergy::LogNeoHookean { c1, c2 } => c1 + c2 * (xi.ln() + 1.0),
        })
    }

    pub fn second_derivative(&self, xi: f64) -> Result<f64> {
        self.check_xi(xi)?;
        Ok(match *self {
            CanonicalEnergy::Quadratic { alpha } => alpha,
            CanonicalEnergy::LogNeoHookean { c2, .. } => c2 / xi,
        })
    }

    /// Complementary energy `V*(zeta)`.
    pub fn conjugate(&self, zeta: f64) -> Result<f64> {
        self.check_zeta(zeta)?;
        Ok(match *self {
            CanonicalEnergy::Quadratic { alpha } => zeta * zeta / (2.0 * alpha),
            CanonicalEnergy::LogNeoHookean { c1, c2 } => c2 * ((zeta - c1) / c2 - 1.0).exp(),
        })
    }

    /// `xi = dV*(zeta)`, the inverse of [`derivative`](Self::derivative).
    pub fn conjugate_derivative(&self, zeta: f64) -> Result<f64> {
        self.check_zeta(zeta)?;
        Ok(match *self {
            CanonicalEnergy::Quadratic { alpha } => zeta / alpha,
            CanonicalEnergy::LogNeoHookean { c1, c2 } => ((zeta - c1) / c2 - 1.0).exp(),
        })
    }

    pub fn conjugate_second_derivative(&self, zeta: f64) -> Result<f64> {
        self.check_zeta(zeta)?;
        Ok(match *self {
            CanonicalEnergy::Quadratic { alpha } => 1.0 / alpha,
            CanonicalEnergy::LogNeoHookean { c1, c2 } => ((zeta - c1) / c2 - 1.0).exp() / c2,
        })
    }

    /// `|V(xi) + V*(dV(xi)) - xi dV(xi)|`.
    pub fn duality_identity_residual(&self, xi: f64) -> Result<f64> {
        let zeta = self.derivative(xi)?;
        Ok((self.value(xi)? + self.conjugate(zeta)? - xi * zeta).abs())
    }
}

impl fmt::Display for CanonicalEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalEnergy::Quadratic { alpha } => write!(f, "quadratic(alpha={alpha})"),
            CanonicalEnergy::LogNeoHookean { c1, c2 } => {
                write!(f, "log-neo-Hookean(c1={c1}, c2={c2})")
            }
        }
    }
}

/// Geometric measure `Lambda(gamma) = a |gamma|^2 + b`.
///
/// `a = 1, b = 0` gives the anti-plane shear measure `I1 - 3`; `a = 1/2,
/// b = -1` gives the double-well measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMeasure {
    pub a: f64,
    pub b: f64,
}

impl QuadraticMeasure {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite()) {
            return Err(CdtError::InvalidParameter(format!(
                "measure needs a > 0 and finite b, got a = {a}, b = {b}"
            )));
        }
        Ok(QuadraticMeasure { a, b })
    }

    pub fn shear() -> Self {
        QuadraticMeasure { a: 1.0, b: 0.0 }
    }

    pub fn double_well() -> Self {
        QuadraticMeasure { a: 0.5, b: -1.0 }
    }

    pub fn eval(&self, gamma: &[f64]) -> f64 {
        self.a * norm_sq(gamma) + self.b
    }

    /// Frobenius form `a tr(F^T F) + b`.
    pub fn eval_matrix(&self, f: &Matrix3<f64>) -> f64 {
        self.a * f.norm_squared() + self.b
    }

    /// Directional derivative `2a <gamma, delta>`.
    pub fn linearized(&self, gamma: &[f64], delta: &[f64]) -> f64 {
        2.0 * self.a * dot(gamma, delta)
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn log11() -> CanonicalEnergy {
        CanonicalEnergy::log_neo_hookean(1.0, 1.0).unwrap()
    }

    fn quad1() -> CanonicalEnergy {
        CanonicalEnergy::quadratic(1.0).unwrap()
    }

    #[test]
    fn values() {
        assert_relative_eq!(log11().value(1.0).unwrap(), 1.0);
        assert_eq!(quad1().value(0.0).unwrap(), 0.0);
        assert_relative_eq!(log11().value(E).unwrap(), 2.0 * E, epsilon = 1e-15);
    }

    #[test]
    fn derivatives() {
        assert_relative_eq!(log11().derivative(1.0).unwrap(), 2.0);
        assert_relative_eq!(log11().second_derivative(1.0).unwrap(), 1.0);
        for xi in [-2.0, 0.0, 0.7, 5.0] {
            assert_eq!(quad1().derivative(xi).unwrap(), xi);
        }
    }

    #[test]
    fn conjugates() {
        assert_relative_eq!(log11().conjugate(2.0).unwrap(), 1.0);
        assert_relative_eq!(log11().conjugate_derivative(2.0).unwrap(), 1.0);
        // xi zeta - V at the pair (1, 2)
        assert_relative_eq!(1.0 * 2.0 - log11().value(1.0).unwrap(), 1.0);
        assert_eq!(quad1().conjugate(0.0).unwrap(), 0.0);
        assert_relative_eq!(log11().conjugate_derivative(1.0).unwrap(), (-1.0f64).exp());
    }

    #[test]
    fn identity_residual_examples() {
        assert!(log11().duality_identity_residual(1.0).unwrap() < 1e-15);
        assert!(quad1().duality_identity_residual(3.0).unwrap() < 1e-15);
    }

    #[test]
    fn log_model_rejects_nonpositive_xi() {
        for xi in [0.0, -1.0] {
            assert!(matches!(log11().value(xi), Err(CdtError::Domain { .. })));
            assert!(log11().derivative(xi).is_err());
            assert!(log11().second_derivative(xi).is_err());
        }
        assert!(log11().value(f64::NAN).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(CanonicalEnergy::log_neo_hookean(0.0, 1.0).is_err());
        assert!(CanonicalEnergy::log_neo_hookean(1.0, -1.0).is_err());
        assert!(CanonicalEnergy::quadratic(0.0).is_err());
        assert!(QuadraticMeasure::new(0.0, 1.0).is_err());
    }

    #[test]
    fn measure_examples() {
        assert_eq!(QuadraticMeasure::shear().eval(&[3.0, 4.0]), 25.0);
        assert_eq!(QuadraticMeasure::double_well().eval(&[0.0, 0.0]), -1.0);
        let s = 2.0f64.sqrt();
        assert_relative_eq!(QuadraticMeasure::double_well().eval(&[s]), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_function_sweep() {
        // 10^4 samples on a compact sub-interval of each domain.
        let n = 10_000;
        for (energy, lo, hi) in [(log11(), 1e-3, 50.0), (quad1(), -50.0, 50.0)] {
            for k in 0..n {
                let xi = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                let back = energy.conjugate_derivative(energy.derivative(xi).unwrap()).unwrap();
                assert!((back - xi).abs() <= 1e-9 * xi.abs().max(1.0), "{energy} xi={xi}");
                assert!(energy.second_derivative(xi).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn finite_difference_order() {
        for (energy, xi) in [(log11(), 0.8), (quad1(), 1.3)] {
            let err = |h: f64| {
                let fd = (energy.value(xi + h).unwrap() - energy.value(xi - h).unwrap()) / (2.0 * h);
                (energy.derivative(xi).unwrap() - fd).abs()
            };
            let (e1, e2) = (err(1e-3), err(1e-4));
            if matches!(energy, CanonicalEnergy::Quadratic { .. }) {
                // central differences are exact for a quadratic up to roundoff
                assert!(e1 <= 1e-10 && e2 <= 1e-10, "{energy}: {e1:e} {e2:e}");
            } else {
                let order = (e1 / e2).log10();
                assert!(order >= 1.9, "{energy}: observed order {order}");
            }
        }
    }

    #[test]
    fn matrix_objectivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = QuadraticMeasure::new(0.7, -3.0).unwrap();
        for _ in 0..100 {
            let f = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let r = crate::energies::random_rotation(&mut rng);
            assert!((m.eval_matrix(&(r * f)) - m.eval_matrix(&f)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn legendre_identity_holds(xi in 1e-6f64..1e3, c1 in 0.1f64..5.0, c2 in 0.1f64..5.0) {
            let e = CanonicalEnergy::log_neo_hookean(c1, c2).unwrap();
            let scale = (xi * e.derivative(xi).unwrap()).abs().max(1.0);
            prop_assert!(e.duality_identity_residual(xi).unwrap() <= 1e-10 * scale);
        }

        #[test]
        fn directional_split(g in proptest::collection::vec(-5.0f64..5.0, 3),
                             d in proptest::collection::vec(-5.0f64..5.0, 3),
                             a in 0.1f64..3.0, b in -3.0f64..3.0) {
            let m = QuadraticMeasure::new(a, b).unwrap();
            let sum: Vec<f64> = g.iter().zip(&d).map(|(x, y)| x + y).collect();
            let split = m.eval(&g) + m.linearized(&g, &d) + a * norm_sq(&d);
            prop_assert!((m.eval(&sum) - split).abs() <= 1e-12 * (1.0 + m.eval(&sum).abs()));
        }
    }
}
