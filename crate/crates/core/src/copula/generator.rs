//! Archimedean generators.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::{integrate, QuadConfig};

/// A strict Archimedean generator `psi: [0, inf) -> (0, 1]`.
///
/// Methods are unchecked; callers guarantee `x >= 0` and `u` in `(0, 1]`.
pub trait Generator: Sync {
    fn eval(&self, x: f64) -> f64;
    fn inverse(&self, u: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;

    /// `psi^{-1}(exp(-h))`, evaluated without forming `exp(-h)` where possible.
    fn inverse_neg_log(&self, h: f64) -> f64 {
        self.inverse((-h).exp())
    }

    /// `psi'(psi^{-1}(u))`, which generators may evaluate more stably.
    fn derivative_at_inverse(&self, u: f64) -> f64 {
        self.derivative(self.inverse(u))
    }

    /// Kendall's tau of the bivariate Archimedean copula built from `psi`.
    ///
    /// Default: `1 + 4 * int_0^1 psi^{-1}(s) psi'(psi^{-1}(s)) ds`.
    fn kendall_tau(&self) -> f64 {
        let cfg = QuadConfig::with_abs_tol(1e-11);
        let r = integrate(|s| self.inverse(s) * self.derivative_at_inverse(s), 0.0, 1.0, &cfg);
        1.0 + 4.0 * r.map(|r| r.value).unwrap_or(f64::NAN)
    }
}

/// Gumbel generator `psi(x) = exp(-x^{1/theta})`, `theta >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelGenerator {
    theta: f64,
}

impl GumbelGenerator {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 1.0) {
            return domain(format!("Gumbel theta must be finite and >= 1, got {theta}"));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Checked `psi(x)`.
    pub fn psi(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return domain(format!("generator argument must be >= 0, got {x}"));
        }
        Ok(self.eval(x))
    }

    /// Checked `psi^{-1}(u)`.
    pub fn psi_inv(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return domain(format!("generator inverse needs u in (0, 1], got {u}"));
        }
        Ok(self.inverse(u))
    }
}

impl Generator for GumbelGenerator {
    fn eval(&self, x: f64) -> f64 {
        (-x.powf(1.0 / self.theta)).exp()
    }

    fn inverse(&self, u: f64) -> f64 {
        (-u.ln()).powf(self.theta)
    }

    fn inverse_neg_log(&self, h: f64) -> f64 {
        h.powf(self.theta)
    }

    fn derivative(&self, x: f64) -> f64 {
        let a = 1.0 / self.theta;
        -a * x.powf(a - 1.0) * self.eval(x)
    }

    fn derivative_at_inverse(&self, u: f64) -> f64 {
        // psi'(psi^{-1}(u)) = -(u / theta) (-ln u)^{1 - theta}
        let l = -u.ln();
        if l == 0.0 {
            return if self.theta == 1.0 { -u } else { f64::NEG_INFINITY };
        }
        -(u / self.theta) * l.powf(1.0 - self.theta)
    }

    fn kendall_tau(&self) -> f64 {
        (self.theta - 1.0) / self.theta
    }
}
