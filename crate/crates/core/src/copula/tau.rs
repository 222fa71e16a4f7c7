//! Kendall's tau of the bivariate margins, closed form and by quadrature.

use super::generator::{Generator, GumbelGenerator};
use super::model::ShockIntensities;
use crate::error::{domain, Result};
use crate::quadrature::{integrate_with_context, QuadConfig};
use crate::roots::solve_increasing;

fn check_alpha(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return domain(format!("alpha must lie in [0, 1], got {a}"));
    }
    Ok(())
}

/// Kendall's tau of the Marshall-Olkin copula, `a b / (a + b - a b)`.
/// Defined as 0 at `(0, 0)`.
pub fn tau_mo(alpha_j: f64, alpha_k: f64) -> Result<f64> {
    check_alpha(alpha_j)?;
    check_alpha(alpha_k)?;
    let den = alpha_j + alpha_k - alpha_j * alpha_k;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha_j * alpha_k / den)
}

/// Pairwise tau of two default times: `(theta-1)/theta + tau_mo/theta`.
pub fn tau_pair(alpha_j: f64, alpha_k: f64, gen: &GumbelGenerator) -> Result<f64> {
    let theta = gen.theta();
    Ok((theta - 1.0) / theta + tau_mo(alpha_j, alpha_k)? / theta)
}

/// Tau between the systemic shock and a default time: `(theta-1)/theta + alpha/theta`.
pub fn tau_systemic(alpha: f64, gen: &GumbelGenerator) -> Result<f64> {
    check_alpha(alpha)?;
    let theta = gen.theta();
    Ok((theta - 1.0) / theta + alpha / theta)
}

/// `alpha_k = lambda0 / (lambda0 + lambda_k)` for every entity.
pub fn alphas_from_intensities(shocks: &ShockIntensities) -> Vec<f64> {
    let l0 = shocks.lambda0();
    shocks.lambdas().iter().map(|l| l0 / (l0 + l)).collect()
}

/// A continuous, non-increasing survival function with `S(0) = 1`.
pub trait SurvivalFunction: Sync {
    fn survival(&self, t: f64) -> f64;

    /// `-ln S(t)`; override when it can be formed without cancellation.
    fn cumulative_hazard(&self, t: f64) -> f64 {
        -self.survival(t).ln()
    }
}

impl<F: Fn(f64) -> f64 + Sync> SurvivalFunction for F {
    fn survival(&self, t: f64) -> f64 {
        self(t)
    }
}

/// `S(t) = psi_theta(lambda t^power)` with the Gumbel generator, the survival
/// of a shock time in the exchangeable construction with `K(t) = t^power`.
#[derive(Debug, Clone, Copy)]
pub struct GumbelPowerSurvival {
    gen: GumbelGenerator,
    lambda: f64,
    power: f64,
}

impl GumbelPowerSurvival {
    pub fn new(gen: GumbelGenerator, lambda: f64, power: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return domain(format!("shock rate must be finite and >= 0, got {lambda}"));
        }
        if !(power.is_finite() && power > 0.0) {
            return domain(format!("power must be > 0, got {power}"));
        }
        Ok(Self { gen, lambda, power })
    }
}

impl SurvivalFunction for GumbelPowerSurvival {
    fn survival(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }

    fn cumulative_hazard(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        (self.lambda * t.powf(self.power)).powf(1.0 / self.gen.theta())
    }
}

/// Pairwise tau of `min(X0, Xj)` and `min(X0, Xk)` when `(X0, Xj, Xk)` are
/// coupled by the Archimedean copula of `gen` with the given marginal
/// survivals, via `tau^psi + 4 int_0^inf psi'(x)^2 T(x) dx`.
///
/// The integral is taken over `s = psi(x)` on `(0, 1)`.
pub fn kendall_tau_general<G: Generator>(gen: &G, survs: [&dyn SurvivalFunction; 3]) -> Result<f64> {
    kendall_tau_general_with(gen, survs, &QuadConfig::with_abs_tol(1e-8))
}

pub fn kendall_tau_general_with<G: Generator>(
    gen: &G,
    survs: [&dyn SurvivalFunction; 3],
    cfg: &QuadConfig,
) -> Result<f64> {
    let [s0, sj, sk] = survs;
    let level = |t: f64| {
        gen.inverse_neg_log(s0.cumulative_hazard(t))
            + gen.inverse_neg_log(sj.cumulative_hazard(t))
            + gen.inverse_neg_log(sk.cumulative_hazard(t))
    };
    if ![1.0, 1e10, 1e100, 1e300].iter().any(|&t| level(t) > 0.0) {
        return domain("all three survival functions are identically one");
    }
    let t_of_x = |x: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = solve_increasing(&level, x, 1.0, 1e-13).unwrap_or(f64::NAN);
        gen.inverse_neg_log(s0.cumulative_hazard(t))
    };
    let integrand = |s: f64| {
        let x = gen.inverse(s);
        -gen.derivative_at_inverse(s) * t_of_x(x)
    };
    let r = integrate_with_context(integrand, 0.0, 1.0, cfg, "general Kendall tau integral")?;
    Ok(gen.kendall_tau() + 4.0 * r.value)
}
