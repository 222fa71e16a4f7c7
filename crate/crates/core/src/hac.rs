//! Trivariate nested Gumbel structures `C_phi(C_theta(., .), .)`.
//!
//! Three shocks `X_i, X_j, X_k` are coupled by a Gumbel copula with parameter
//! `theta` inside a Gumbel copula with parameter `phi <= theta`. Shock
//! survivals follow the exponential-marginal choice `K(t) = t^phi`,
//! `K_hat(t) = t^theta`, `lambda_hat = lambda^{theta/phi}` for shocks attached
//! to the inner copula.
//!
//! Two placements of the systemic shock are covered:
//!
//! * [`SystemicPosition::Inner`]: `X_i` is systemic and sits with `X_j` in the
//!   inner copula; observed times are `(min(X_i, X_j), min(X_i, X_k))`.
//! * [`SystemicPosition::Outer`]: `X_k` is systemic and attached to the outer
//!   copula; observed times are `(min(X_i, X_k), min(X_j, X_k))`.
//!
//! In both cases the copula of the observed pair has the form
//! `exp(-L(x, y)^{1/phi})` with `x = (-ln u)^phi`, `y = (-ln v)^phi` and `L`
//! homogeneous of degree one, which yields the Kendall function in closed
//! form up to one-dimensional integrals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::copula::{Generator, GumbelGenerator};
use crate::error::{argument, domain, Error, Result};
use crate::quadrature::{integrate_with_context, QuadConfig};
use crate::roots::solve_increasing;

/// Largest admissible disagreement between the two tau routes.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-4;

const T_CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemicPosition {
    Inner,
    Outer,
}

impl FromStr for SystemicPosition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inner" => Ok(Self::Inner),
            "outer" => Ok(Self::Outer),
            _ => argument(format!("unknown systemic position '{s}' (expected inner or outer)")),
        }
    }
}

impl fmt::Display for SystemicPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Inner => "inner",
            Self::Outer => "outer",
        })
    }
}

/// Observed default time selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observed {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HacSpec {
    theta: f64,
    phi: f64,
    lambdas: [f64; 3],
    position: SystemicPosition,
}

impl HacSpec {
    /// `lambdas = [lambda_i, lambda_j, lambda_k]`.
    pub fn new(theta: f64, phi: f64, lambdas: [f64; 3], position: SystemicPosition) -> Result<Self> {
        GumbelGenerator::new(phi)?;
        GumbelGenerator::new(theta)?;
        if theta < phi {
            return Err(Error::Nesting { theta, phi });
        }
        if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return domain(format!("shock rates must be finite and >= 0, got {l}"));
        }
        if lambdas.iter().filter(|l| **l > 0.0).count() < 2 {
            return domain("at least two shock rates must be positive");
        }
        Ok(Self {
            theta,
            phi,
            lambdas,
            position,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn lambdas(&self) -> [f64; 3] {
        self.lambdas
    }

    pub fn position(&self) -> SystemicPosition {
        self.position
    }

    fn r(&self) -> f64 {
        self.theta / self.phi
    }

    /// Exponential rate of the first or second observed default time.
    pub fn observed_rate(&self, which: Observed) -> f64 {
        let [li, lj, lk] = self.lambdas;
        let r = self.r();
        match (self.position, which) {
            (SystemicPosition::Inner, Observed::First) => (li.powf(r) + lj).powf(1.0 / self.theta),
            (SystemicPosition::Inner, Observed::Second) => (li + lk).powf(1.0 / self.phi),
            (SystemicPosition::Outer, Observed::First) => (li + lk).powf(1.0 / self.phi),
            (SystemicPosition::Outer, Observed::Second) => (lj + lk).powf(1.0 / self.phi),
        }
    }

    /// Sensitivities of the two observed times to the systemic shock. They
    /// parameterise the exchangeable copula the structure reduces to when
    /// `theta == phi`.
    pub fn induced_alphas(&self) -> (f64, f64) {
        let [li, lj, lk] = self.lambdas;
        match self.position {
            SystemicPosition::Inner => (li / (li + lj), li / (li + lk)),
            SystemicPosition::Outer => (lk / (li + lk), lk / (lj + lk)),
        }
    }

    /// Survival of `X_i` through the inner copula, `psi_theta(lambda_hat_i t^theta)`.
    pub fn shock_i_survival_inner(&self, t: f64) -> f64 {
        let g = GumbelGenerator::new(self.theta).expect("validated");
        g.eval(self.lambdas[0].powf(self.r()) * t.powf(self.theta))
    }

    /// Survival of `X_i` through the outer copula, `psi_phi(lambda_i t^phi)`.
    pub fn shock_i_survival_outer(&self, t: f64) -> f64 {
        let g = GumbelGenerator::new(self.phi).expect("validated");
        g.eval(self.lambdas[0] * t.powf(self.phi))
    }

    /// `L(x, y)` of the observed pair; degree-one homogeneous.
    fn stable_tail(&self, x: f64, y: f64) -> f64 {
        let m = x.max(y);
        if m == 0.0 {
            return 0.0;
        }
        if m.is_infinite() {
            return f64::INFINITY;
        }
        let (x, y) = (x / m, y / m);
        let r = self.r();
        let [li, lj, lk] = self.lambdas;
        let l = match self.position {
            SystemicPosition::Outer => {
                let (mik, mjk) = (li + lk, lj + lk);
                let (a, p, b, q) = (li / mik, lk / mik, lj / mjk, lk / mjk);
                ((a * x).powf(r) + (b * y).powf(r)).powf(1.0 / r) + (p * x).max(q * y)
            }
            SystemicPosition::Inner => {
                let li_hat = li.powf(r);
                let (mij, mik) = (li_hat + lj, li + lk);
                let (a_hat, b, e, c) = (li_hat / mij, lj / mij, li / mik, lk / mik);
                let xr = x.powf(r);
                ((a_hat * xr).max((e * y).powf(r)) + b * xr).powf(1.0 / r) + c * y
            }
        };
        m * l
    }
}

/// Survival function of an observed default time: `exp(-rate t)`.
pub fn hac_marginal_survival(t: f64, spec: &HacSpec, which: Observed) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    Ok((-spec.observed_rate(which) * t).exp())
}

/// Survival copula of the observed pair.
pub fn hac_bivariate_copula(u: f64, v: f64, spec: &HacSpec) -> Result<f64> {
    for w in [u, v] {
        if !(w > 0.0 && w <= 1.0) {
            return domain(format!("copula arguments must lie in (0, 1], got {w}"));
        }
    }
    let x = (-u.ln()).powf(spec.phi);
    let y = (-v.ln()).powf(spec.phi);
    Ok((-spec.stable_tail(x, y).powf(1.0 / spec.phi)).exp())
}

/// Level of the outer generator argument reached on the singular boundary of
/// the observed copula, as a function of the common time `z` on the `K`
/// scale: `G(z) = psi_phi^{-1}(psi_theta((h1 + h2) z^{theta/phi})) + c z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFunction {
    position: SystemicPosition,
    inner: GumbelGenerator,
    outer: GumbelGenerator,
    h1: f64,
    h2: f64,
    c: f64,
}

impl GFunction {
    pub fn new(position: SystemicPosition, theta: f64, phi: f64, lambdas: [f64; 3]) -> Result<Self> {
        let inner = GumbelGenerator::new(theta)?;
        let outer = GumbelGenerator::new(phi)?;
        if theta < phi {
            return Err(Error::Nesting { theta, phi });
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || lambdas.iter().all(|l| *l == 0.0) {
            return domain(format!("G needs finite non-negative rates, not all zero: {lambdas:?}"));
        }
        let r = theta / phi;
        let [li, lj, lk] = lambdas;
        let (h1, h2) = match position {
            SystemicPosition::Inner => (li.powf(r), lj),
            SystemicPosition::Outer => (li.powf(r), lj.powf(r)),
        };
        Ok(Self {
            position,
            inner,
            outer,
            h1,
            h2,
            c: lk,
        })
    }

    pub fn from_spec(spec: &HacSpec) -> Self {
        Self::new(spec.position, spec.theta, spec.phi, spec.lambdas).expect("spec validated")
    }

    pub fn position(&self) -> SystemicPosition {
        self.position
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let r = self.inner.theta() / self.outer.theta();
        let s = (self.h1 + self.h2) * z.powf(r);
        let linked = if s == 0.0 {
            0.0
        } else {
            // psi_phi^{-1}(psi_theta(s)) in log form, exact for large s
            self.outer.inverse_neg_log(s.powf(1.0 / self.inner.theta()))
        };
        linked + self.c * z
    }
}

/// Unique `z >= 0` with `G(z) = y`.
pub fn g_inverse(y: f64, g: &GFunction) -> Result<f64> {
    if !(y >= 0.0 && y.is_finite()) {
        return domain(format!("g_inverse needs a finite y >= 0, got {y}"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    // G(1) is the slope of G on the K scale, a good first bracket
    let hint = y / g.eval(1.0);
    solve_increasing(|z| g.eval(z), y, hint, 1e-13)
}

/// `coef^r * int_lo^w y^{r-1} (w - c y)^{1-r} dy` via `zeta = y / (w - c y)`,
/// which turns the integrand into `w zeta^{r-1} / (1 + c zeta)^2`.
fn boundary_integral(coef: f64, c: f64, r: f64, lo: f64, w: f64, cfg: &QuadConfig, t: f64) -> Result<f64> {
    if coef == 0.0 || lo >= w {
        return Ok(0.0);
    }
    let z_lo = lo / (w - c * lo);
    let z_hi = 1.0 / (1.0 - c);
    let f = |z: f64| z.powf(r - 1.0) / (1.0 + c * z).powi(2);
    let local = QuadConfig {
        abs_tol: cfg.abs_tol * 1e-2,
        rel_tol: cfg.rel_tol.min(1e-11),
        max_intervals: cfg.max_intervals,
    };
    let res = integrate_with_context(f, z_lo, z_hi, &local, &format!("boundary integral at t = {t}"))?;
    Ok(coef.powf(r) * w * res.value)
}

/// `B(w)` with `K(t) = t - psi_phi'(w) B(w)`, `w = (-ln t)^phi`.
fn kendall_b(spec: &HacSpec, g: &GFunction, w: f64, cfg: &QuadConfig, t: f64) -> Result<f64> {
    let z = g_inverse(w, g)?;
    let r = spec.r();
    let [li, lj, lk] = spec.lambdas;
    match spec.position {
        SystemicPosition::Inner => {
            let li_hat = li.powf(r);
            let (mij, mik) = (li_hat + lj, li + lk);
            let (e, c) = (li / mik, lk / mik);
            let x_t = (mij.powf(1.0 / r) * z).min(w);
            let y_t = (mik * z).min(w);
            Ok((w - x_t) + c * (w - y_t) + boundary_integral(e, c, r, y_t, w, cfg, t)?)
        }
        SystemicPosition::Outer => {
            let (mik, mjk) = (li + lk, lj + lk);
            let (a, p, b, q) = (li / mik, lk / mik, lj / mjk, lk / mjk);
            let x_t = (mik * z).min(w);
            let y_t = (mjk * z).min(w);
            Ok(p * (w - x_t)
                + q * (w - y_t)
                + boundary_integral(a, p, r, x_t, w, cfg, t)?
                + boundary_integral(b, q, r, y_t, w, cfg, t)?)
        }
    }
}

/// Kendall distribution function `P(C(U, V) <= t)` of the observed pair.
pub fn kendall_function(t: f64, spec: &HacSpec) -> Result<f64> {
    kendall_function_with(t, spec, &QuadConfig::with_abs_tol(1e-10))
}

pub fn kendall_function_with(t: f64, spec: &HacSpec, cfg: &QuadConfig) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return domain(format!("Kendall function needs t in (0, 1), got {t}"));
    }
    let g = GFunction::from_spec(spec);
    let s = -t.ln();
    let w = s.powf(spec.phi);
    let b = kendall_b(spec, &g, w, cfg, t)?;
    Ok(t + t / spec.phi * s.powf(1.0 - spec.phi) * b)
}

/// Kendall's tau computed along both routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HacTau {
    /// `1 - 4 int_0^1 (-psi_phi'(w)) B(w) dt` as an iterated integral.
    pub tau: f64,
    /// `3 - 4 int_0^1 K(t) dt`.
    pub tau_kendall_integral: f64,
    pub difference: f64,
}

/// Both tau routes at the given outer absolute tolerance, without the
/// consistency check.
pub fn hac_kendall_tau_report(spec: &HacSpec, abs_tol: f64) -> Result<HacTau> {
    let cfg = QuadConfig {
        abs_tol,
        rel_tol: abs_tol * 1e-2,
        max_intervals: 4000,
    };
    let g = GFunction::from_spec(spec);
    let phi = spec.phi;

    // route (a): t = exp(-s), dt = t ds
    let s_lo = T_CLIP;
    let s_hi = -T_CLIP.ln();
    let outer = |s: f64| -> f64 {
        let t = (-s).exp();
        let w = s.powf(phi);
        match kendall_b(spec, &g, w, &cfg, t) {
            Ok(b) => t * t / phi * s.powf(1.0 - phi) * b,
            Err(_) => f64::NAN,
        }
    };
    let a = integrate_with_context(outer, s_lo, s_hi, &cfg, "theorem tau integral")?;
    let tau = 1.0 - 4.0 * a.value;

    // route (b): Kendall function on the clipped t interval; K(t) ~ 1 on the
    // top sliver and ~ 0 on the bottom one
    let kf = |t: f64| kendall_function_with(t, spec, &cfg).unwrap_or(f64::NAN);
    let k = integrate_with_context(kf, T_CLIP, 1.0 - T_CLIP, &cfg, "Kendall function integral")?;
    let tau_b = 3.0 - 4.0 * (k.value + T_CLIP);

    Ok(HacTau {
        tau,
        tau_kendall_integral: tau_b,
        difference: (tau - tau_b).abs(),
    })
}

/// Kendall's tau of the observed pair. Fails if the two evaluation routes
/// disagree by more than [`CONSISTENCY_TOLERANCE`].
pub fn hac_kendall_tau(spec: &HacSpec) -> Result<f64> {
    let r = hac_kendall_tau_report(spec, 1e-10)?;
    if r.difference > CONSISTENCY_TOLERANCE {
        return Err(Error::Consistency {
            first: r.tau,
            second: r.tau_kendall_integral,
            difference: r.difference,
        });
    }
    Ok(r.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{bivariate_copula, tau_pair};
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(theta: f64, phi: f64, l: [f64; 3], pos: SystemicPosition) -> HacSpec {
        HacSpec::new(theta, phi, l, pos).unwrap()
    }

    /// Pickands function of the observed copula read off `hac_bivariate_copula`.
    fn pickands(sp: &HacSpec, s: f64) -> f64 {
        let phi = sp.phi();
        let u = (-(1.0 - s).powf(1.0 / phi)).exp();
        let v = (-s.powf(1.0 / phi)).exp();
        let c = hac_bivariate_copula(u, v, sp).unwrap();
        (-c.ln()).powf(phi)
    }

    /// Tau of the extreme-value copula with Pickands function `A`:
    /// `int_0^1 (2s-1) A'/A + s(1-s) (A'/A)^2 ds`.
    fn tau_ev(sp: &HacSpec) -> f64 {
        let h = 1e-6;
        let f = |s: f64| {
            let a = pickands(sp, s);
            let d = (pickands(sp, (s + h).min(1.0)) - pickands(sp, (s - h).max(0.0))) / ((s + h).min(1.0) - (s - h).max(0.0));
            (2.0 * s - 1.0) * d / a + s * (1.0 - s) * (d / a).powi(2)
        };
        integrate(f, 0.0, 1.0, &QuadConfig::with_abs_tol(1e-9)).unwrap().value
    }

    fn archimax_tau(sp: &HacSpec) -> f64 {
        let phi = sp.phi();
        (phi - 1.0) / phi + tau_ev(sp) / phi
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            HacSpec::new(1.5, 2.0, [1.0, 1.0, 1.0], SystemicPosition::Inner),
            Err(Error::Nesting { .. })
        ));
        assert!(HacSpec::new(2.0, 1.5, [1.0, 0.0, 0.0], SystemicPosition::Inner).is_err());
        assert!(HacSpec::new(2.0, 1.5, [1.0, -1.0, 1.0], SystemicPosition::Inner).is_err());
        assert!(HacSpec::new(2.0, 0.5, [1.0, 1.0, 1.0], SystemicPosition::Inner).is_err());
        assert_eq!("outer".parse::<SystemicPosition>().unwrap(), SystemicPosition::Outer);
        assert!("middle".parse::<SystemicPosition>().is_err());
    }

    #[test]
    fn marginal_examples() {
        let inner = spec(2.0, 1.0, [1.0, 3.0, 1.0], SystemicPosition::Inner);
        assert_eq!(hac_marginal_survival(0.0, &inner, Observed::First).unwrap(), 1.0);
        assert_relative_eq!(hac_marginal_survival(1.0, &inner, Observed::First).unwrap(), (-2f64).exp(), max_relative = 1e-14);
        let outer = spec(3.0, 3.0, [3.0, 1.0, 5.0], SystemicPosition::Outer);
        assert_relative_eq!(hac_marginal_survival(1.0, &outer, Observed::First).unwrap(), (-2f64).exp(), max_relative = 1e-14);
        assert!(hac_marginal_survival(-1.0, &outer, Observed::Second).is_err());
    }

    #[test]
    fn consistency_restriction() {
        let sp = spec(3.7, 1.3, [0.8, 1.1, 0.4], SystemicPosition::Inner);
        for k in 1..1000 {
            let t = k as f64 * 0.005;
            let a = sp.shock_i_survival_inner(t);
            let b = sp.shock_i_survival_outer(t);
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300) + 1e-300, "{t}: {a} vs {b}");
        }
    }

    #[test]
    fn equal_parameters_reduce_to_exchangeable_copula() {
        for pos in [SystemicPosition::Inner, SystemicPosition::Outer] {
            let sp = spec(2.4, 2.4, [0.7, 1.3, 0.4], pos);
            let (a1, a2) = sp.induced_alphas();
            let g = GumbelGenerator::new(2.4).unwrap();
            for i in 1..40 {
                for j in 1..40 {
                    let (u, v) = (i as f64 / 40.0, j as f64 / 40.0);
                    let h = hac_bivariate_copula(u, v, &sp).unwrap();
                    let e = bivariate_copula(u, v, a1, a2, &g).unwrap();
                    assert!((h - e).abs() < 1e-10, "{pos} {u} {v}: {h} vs {e}");
                }
            }
        }
    }

    #[test]
    fn no_systemic_shock_outer_is_inner_gumbel() {
        let sp = spec(3.0, 1.5, [1.0, 2.0, 0.0], SystemicPosition::Outer);
        let g = GumbelGenerator::new(3.0).unwrap();
        for (u, v) in [(0.2, 0.9), (0.5, 0.5), (0.93, 0.07)] {
            let h = hac_bivariate_copula(u, v, &sp).unwrap();
            let e = bivariate_copula(u, v, 0.0, 0.0, &g).unwrap();
            assert!((h - e).abs() < 1e-13);
        }
    }

    #[test]
    fn copula_has_uniform_margins() {
        for pos in [SystemicPosition::Inner, SystemicPosition::Outer] {
            let sp = spec(4.0, 1.7, [0.5, 1.0, 2.0], pos);
            for u in [0.01, 0.3, 0.99] {
                assert!((hac_bivariate_copula(u, 1.0, &sp).unwrap() - u).abs() < 1e-13);
                assert!((hac_bivariate_copula(1.0, u, &sp).unwrap() - u).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn g_inverse_examples() {
        let g = GFunction::new(SystemicPosition::Outer, 3.0, 1.5, [0.0, 0.0, 2.5]).unwrap();
        assert_eq!(g_inverse(0.0, &g).unwrap(), 0.0);
        assert_relative_eq!(g_inverse(7.0, &g).unwrap(), 7.0 / 2.5, max_relative = 1e-12);
        // G is linear on the K scale; its slope is the oracle
        let g = GFunction::new(SystemicPosition::Inner, 3.0, 1.5, [1.0, 2.0, 0.5]).unwrap();
        let slope = (1.0f64 + 2.0).powf(0.5) + 0.5;
        assert_relative_eq!(g_inverse(4.2, &g).unwrap(), 4.2 / slope, max_relative = 1e-12);
        assert!(g_inverse(-1.0, &g).is_err());
    }

    #[test]
    fn kendall_function_boundaries() {
        let sp = spec(3.0, 1.5, [1.0, 1.0, 1.0], SystemicPosition::Outer);
        assert!((kendall_function(1.0 - 1e-12, &sp).unwrap() - 1.0).abs() < 1e-9);
        assert!(kendall_function(0.0, &sp).is_err());
        assert!(kendall_function(1.0, &sp).is_err());
        // independence: theta = phi = 1 and no systemic shock
        let ind = spec(1.0, 1.0, [1.0, 1.0, 0.0], SystemicPosition::Outer);
        for t in [0.05, 0.3, 0.8] {
            let k = kendall_function(t, &ind).unwrap();
            assert!((k - (t - t * t.ln())).abs() < 1e-12, "{t}: {k}");
        }
    }

    #[test]
    fn kendall_function_matches_archimax_closed_form() {
        for (pos, th, ph, l) in [
            (SystemicPosition::Outer, 3.0, 1.5, [1.0, 1.0, 1.0]),
            (SystemicPosition::Inner, 3.0, 1.5, [1.0, 1.0, 1.0]),
            (SystemicPosition::Inner, 3.0, 1.0, [0.5, 1.0, 2.0]),
            (SystemicPosition::Outer, 1.5, 1.0, [2.0, 1.0, 0.5]),
        ] {
            let sp = spec(th, ph, l, pos);
            let te = tau_ev(&sp);
            for k in 1..20 {
                let t = k as f64 / 20.0;
                let expected = t - (1.0 - te) * t * t.ln() / ph;
                let got = kendall_function(t, &sp).unwrap();
                assert!((got - expected).abs() < 1e-6, "{pos} {t}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn tau_prototype_values() {
        let cases = [
            (SystemicPosition::Outer, 3.0, 1.5, [1.0, 1.0, 1.0], 0.78887),
            (SystemicPosition::Inner, 3.0, 1.5, [1.0, 1.0, 1.0], 0.61829),
            (SystemicPosition::Inner, 3.0, 1.0, [0.5, 1.0, 2.0], 0.1821),
            (SystemicPosition::Outer, 1.5, 1.0, [2.0, 1.0, 0.5], 0.42201),
        ];
        for (pos, th, ph, l, approx_value) in cases {
            let sp = spec(th, ph, l, pos);
            let r = hac_kendall_tau_report(&sp, 1e-10).unwrap();
            assert!(r.difference < 1e-5, "{r:?}");
            let oracle = archimax_tau(&sp);
            assert!((r.tau - oracle).abs() < 1e-6, "{pos}: {} vs {oracle}", r.tau);
            assert!((r.tau - approx_value).abs() < 1e-3);
        }
    }

    #[test]
    fn equal_parameters_give_pair_tau() {
        for pos in [SystemicPosition::Inner, SystemicPosition::Outer] {
            let sp = spec(2.0, 2.0, [1.0, 1.0, 1.0], pos);
            let tau = hac_kendall_tau(&sp).unwrap();
            assert!((tau - 2.0 / 3.0).abs() < 1e-5, "{tau}");
            let sp = spec(1.7, 1.7, [0.3, 2.0, 0.9], pos);
            let (a1, a2) = sp.induced_alphas();
            let expected = tau_pair(a1, a2, &GumbelGenerator::new(1.7).unwrap()).unwrap();
            assert!((hac_kendall_tau(&sp).unwrap() - expected).abs() < 1e-5);
        }
    }

    #[test]
    fn outer_without_systemic_shock_is_inner_gumbel_tau() {
        for (th, ph) in [(3.0, 1.5), (1.5, 1.0), (5.0, 1.2)] {
            let sp = spec(th, ph, [1.0, 1.0, 0.0], SystemicPosition::Outer);
            let tau = hac_kendall_tau(&sp).unwrap();
            assert!((tau - (th - 1.0) / th).abs() < 1e-5, "{th} {ph}: {tau}");
        }
    }

    #[test]
    fn quadrature_tolerance_stability() {
        let sp = spec(3.0, 1.5, [0.4, 1.2, 0.9], SystemicPosition::Inner);
        let a = hac_kendall_tau_report(&sp, 1e-8).unwrap();
        let b = hac_kendall_tau_report(&sp, 1e-10).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-6);
        assert!((a.tau_kendall_integral - b.tau_kendall_integral).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn g_round_trip(
            th in 1.0..6.0f64, dph in 0.0..1.0f64,
            li in 0.0..3.0f64, lj in 0.0..3.0f64, lk in 0.01..3.0f64,
            inner in any::<bool>(), y in 1e-6..1e6f64,
        ) {
            let ph = 1.0 + (th - 1.0) * dph;
            let pos = if inner { SystemicPosition::Inner } else { SystemicPosition::Outer };
            let g = GFunction::new(pos, th, ph, [li, lj, lk]).unwrap();
            let z = g_inverse(y, &g).unwrap();
            prop_assert!((g.eval(z) / y - 1.0).abs() < 1e-10);
        }

        #[test]
        fn kendall_function_above_diagonal_and_monotone(
            th in 1.0..5.0f64, dph in 0.0..1.0f64,
            li in 0.05..3.0f64, lj in 0.05..3.0f64, lk in 0.05..3.0f64,
            inner in any::<bool>(),
        ) {
            let ph = 1.0 + (th - 1.0) * dph;
            let pos = if inner { SystemicPosition::Inner } else { SystemicPosition::Outer };
            let sp = spec(th, ph, [li, lj, lk], pos);
            let mut prev = 0.0;
            for k in 1..100 {
                let t = k as f64 / 100.0;
                let v = kendall_function(t, &sp).unwrap();
                prop_assert!(v >= t - 1e-12);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
