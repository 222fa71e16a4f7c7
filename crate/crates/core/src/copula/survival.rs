//! Marginal and joint survival functions and the survival copula.

use super::generator::GumbelGenerator;
use super::model::{ModelParams, ShockIntensities};
use crate::error::{argument, domain, Result};

/// `(sum_k w_k s_k^theta)^{1/theta}` for `s_k >= 0`, scaled by `max s_k` so
/// large arguments never overflow.
pub(crate) fn weighted_power_norm(weights: &[f64], s: &[f64], theta: f64) -> f64 {
    let scale = s
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .fold(0.0_f64, |m, (&x, _)| m.max(x));
    if scale == 0.0 {
        return 0.0;
    }
    if scale.is_infinite() {
        return f64::INFINITY;
    }
    let sum: f64 = s
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| w * (x / scale).powf(theta))
        .sum();
    scale * sum.powf(1.0 / theta)
}

/// `P(tau_k > t) = exp(-(lambda0 + lambdak)^{1/theta} t)`.
pub fn marginal_survival(t: f64, lambda0: f64, lambdak: f64, gen: &GumbelGenerator) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    if !(lambda0 >= 0.0 && lambdak >= 0.0 && lambda0 + lambdak > 0.0) {
        return domain(format!("rates must be >= 0 with positive sum, got ({lambda0}, {lambdak})"));
    }
    let mu = (lambda0 + lambdak).powf(1.0 / gen.theta());
    Ok((-mu * t).exp())
}

/// Joint survival `exp{-(lambda0 max(t)^theta + sum lambda_k t_k^theta)^{1/theta}}`.
pub fn joint_survival(ts: &[f64], shocks: &ShockIntensities, gen: &GumbelGenerator) -> Result<f64> {
    if ts.len() != shocks.dim() {
        return argument(format!("{} times for {} entities", ts.len(), shocks.dim()));
    }
    if ts.len() < 2 {
        return argument("joint survival needs d >= 2");
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0)) {
        return domain(format!("times must be >= 0, got {t}"));
    }
    let tmax = ts.iter().cloned().fold(0.0, f64::max);
    let mut weights = Vec::with_capacity(ts.len() + 1);
    let mut args = Vec::with_capacity(ts.len() + 1);
    weights.push(shocks.lambda0());
    args.push(tmax);
    weights.extend_from_slice(shocks.lambdas());
    args.extend_from_slice(ts);
    Ok((-weighted_power_norm(&weights, &args, gen.theta())).exp())
}

fn check_unit(us: &[f64]) -> Result<()> {
    if let Some(u) = us.iter().find(|u| !(**u > 0.0 && **u <= 1.0)) {
        return domain(format!("copula arguments must lie in (0, 1], got {u}"));
    }
    Ok(())
}

fn check_alpha(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return domain(format!("alpha must lie in [0, 1], got {a}"));
    }
    Ok(())
}

/// Index of the region `A_j`: the argmax of `alpha_i (-ln u_i)^theta`, ties
/// resolved toward the smallest index.
fn region(alphas: &[f64], neg_logs: &[f64], theta: f64) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (&a, &l)) in alphas.iter().zip(neg_logs).enumerate() {
        // log of alpha * l^theta, monotone and overflow free
        let score = if a == 0.0 || l == 0.0 {
            f64::NEG_INFINITY
        } else {
            a.ln() + theta * l.ln()
        };
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

fn copula_unchecked(us: &[f64], alphas: &[f64], theta: f64) -> f64 {
    let neg_logs: Vec<f64> = us.iter().map(|u| -u.ln()).collect();
    let j = region(alphas, &neg_logs, theta);
    let weights: Vec<f64> = alphas
        .iter()
        .enumerate()
        .map(|(k, &a)| if k == j { 1.0 } else { 1.0 - a })
        .collect();
    (-weighted_power_norm(&weights, &neg_logs, theta)).exp()
}

/// The d-dimensional survival copula of the default times.
pub fn survival_copula(us: &[f64], params: &ModelParams) -> Result<f64> {
    if us.len() != params.dim() {
        return argument(format!("{} arguments for {} entities", us.len(), params.dim()));
    }
    check_unit(us)?;
    Ok(copula_unchecked(us, params.alphas(), params.theta()))
}

/// Bivariate margin `C_{j,k}(u, v)` of the survival copula.
pub fn bivariate_copula(u: f64, v: f64, alpha_j: f64, alpha_k: f64, gen: &GumbelGenerator) -> Result<f64> {
    check_unit(&[u, v])?;
    check_alpha(alpha_j)?;
    check_alpha(alpha_k)?;
    Ok(copula_unchecked(&[u, v], &[alpha_j, alpha_k], gen.theta()))
}

/// The Marshall-Olkin copula `min(u v^{1-a2}, u^{1-a1} v)`.
pub fn marshall_olkin_copula(u: f64, v: f64, alpha1: f64, alpha2: f64) -> f64 {
    (u * v.powf(1.0 - alpha2)).min(u.powf(1.0 - alpha1) * v)
}
