//! Monte Carlo simulation of shock and default times.
//!
//! Gumbel vectors come from the Marshall-Olkin frailty construction
//! `V_i = psi(E_i / S)` with `S` positive stable of index `1/theta`. Each
//! replication draws from its own stream (see [`crate::rng`]) so output is
//! identical however rows are scheduled.

use std::io::Write;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Exp1, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{Generator, GumbelGenerator, ShockIntensities};
use crate::error::{argument, domain, Error, Result};
use crate::estimator::{kendall_tau_with_std_error, IntensityPanel};
use crate::hac::{HacSpec, Observed, SystemicPosition};
use crate::rng::stream_rng;

/// Draws from the positive stable law with Laplace transform `exp(-t^a)`
/// (Kanter's representation). `a = 1` gives the constant 1.
pub fn sample_positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0) {
        return domain(format!("stable index must lie in (0, 1], got {a}"));
    }
    Ok(positive_stable(a, rng))
}

fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a == 1.0 {
        return 1.0;
    }
    let u = std::f64::consts::PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let log_s = (a * u).sin().ln() - u.sin().ln() / a + (1.0 - a) / a * (((1.0 - a) * u).sin().ln() - e.ln());
    log_s.exp()
}

/// One draw from the `dim`-dimensional Gumbel copula.
pub fn sample_gumbel_vector<R: Rng + ?Sized>(dim: usize, gen: &GumbelGenerator, rng: &mut R) -> Result<Vec<f64>> {
    if dim == 0 {
        return argument("dimension must be >= 1");
    }
    let s = positive_stable(1.0 / gen.theta(), rng);
    Ok((0..dim)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            gen.eval(e / s)
        })
        .collect())
}

/// Configuration of a default-time simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub shocks: ShockIntensities,
    pub theta: f64,
}

impl SimConfig {
    pub fn new(n_samples: usize, seed: u64, shocks: ShockIntensities, theta: f64) -> Result<Self> {
        if n_samples == 0 {
            return argument("n_samples must be >= 1");
        }
        GumbelGenerator::new(theta)?;
        Ok(Self {
            n_samples,
            seed,
            shocks,
            theta,
        })
    }
}

/// Observed default times (row-major `n x d`) and the systemic shock draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultTimeSample {
    dim: usize,
    times: Vec<f64>,
    systemic_times: Vec<f64>,
}

impl DefaultTimeSample {
    pub fn n(&self) -> usize {
        self.systemic_times.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.times[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.times[i * self.dim + k]).collect()
    }

    pub fn systemic_times(&self) -> &[f64] {
        &self.systemic_times
    }

    /// Long-format CSV `replication,entity,tau_time,systemic_time`.
    pub fn write_csv<W: Write>(&self, labels: &[String], out: W) -> Result<()> {
        if labels.len() != self.dim {
            return argument(format!("{} labels for {} entities", labels.len(), self.dim));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replication", "entity", "tau_time", "systemic_time"])?;
        for i in 0..self.n() {
            let x0 = self.systemic_times[i].to_string();
            for (k, label) in labels.iter().enumerate() {
                w.write_record([i.to_string(), label.clone(), self.times[i * self.dim + k].to_string(), x0.clone()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

// Shock time with survival psi_theta(lambda t^theta): (E / (S lambda))^{1/theta}.
fn shock_time(e: f64, s: f64, lambda: f64, inv_theta: f64) -> f64 {
    if lambda == 0.0 {
        f64::INFINITY
    } else {
        (e / (s * lambda)).powf(inv_theta)
    }
}

/// Simulates `n` replications of `(X0, tau_1..tau_d)` with `tau_k = min(X0, X_k)`.
pub fn simulate_default_times(cfg: &SimConfig) -> Result<DefaultTimeSample> {
    let shocks = &cfg.shocks;
    if shocks.lambda0() == 0.0 && shocks.lambdas().iter().all(|&l| l == 0.0) {
        return Err(Error::DegenerateModel("all shock rates are zero".into()));
    }
    if cfg.n_samples == 0 {
        return argument("n_samples must be >= 1");
    }
    let gen = GumbelGenerator::new(cfg.theta)?;
    let a = 1.0 / gen.theta();
    let d = shocks.dim();
    let rows: Vec<(f64, Vec<f64>)> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r);
            let s = positive_stable(a, &mut rng);
            let x0 = shock_time(rng.sample(Exp1), s, shocks.lambda0(), a);
            let taus = shocks
                .lambdas()
                .iter()
                .map(|&l| shock_time(rng.sample(Exp1), s, l, a).min(x0))
                .collect();
            (x0, taus)
        })
        .collect();
    let mut times = Vec::with_capacity(cfg.n_samples * d);
    let mut systemic_times = Vec::with_capacity(cfg.n_samples);
    for (x0, taus) in rows {
        systemic_times.push(x0);
        times.extend(taus);
    }
    Ok(DefaultTimeSample {
        dim: d,
        times,
        systemic_times,
    })
}

/// Scale of the synthetic intensity panel: values are `SYNTHETIC_SCALE * mu_k * tau_k`.
pub const SYNTHETIC_SCALE: f64 = 0.01;

/// Lays replications out on consecutive calendar days from `start`, entity
/// `k` on row `i` taking `SYNTHETIC_SCALE * mu_k * tau_k(i)`.
///
/// The map is increasing in each default time, so every panel-level tau equals
/// the corresponding sample-level tau. On rows where the systemic shock fires
/// first, the systemic-intensity extraction returns a value proportional to
/// `lambda0 * X0^theta`.
pub fn synthetic_panel(
    sample: &DefaultTimeSample,
    cfg: &SimConfig,
    labels: Vec<String>,
    start: NaiveDate,
) -> Result<IntensityPanel> {
    if labels.len() != sample.dim() || cfg.shocks.dim() != sample.dim() {
        return argument(format!("{} labels for {} entities", labels.len(), sample.dim()));
    }
    let rates = cfg.shocks.marginal_rates(&GumbelGenerator::new(cfg.theta)?);
    let dates = (0..sample.n())
        .map(|i| {
            start
                .checked_add_days(Days::new(i as u64))
                .ok_or_else(|| Error::Argument("date grid overflows the calendar".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let columns = (0..sample.dim())
        .map(|k| sample.column(k).iter().map(|t| SYNTHETIC_SCALE * rates[k] * t).collect())
        .collect();
    IntensityPanel::new(dates, labels, columns)
}

/// Empirical Kendall tau with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McTau {
    pub tau: f64,
    pub std_error: f64,
}

/// Empirical tau of `(tau_j, tau_k)` for a model with the given sensitivities.
///
/// Uses `lambda0 = 1`, `lambda = (1 - alpha) / alpha`; an entity with
/// `alpha = 0` is made immune to the systemic shock (its default time is its
/// own shock), and `lambda0 = 0` when both sensitivities vanish.
pub fn empirical_tau_mc(alpha_j: f64, alpha_k: f64, gen: &GumbelGenerator, n: usize, seed: u64) -> Result<McTau> {
    for a in [alpha_j, alpha_k] {
        if !(0.0..=1.0).contains(&a) {
            return domain(format!("alpha must lie in [0, 1], got {a}"));
        }
    }
    if n < 1000 {
        return argument(format!("Monte Carlo tau needs n >= 1000, got {n}"));
    }
    let a = 1.0 / gen.theta();
    let lambda0 = if alpha_j == 0.0 && alpha_k == 0.0 { 0.0 } else { 1.0 };
    let rate = |alpha: f64| if alpha == 0.0 { 1.0 } else { (1.0 - alpha) / alpha };
    let (lj, lk) = (rate(alpha_j), rate(alpha_k));
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let s = positive_stable(a, &mut rng);
            let x0 = shock_time(rng.sample(Exp1), s, lambda0, a);
            let xj = shock_time(rng.sample(Exp1), s, lj, a);
            let xk = shock_time(rng.sample(Exp1), s, lk, a);
            let tj = if alpha_j == 0.0 { xj } else { xj.min(x0) };
            let tk = if alpha_k == 0.0 { xk } else { xk.min(x0) };
            (tj, tk)
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (tau, std_error) = kendall_tau_with_std_error(&x, &y)?;
    Ok(McTau { tau, std_error })
}

/// Observed default-time pairs of a nested structure.
#[derive(Debug, Clone, PartialEq)]
pub struct HacSample {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl HacSample {
    /// Copula-scale observations `(S_first(t1), S_second(t2))`.
    pub fn uniforms(&self, spec: &HacSpec) -> Vec<(f64, f64)> {
        let r1 = spec.observed_rate(Observed::First);
        let r2 = spec.observed_rate(Observed::Second);
        self.first
            .iter()
            .zip(&self.second)
            .map(|(&a, &b)| ((-r1 * a).exp(), (-r2 * b).exp()))
            .collect()
    }
}

/// Samples the observed pair of a trivariate nested Gumbel structure.
///
/// Outer frailty `V0 ~ stable(1/phi)`; inner frailty
/// `V01 = V0^{theta/phi} stable(phi/theta)`. Inner-attached shocks use
/// `psi_theta(E / V01)`, the outer one `psi_phi(E / V0)`.
pub fn simulate_hac_triple(spec: &HacSpec, n: usize, seed: u64) -> Result<HacSample> {
    if n == 0 {
        return argument("n must be >= 1");
    }
    let (theta, phi) = (spec.theta(), spec.phi());
    if theta < phi {
        return Err(Error::Nesting { theta, phi });
    }
    let [li, lj, lk] = spec.lambdas();
    let position = spec.position();
    let ratio = phi / theta;
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let v0 = positive_stable(1.0 / phi, &mut rng);
            let v01 = v0.powf(1.0 / ratio) * positive_stable(ratio, &mut rng);
            // -ln U for inner (theta) and outer (phi) attached uniforms
            let ei: f64 = rng.sample(Exp1);
            let ej: f64 = rng.sample(Exp1);
            let ek: f64 = rng.sample(Exp1);
            let inner_neg_log = |e: f64| (e / v01).powf(1.0 / theta);
            let outer_neg_log = |e: f64| (e / v0).powf(1.0 / phi);
            let time = |neg_log: f64, rate: f64| if rate == 0.0 { f64::INFINITY } else { neg_log / rate };
            match position {
                SystemicPosition::Inner => {
                    let xi = time(inner_neg_log(ei), li.powf(1.0 / phi));
                    let xj = time(inner_neg_log(ej), lj.powf(1.0 / theta));
                    let xk = time(outer_neg_log(ek), lk.powf(1.0 / phi));
                    (xi.min(xj), xi.min(xk))
                }
                SystemicPosition::Outer => {
                    let xi = time(inner_neg_log(ei), li.powf(1.0 / phi));
                    let xj = time(inner_neg_log(ej), lj.powf(1.0 / phi));
                    let xk = time(outer_neg_log(ek), lk.powf(1.0 / phi));
                    (xi.min(xk), xj.min(xk))
                }
            }
        })
        .collect();
    let (first, second) = pairs.into_iter().unzip();
    Ok(HacSample { first, second })
}
