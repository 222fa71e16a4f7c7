//! Moment matching of `(alpha, theta)` to a tau matrix.
//!
//! The objective sums a distance between empirical and model taus over all
//! defined pairs. It is minimised by multi-restart simulated annealing
//! followed by a compass-search polish of each restart.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{tau_mo, tau_pair, GumbelGenerator, ModelParams, TauMatrix};
use crate::error::{argument, domain, Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Quadratic,
    Absolute,
}

impl Distance {
    fn apply(self, r: f64) -> f64 {
        match self {
            Self::Quadratic => r * r,
            Self::Absolute => r.abs(),
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Self::Quadratic),
            "absolute" => Ok(Self::Absolute),
            _ => argument(format!("unknown distance '{s}' (expected quadratic or absolute)")),
        }
    }
}

/// Annealing schedule and search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub restarts: usize,
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub cooling: f64,
    pub steps_per_temperature: usize,
    /// Standard deviation of alpha proposals at the initial temperature.
    pub alpha_step: f64,
    /// Standard deviation of theta proposals at the initial temperature.
    pub theta_step: f64,
    pub theta_max: f64,
    pub seed: u64,
    pub distance: Distance,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            initial_temperature: 0.1,
            final_temperature: 1e-8,
            cooling: 0.95,
            steps_per_temperature: 200,
            alpha_step: 0.2,
            theta_step: 1.0,
            theta_max: 50.0,
            seed: 0,
            distance: Distance::Quadratic,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return argument("restarts must be >= 1");
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return argument("initial temperature must be positive");
        }
        if !(self.final_temperature > 0.0 && self.final_temperature < self.initial_temperature) {
            return argument("final temperature must be positive and below the initial one");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return argument(format!("cooling factor must lie in (0, 1), got {}", self.cooling));
        }
        if self.steps_per_temperature == 0 {
            return argument("steps per temperature must be >= 1");
        }
        if !(self.alpha_step > 0.0 && self.theta_step > 0.0) {
            return argument("proposal scales must be positive");
        }
        if !(self.theta_max >= 1.0 && self.theta_max.is_finite()) {
            return argument(format!("theta upper bound must be finite and >= 1, got {}", self.theta_max));
        }
        Ok(())
    }
}

/// `observed - model` for one entity pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResidual {
    pub first: String,
    pub second: String,
    pub observed: f64,
    pub model: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub objective: f64,
    pub residuals: Vec<PairResidual>,
    /// Best objective reached by each restart, in restart order.
    pub restart_objectives: Vec<f64>,
    pub seed: u64,
    pub config: FitConfig,
    pub fixed_alphas: bool,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct FitDocument<'a> {
    labels: &'a [String],
    alphas: &'a [f64],
    theta: f64,
    objective: f64,
    residuals: &'a [PairResidual],
    restarts: &'a [f64],
    seed: u64,
    fixed_alphas: bool,
    config: &'a FitConfig,
    warnings: &'a [String],
}

impl Serialize for FitResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FitDocument {
            labels: self.params.labels(),
            alphas: self.params.alphas(),
            theta: self.params.theta(),
            objective: self.objective,
            residuals: &self.residuals,
            restarts: &self.restart_objectives,
            seed: self.seed,
            fixed_alphas: self.fixed_alphas,
            config: &self.config,
            warnings: &self.warnings,
        }
        .serialize(s)
    }
}

/// Defined off-diagonal targets in a compact form for fast evaluation.
struct Target {
    pairs: Vec<(usize, usize, f64)>,
    distance: Distance,
}

impl Target {
    fn new(target: &TauMatrix, distance: Distance) -> Result<Self> {
        if target.dim() < 2 {
            return argument("target needs d >= 2 entities");
        }
        let pairs: Vec<_> = target.upper_pairs().collect();
        if pairs.is_empty() {
            return Err(Error::Unfittable("no defined off-diagonal tau".into()));
        }
        Ok(Self { pairs, distance })
    }

    // alphas and theta are inside the box here; tau_pair inlined for speed
    fn eval(&self, alphas: &[f64], theta: f64) -> f64 {
        let inv = 1.0 / theta;
        self.pairs
            .iter()
            .map(|&(i, j, obs)| {
                let (a, b) = (alphas[i], alphas[j]);
                let den = a + b - a * b;
                let mo = if den == 0.0 { 0.0 } else { a * b / den };
                self.distance.apply(obs - (1.0 - inv + mo * inv))
            })
            .sum()
    }
}

/// `sum_{i<j} dist(tau_hat_ij, tau_pair(alpha_i, alpha_j, theta))` over the
/// defined entries of `target`.
pub fn objective(params: &ModelParams, target: &TauMatrix, distance: Distance) -> Result<f64> {
    if params.labels() != target.labels() {
        return argument("parameter labels do not match the tau matrix labels");
    }
    let gen = params.generator();
    let a = params.alphas();
    let mut total = 0.0;
    for (i, j, obs) in target.upper_pairs() {
        total += distance.apply(obs - tau_pair(a[i], a[j], &gen)?);
    }
    Ok(total)
}

fn residuals(params: &ModelParams, target: &TauMatrix) -> Result<Vec<PairResidual>> {
    let gen = params.generator();
    let a = params.alphas();
    let labels = params.labels();
    target
        .upper_pairs()
        .map(|(i, j, obs)| {
            let model = tau_pair(a[i], a[j], &gen)?;
            Ok(PairResidual {
                first: labels[i].clone(),
                second: labels[j].clone(),
                observed: obs,
                model,
                residual: obs - model,
            })
        })
        .collect()
}

fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let mut y = (x - lo).rem_euclid(2.0 * width);
    if y > width {
        y = 2.0 * width - y;
    }
    lo + y
}

/// Point `(alpha_1..alpha_d, theta)` with its objective.
#[derive(Debug, Clone)]
struct State {
    x: Vec<f64>,
    f: f64,
}

fn eval_state(target: &Target, x: &[f64]) -> f64 {
    let d = x.len() - 1;
    target.eval(&x[..d], x[d])
}

fn anneal(target: &Target, d: usize, cfg: &FitConfig, restart: usize) -> State {
    let mut rng = stream_rng(cfg.seed, restart as u64);
    let theta_hi = cfg.theta_max;
    let mut x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    x.push(1.0 + (theta_hi.min(10.0) - 1.0) * rng.random::<f64>());
    let mut cur = State {
        f: eval_state(target, &x),
        x,
    };
    let mut best = cur.clone();
    let mut temp = cfg.initial_temperature;
    while temp > cfg.final_temperature {
        let scale = (temp / cfg.initial_temperature).sqrt().max(1e-4);
        for _ in 0..cfg.steps_per_temperature {
            let k = rng.random_range(0..=d);
            let z: f64 = rng.sample(StandardNormal);
            let old = cur.x[k];
            cur.x[k] = if k < d {
                reflect(old + cfg.alpha_step * scale * z, 0.0, 1.0)
            } else {
                reflect(old + cfg.theta_step * scale * z, 1.0, theta_hi)
            };
            let f = eval_state(target, &cur.x);
            let u: f64 = rng.random();
            if f <= cur.f || u < ((cur.f - f) / temp).exp() {
                cur.f = f;
                if f < best.f {
                    best = cur.clone();
                }
            } else {
                cur.x[k] = old;
            }
        }
        temp *= cfg.cooling;
    }
    best
}

/// Compass search inside the box, halving the steps until they vanish.
fn polish(target: &Target, mut s: State, theta_hi: f64, free: &[bool]) -> State {
    let d = s.x.len() - 1;
    let mut steps: Vec<f64> = (0..=d).map(|k| if k < d { 0.05 } else { 0.25 }).collect();
    for _ in 0..100_000 {
        let mut improved = false;
        for k in 0..=d {
            if !free[k] {
                continue;
            }
            for dir in [1.0, -1.0] {
                let (lo, hi) = if k < d { (0.0, 1.0) } else { (1.0, theta_hi) };
                let old = s.x[k];
                let cand = (old + dir * steps[k]).clamp(lo, hi);
                if cand == old {
                    continue;
                }
                s.x[k] = cand;
                let f = eval_state(target, &s.x);
                if f < s.f {
                    s.f = f;
                    improved = true;
                    break;
                }
                s.x[k] = old;
            }
        }
        if !improved {
            for (k, st) in steps.iter_mut().enumerate() {
                if free[k] {
                    *st *= 0.5;
                }
            }
            if steps.iter().zip(free).filter(|(_, f)| **f).all(|(st, _)| *st < 1e-13) {
                break;
            }
        }
    }
    s
}

fn finish(
    target: &TauMatrix,
    alphas: Vec<f64>,
    theta: f64,
    restart_objectives: Vec<f64>,
    cfg: &FitConfig,
    fixed_alphas: bool,
) -> Result<FitResult> {
    let params = ModelParams::new(alphas, theta, target.labels().to_vec())?;
    let objective = objective(&params, target, cfg.distance)?;
    let mut warnings = Vec::new();
    if target.dim() == 2 && !fixed_alphas {
        warnings.push(
            "identifiability: with d = 2 a single tau constrains three parameters; the estimate is one of many exact fits"
                .to_string(),
        );
    }
    Ok(FitResult {
        residuals: residuals(&params, target)?,
        params,
        objective,
        restart_objectives,
        seed: cfg.seed,
        config: cfg.clone(),
        fixed_alphas,
        warnings,
    })
}

/// Global minimisation over `alpha in [0,1]^d`, `theta in [1, theta_max]`.
pub fn fit(target: &TauMatrix, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let t = Target::new(target, cfg.distance)?;
    let d = target.dim();
    let free = vec![true; d + 1];
    let results: Vec<State> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| polish(&t, anneal(&t, d, cfg, r), cfg.theta_max, &free))
        .collect();
    // minimum objective, earliest restart on ties
    let best = results
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.f.total_cmp(&b.f).then(ia.cmp(ib)))
        .map(|(_, s)| s.clone())
        .expect("at least one restart");
    let restart_objectives = results.iter().map(|s| s.f).collect();
    finish(target, best.x[..d].to_vec(), best.x[d], restart_objectives, cfg, false)
}

/// Minimises over `theta` alone with the sensitivities held fixed.
///
/// Model taus are affine in `1/theta`, so the objective is convex in
/// `x = 1/theta` and golden-section search on `[1/theta_max, 1]` is exact.
pub fn fit_theta_fixed_alphas(target: &TauMatrix, alphas: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if alphas.len() != target.dim() {
        return argument(format!("{} alphas for {} entities", alphas.len(), target.dim()));
    }
    for &a in alphas {
        tau_mo(a, a)?;
    }
    let t = Target::new(target, cfg.distance)?;
    let f = |x: f64| t.eval(alphas, 1.0 / x);
    let (mut lo, mut hi) = (1.0 / cfg.theta_max, 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut e = lo + g * (hi - lo);
    let (mut fc, mut fe) = (f(c), f(e));
    while hi - lo > 1e-13 {
        if fc <= fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + g * (hi - lo);
            fe = f(e);
        }
    }
    let mut best_x = 0.5 * (lo + hi);
    let mut best_f = f(best_x);
    for edge in [1.0, 1.0 / cfg.theta_max] {
        let fe = f(edge);
        if fe <= best_f {
            best_x = edge;
            best_f = fe;
        }
    }
    let theta = (1.0 / best_x).clamp(1.0, cfg.theta_max);
    GumbelGenerator::new(theta)?;
    finish(target, alphas.to_vec(), theta, vec![best_f], cfg, true)
}

/// Harmonic mean of sensitivities, with a warning when it degenerates to 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicMean {
    pub value: f64,
    pub warning: Option<String>,
}

/// `d / sum(1 / alpha_k)`; a zero entry makes the mean 0.
pub fn harmonic_mean_alpha(alphas: &[f64]) -> Result<HarmonicMean> {
    if alphas.is_empty() {
        return argument("harmonic mean of an empty vector");
    }
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return domain(format!("alphas must be finite and >= 0, got {a}"));
    }
    let zeros = alphas.iter().filter(|a| **a == 0.0).count();
    if zeros > 0 {
        return Ok(HarmonicMean {
            value: 0.0,
            warning: Some(format!("{zeros} zero alpha(s); harmonic mean set to 0 by continuity")),
        });
    }
    let value = alphas.len() as f64 / alphas.iter().map(|a| 1.0 / a).sum::<f64>();
    Ok(HarmonicMean { value, warning: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::default_labels;

    fn target_for(alphas: &[f64], theta: f64) -> TauMatrix {
        TauMatrix::from_params(&ModelParams::unlabeled(alphas.to_vec(), theta).unwrap()).unwrap()
    }

    fn quick() -> FitConfig {
        FitConfig {
            restarts: 8,
            ..FitConfig::default()
        }
    }

    #[test]
    fn objective_examples() {
        let p = ModelParams::unlabeled(vec![0.3, 0.6, 0.8], 2.5).unwrap();
        assert_eq!(objective(&p, &TauMatrix::from_params(&p).unwrap(), Distance::Quadratic).unwrap(), 0.0);
        // tau_pair(0, 0, 4) = 0.75 against 0.5
        let p = ModelParams::unlabeled(vec![0.0, 0.0], 4.0).unwrap();
        let t = TauMatrix::from_upper(default_labels(2), |_, _| Ok(Some(0.5))).unwrap();
        assert!((objective(&p, &t, Distance::Quadratic).unwrap() - 0.0625).abs() < 1e-15);
        assert!((objective(&p, &t, Distance::Absolute).unwrap() - 0.25).abs() < 1e-15);
        let other = ModelParams::new(vec![0.0, 0.0], 4.0, vec!["x".into(), "y".into()]).unwrap();
        assert!(objective(&other, &t, Distance::Quadratic).is_err());
    }

    #[test]
    fn fast_objective_matches_public_one() {
        let t = target_for(&[0.1, 0.5, 0.9, 0.3], 3.0);
        let fast = Target::new(&t, Distance::Quadratic).unwrap();
        let p = ModelParams::unlabeled(vec![0.2, 0.4, 0.7, 0.0], 2.2).unwrap();
        let slow = objective(&p, &t, Distance::Quadratic).unwrap();
        assert!((fast.eval(p.alphas(), p.theta()) - slow).abs() < 1e-15);
    }

    #[test]
    fn reflection_stays_in_box() {
        for x in [-2.3, -0.1, 0.4, 1.2, 3.7] {
            let y = reflect(x, 0.0, 1.0);
            assert!((0.0..=1.0).contains(&y));
        }
        assert!((reflect(1.2, 0.0, 1.0) - 0.8).abs() < 1e-15);
        assert!((reflect(-0.1, 0.0, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn noiseless_recovery() {
        let truth = [0.2, 0.4, 0.5, 0.7, 0.9];
        let r = fit(&target_for(&truth, 3.0), &FitConfig::default()).unwrap();
        assert!((r.params.theta() - 3.0).abs() <= 0.05, "{}", r.params.theta());
        for (a, t) in r.params.alphas().iter().zip(truth) {
            assert!((a - t).abs() <= 0.02, "{a} vs {t}");
        }
        assert!(r.objective < 1e-12);
        assert_eq!(r.restart_objectives.len(), 50);
    }

    #[test]
    fn fit_is_reproducible_and_objective_consistent() {
        let t = target_for(&[0.3, 0.6, 0.8], 2.0);
        let a = fit(&t, &quick()).unwrap();
        let b = fit(&t, &quick()).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let recomputed = objective(&a.params, &t, Distance::Quadratic).unwrap();
        assert_eq!(a.objective, recomputed);
    }

    #[test]
    fn two_entities_warn() {
        let t = TauMatrix::from_upper(default_labels(2), |_, _| Ok(Some(0.6))).unwrap();
        let r = fit(&t, &quick()).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("identifiability")));
        assert!(r.objective < 1e-12);
    }

    #[test]
    fn unfittable_and_bad_config() {
        let t = TauMatrix::from_upper(default_labels(3), |_, _| Ok(None)).unwrap();
        assert!(matches!(fit(&t, &quick()), Err(Error::Unfittable(_))));
        let ok = target_for(&[0.3, 0.6], 2.0);
        let bad = FitConfig {
            cooling: 1.0,
            ..quick()
        };
        assert!(fit(&ok, &bad).is_err());
    }

    #[test]
    fn fixed_alpha_recovery() {
        let alphas = [0.2, 0.4, 0.5, 0.7, 0.9];
        let r = fit_theta_fixed_alphas(&target_for(&alphas, 3.0), &alphas, &quick()).unwrap();
        assert!((r.params.theta() - 3.0).abs() < 1e-4, "{}", r.params.theta());
        assert!(r.fixed_alphas);
        let r = fit_theta_fixed_alphas(&target_for(&alphas, 1.0), &alphas, &quick()).unwrap();
        assert_eq!(r.params.theta(), 1.0);
        let abs_cfg = FitConfig {
            distance: Distance::Absolute,
            ..quick()
        };
        let r = fit_theta_fixed_alphas(&target_for(&alphas, 6.5), &alphas, &abs_cfg).unwrap();
        assert!((r.params.theta() - 6.5).abs() < 1e-4);
        assert!(fit_theta_fixed_alphas(&target_for(&alphas, 2.0), &alphas[..3], &quick()).is_err());
        assert!(fit_theta_fixed_alphas(&target_for(&[0.2, 0.3], 2.0), &[0.2, 1.5], &quick()).is_err());
    }

    #[test]
    fn harmonic_mean_examples() {
        assert!((harmonic_mean_alpha(&[0.4, 0.4, 0.4]).unwrap().value - 0.4).abs() < 1e-15);
        let h = harmonic_mean_alpha(&[0.5, 1.0]).unwrap();
        assert!((h.value - 2.0 / 3.0).abs() < 1e-15);
        assert!(h.warning.is_none());
        let z = harmonic_mean_alpha(&[0.5, 0.0]).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.warning.is_some());
        assert!(harmonic_mean_alpha(&[]).is_err());
    }
}
