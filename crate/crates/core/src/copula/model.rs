//! Parameter containers of the exchangeable contagion model.

use serde::{Deserialize, Serialize};

use super::generator::GumbelGenerator;
use super::tau::tau_pair;
use crate::error::{argument, domain, Error, Result};

/// Latent shock rates: systemic `lambda0` and idiosyncratic `lambdas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockIntensities {
    lambda0: f64,
    lambdas: Vec<f64>,
}

impl ShockIntensities {
    pub fn new(lambda0: f64, lambdas: Vec<f64>) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 >= 0.0) {
            return domain(format!("lambda0 must be finite and >= 0, got {lambda0}"));
        }
        if lambdas.is_empty() {
            return argument("at least one idiosyncratic rate is required");
        }
        for (k, &l) in lambdas.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return domain(format!("lambda[{k}] must be finite and >= 0, got {l}"));
            }
            if lambda0 + l <= 0.0 {
                return domain(format!("lambda0 + lambda[{k}] must be > 0"));
            }
        }
        Ok(Self { lambda0, lambdas })
    }

    /// Shock rates that realise the given sensitivities with `lambda0 = 1`.
    ///
    /// `alpha = 0` has no finite representation with a positive systemic rate;
    /// such entries get `lambda = inf` and callers must treat them as immune.
    pub fn unit_systemic_for(alphas: &[f64]) -> Vec<f64> {
        alphas.iter().map(|&a| if a == 0.0 { f64::INFINITY } else { (1.0 - a) / a }).collect()
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Marginal default rates `mu_k = (lambda0 + lambda_k)^{1/theta}`.
    pub fn marginal_rates(&self, gen: &GumbelGenerator) -> Vec<f64> {
        self.lambdas.iter().map(|l| (self.lambda0 + l).powf(1.0 / gen.theta())).collect()
    }
}

/// Fitted or assumed parameters `(alpha_1..alpha_d, theta)` of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    labels: Vec<String>,
    alphas: Vec<f64>,
    theta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    labels: Vec<String>,
    alphas: Vec<f64>,
    theta: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.alphas, r.theta, r.labels)
    }
}

impl ModelParams {
    pub fn new(alphas: Vec<f64>, theta: f64, labels: Vec<String>) -> Result<Self> {
        if alphas.len() != labels.len() {
            return argument(format!("{} alphas but {} labels", alphas.len(), labels.len()));
        }
        if alphas.len() < 2 {
            return argument(format!("model needs d >= 2 entities, got {}", alphas.len()));
        }
        for (a, l) in alphas.iter().zip(&labels) {
            if !(*a >= 0.0 && *a <= 1.0) {
                return domain(format!("alpha for {l} must lie in [0, 1], got {a}"));
            }
        }
        GumbelGenerator::new(theta)?;
        Ok(Self { labels, alphas, theta })
    }

    /// Parameters with generated labels `E1..Ed`.
    pub fn unlabeled(alphas: Vec<f64>, theta: f64) -> Result<Self> {
        let labels = default_labels(alphas.len());
        Self::new(alphas, theta, labels)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn generator(&self) -> GumbelGenerator {
        GumbelGenerator::new(self.theta).expect("theta validated at construction")
    }
}

pub fn default_labels(d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("E{k}")).collect()
}

/// Symmetric matrix of pairwise Kendall taus. Off-diagonal entries may be
/// undefined (`None`), e.g. when read from a file with blanks.
#[derive(Debug, Clone, PartialEq)]
pub struct TauMatrix {
    labels: Vec<String>,
    entries: Vec<Option<f64>>,
}

impl TauMatrix {
    /// Builds a matrix from the upper triangle produced by `f(i, j)`, `i < j`.
    pub fn from_upper<F>(labels: Vec<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<Option<f64>>,
    {
        let d = labels.len();
        let mut entries = vec![None; d * d];
        for i in 0..d {
            entries[i * d + i] = Some(1.0);
            for j in (i + 1)..d {
                let v = f(i, j)?;
                if let Some(t) = v {
                    if !(-1.0..=1.0).contains(&t) {
                        return domain(format!("tau({}, {}) = {t} outside [-1, 1]", labels[i], labels[j]));
                    }
                }
                entries[i * d + j] = v;
                entries[j * d + i] = v;
            }
        }
        Ok(Self { labels, entries })
    }

    /// Model-implied matrix `tau_pair(alpha_i, alpha_j, theta)`.
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        let gen = params.generator();
        let a = params.alphas();
        Self::from_upper(params.labels().to_vec(), |i, j| Ok(Some(tau_pair(a[i], a[j], &gen)?)))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.dim() + j]
    }

    /// Defined off-diagonal entries `(i, j, tau)` with `i < j`.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let d = self.dim();
        (0..d).flat_map(move |i| ((i + 1)..d).filter_map(move |j| self.get(i, j).map(|t| (i, j, t))))
    }
}
