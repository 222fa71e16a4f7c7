//! Generators, survival functions, the exchangeable contagion copula and its
//! Kendall's tau formulas.

mod generator;
mod model;
mod survival;
mod tau;

pub use generator::{Generator, GumbelGenerator};
pub use model::{default_labels, ModelParams, ShockIntensities, TauMatrix};
pub use survival::{bivariate_copula, joint_survival, marginal_survival, marshall_olkin_copula, survival_copula};
pub use tau::{
    alphas_from_intensities, kendall_tau_general, kendall_tau_general_with, tau_mo, tau_pair, tau_systemic,
    GumbelPowerSurvival, SurvivalFunction,
};
