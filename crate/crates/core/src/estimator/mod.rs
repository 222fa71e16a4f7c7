//! Empirical taus and the moment-matching fit.

mod fit;
mod kendall;
mod panel;
mod rolling;

pub use fit::{
    fit, fit_theta_fixed_alphas, harmonic_mean_alpha, objective, Distance, FitConfig, FitResult, HarmonicMean,
    PairResidual,
};
pub use kendall::{empirical_kendall_tau, kendall_tau_brute, kendall_tau_with_std_error};
pub use panel::{pairwise_tau_matrix, pairwise_tau_matrix_with, IntensityPanel, TauBasis};
pub use rolling::{rolling_fit, rolling_fit_with, write_rolling_csv, RollingMode, RollingPoint, MIN_WINDOW};
