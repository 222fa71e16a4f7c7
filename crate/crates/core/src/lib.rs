//! Exchangeable Archimedean contagion model for credit default times.
//!
//! Default times are `tau_k = min(X0, X_k)` where the systemic shock `X0` and
//! the idiosyncratic shocks `X_k` are coupled by a Gumbel copula. The crate
//! evaluates the resulting copulas and Kendall's taus, simulates the model,
//! fits `(alpha, theta)` to panels of default intensities and runs the
//! systemic-intensity line diagnostic. A trivariate nested-Gumbel extension
//! lives in [`hac`].

pub mod copula;
pub mod data_io;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod hac;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod sampler;

pub use error::{Error, Result};
