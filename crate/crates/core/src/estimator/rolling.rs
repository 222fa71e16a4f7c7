//! Refits on contiguous windows of a panel.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit, fit_theta_fixed_alphas, FitConfig, FitResult};
use super::panel::{pairwise_tau_matrix_with, IntensityPanel, TauBasis};
use crate::error::{argument, Error, Result};

pub const MIN_WINDOW: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RollingMode {
    #[default]
    Free,
    /// Alphas come from the full-sample fit; only theta moves.
    FixedAlpha,
}

impl std::str::FromStr for RollingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Self::Free),
            "fixed-alpha" => Ok(Self::FixedAlpha),
            _ => argument(format!("unknown rolling mode '{s}' (expected free or fixed-alpha)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingPoint {
    pub window_end: NaiveDate,
    pub result: FitResult,
}

pub fn rolling_fit(
    panel: &IntensityPanel,
    window: usize,
    step: usize,
    cfg: &FitConfig,
    mode: RollingMode,
) -> Result<Vec<RollingPoint>> {
    rolling_fit_with(panel, window, step, cfg, mode, TauBasis::Levels)
}

/// Windows start at `0, step, 2 step, ...` while they fit in the panel.
/// Every window reuses `cfg.seed`, so `window == m` reproduces the full fit.
pub fn rolling_fit_with(
    panel: &IntensityPanel,
    window: usize,
    step: usize,
    cfg: &FitConfig,
    mode: RollingMode,
    basis: TauBasis,
) -> Result<Vec<RollingPoint>> {
    if window > panel.len() {
        return argument(format!("window {window} exceeds panel length {}", panel.len()));
    }
    if window < MIN_WINDOW {
        return argument(format!("window {window} is shorter than the minimum {MIN_WINDOW}"));
    }
    if step == 0 {
        return argument("step must be >= 1");
    }
    cfg.validate()?;
    let fixed = match mode {
        RollingMode::Free => None,
        RollingMode::FixedAlpha => {
            let full = fit(&pairwise_tau_matrix_with(panel, basis)?, cfg)?;
            Some(full.params.alphas().to_vec())
        }
    };
    let starts: Vec<usize> = (0..=panel.len() - window).step_by(step).collect();
    starts
        .par_iter()
        .map(|&s| {
            let w = panel.window(s, window)?;
            let target = pairwise_tau_matrix_with(&w, basis)?;
            let result = match &fixed {
                None => fit(&target, cfg)?,
                Some(a) => fit_theta_fixed_alphas(&target, a, cfg)?,
            };
            Ok(RollingPoint {
                window_end: panel.dates()[s + window - 1],
                result,
            })
        })
        .collect()
}

/// `window_end,theta,alpha_<label>...,objective`
pub fn write_rolling_csv<W: std::io::Write>(points: &[RollingPoint], labels: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["window_end".to_string(), "theta".to_string()];
    header.extend(labels.iter().map(|l| format!("alpha_{l}")));
    header.push("objective".into());
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.window_end.to_string(), p.result.params.theta().to_string()];
        row.extend(p.result.params.alphas().iter().map(|a| a.to_string()));
        row.push(p.result.objective.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
