//! Date-aligned panels of default intensities and their tau matrices.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kendall::empirical_kendall_tau;
use crate::copula::TauMatrix;
use crate::error::{argument, domain, Error, Result};

/// Per-entity intensities `mu_k(t_i)` on strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPanel {
    dates: Vec<NaiveDate>,
    entities: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl IntensityPanel {
    /// `columns[k][i]` is the intensity of entity `k` on `dates[i]`.
    pub fn new(dates: Vec<NaiveDate>, entities: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if entities.len() != columns.len() {
            return argument(format!("{} entities but {} columns", entities.len(), columns.len()));
        }
        if entities.is_empty() {
            return argument("panel needs at least one entity");
        }
        for (i, e) in entities.iter().enumerate() {
            if entities[..i].contains(e) {
                return argument(format!("duplicate entity label {e}"));
            }
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return argument(format!("dates must be strictly increasing ({} then {})", w[0], w[1]));
        }
        for (e, col) in entities.iter().zip(&columns) {
            if col.len() != dates.len() {
                return argument(format!("column {e} has {} values for {} dates", col.len(), dates.len()));
            }
            if let Some(v) = col.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return domain(format!("intensity for {e} must be finite and > 0, got {v}"));
            }
        }
        Ok(Self {
            dates,
            entities,
            columns,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entities.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.columns[k][i]
    }

    /// Rows `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return argument(format!("window {start}..{} exceeds panel of {} dates", start + len, self.len()));
        }
        Ok(Self {
            dates: self.dates[start..start + len].to_vec(),
            entities: self.entities.clone(),
            columns: self.columns.iter().map(|c| c[start..start + len].to_vec()).collect(),
        })
    }

    /// Applies `f` to every intensity; the result must stay positive.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(
            self.dates.clone(),
            self.entities.clone(),
            self.columns.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect(),
        )
    }
}

/// Series on which pairwise taus are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauBasis {
    /// Intensity levels; rank-equivalent to survival probabilities.
    #[default]
    Levels,
    /// First differences of intensities.
    Differences,
}

impl std::str::FromStr for TauBasis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levels" => Ok(Self::Levels),
            "differences" => Ok(Self::Differences),
            _ => argument(format!("unknown tau basis '{s}' (expected levels or differences)")),
        }
    }
}

fn series(panel: &IntensityPanel, k: usize, basis: TauBasis) -> Vec<f64> {
    let c = panel.column(k);
    match basis {
        TauBasis::Levels => c.to_vec(),
        TauBasis::Differences => c.windows(2).map(|w| w[1] - w[0]).collect(),
    }
}

/// Pairwise empirical taus of intensity levels.
pub fn pairwise_tau_matrix(panel: &IntensityPanel) -> Result<TauMatrix> {
    pairwise_tau_matrix_with(panel, TauBasis::Levels)
}

pub fn pairwise_tau_matrix_with(panel: &IntensityPanel, basis: TauBasis) -> Result<TauMatrix> {
    let d = panel.dim();
    if d < 2 {
        return argument("tau matrix needs d >= 2 entities");
    }
    if panel.len() < 2 {
        return argument("tau matrix needs at least 2 dates");
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|k| series(panel, k, basis)).collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let taus: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            empirical_kendall_tau(&cols[i], &cols[j]).map_err(|e| match e {
                Error::UndefinedTau { reason, .. } => Error::UndefinedTau {
                    first: panel.entities()[i].clone(),
                    second: panel.entities()[j].clone(),
                    reason,
                },
                other => other,
            })
        })
        .collect();
    let mut it = taus.into_iter();
    TauMatrix::from_upper(panel.entities().to_vec(), |_, _| it.next().expect("one tau per pair").map(Some))
}
