//! CDS spread ingestion and the file formats of the toolkit.
//!
//! Spreads are turned into flat intensities with the credit-triangle rule
//! `mu = s / (1 - R)`, aligned on a common date grid and optionally passed
//! through an affine map `a * mu + b`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::copula::TauMatrix;
use crate::error::{argument, domain, Error, Result};
use crate::estimator::IntensityPanel;

pub const DEFAULT_RECOVERY: f64 = 0.4;
pub const MIN_DATES: usize = 30;
pub const MIN_ENTITIES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadRecord {
    pub date: NaiveDate,
    pub entity: String,
    pub spread_bps: f64,
}

/// Validated long-format spread quotes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpreadPanel {
    records: Vec<SpreadRecord>,
}

impl SpreadPanel {
    pub fn new(records: Vec<SpreadRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !(r.spread_bps > 0.0 && r.spread_bps.is_finite()) {
                return domain(format!("spread for {} on {} must be finite and > 0, got {}", r.entity, r.date, r.spread_bps));
            }
            if r.entity.is_empty() {
                return argument(format!("empty entity label on {}", r.date));
            }
            if !seen.insert((r.date, r.entity.as_str())) {
                return argument(format!("duplicate quote for {} on {}", r.entity, r.date));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SpreadRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn parse_date(s: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
        line,
        message: format!("invalid date '{s}': {e}"),
    })
}

fn parse_number(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} '{s}'"),
    })
}

fn expect_header(r: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<bool> {
    if !r.has_headers() {
        return Ok(false);
    }
    let header = r.headers()?;
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Ok(false);
    }
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header '{}', found '{}'", expected.join(","), got.join(",")),
        });
    }
    Ok(true)
}

/// Reads `date,entity,spread_bps`. An empty input yields an empty panel;
/// any malformed row fails the whole read.
pub fn read_spread_csv<R: Read>(input: R) -> Result<SpreadPanel> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    if !expect_header(&mut r, &["date", "entity", "spread_bps"])? {
        return Ok(SpreadPanel::default());
    }
    let mut records = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        records.push(SpreadRecord {
            date: parse_date(&row[0], line)?,
            entity: row[1].trim().to_string(),
            spread_bps: parse_number(&row[2], line, "spread")?,
        });
    }
    SpreadPanel::new(records)
}

/// `(spread_bps / 1e4) / (1 - R)` per annum.
pub fn spread_to_intensity(spread_bps: f64, recovery: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&recovery) {
        return domain(format!("recovery rate must lie in [0, 1), got {recovery}"));
    }
    if !(spread_bps > 0.0 && spread_bps.is_finite()) {
        return domain(format!("spread must be finite and > 0, got {spread_bps}"));
    }
    Ok(spread_bps / 1e4 / (1.0 - recovery))
}

/// `exp(-mu * horizon)`.
pub fn survival_from_intensity(mu: f64, horizon: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("intensity must be finite and > 0, got {mu}"));
    }
    if !(horizon >= 0.0) {
        return domain(format!("horizon must be >= 0, got {horizon}"));
    }
    Ok((-mu * horizon).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum AlignmentPolicy {
    /// Keep only dates on which every entity is quoted.
    #[default]
    Intersection,
    /// Carry the last quote forward over at most `max_gap` consecutive missing dates.
    ForwardFill { max_gap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineAdjustment {
    pub scale: f64,
    pub shift: f64,
}

impl Default for AffineAdjustment {
    fn default() -> Self {
        Self { scale: 1.0, shift: 0.0 }
    }
}

impl AffineAdjustment {
    pub fn apply(&self, mu: f64) -> f64 {
        self.scale * mu + self.shift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub recovery: f64,
    pub alignment: AlignmentPolicy,
    pub adjustment: AffineAdjustment,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            recovery: DEFAULT_RECOVERY,
            alignment: AlignmentPolicy::default(),
            adjustment: AffineAdjustment::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityReport {
    pub entity: String,
    pub rows_read: usize,
    /// Quotes discarded because their date did not survive alignment.
    pub rows_dropped: usize,
    pub cells_filled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub dates_seen: usize,
    pub dates_kept: usize,
    pub dropped_dates: Vec<NaiveDate>,
    pub entities: Vec<EntityReport>,
    pub config: IngestConfig,
}

/// Converts, aligns and adjusts a spread panel. Entities keep their order of
/// first appearance; dates are sorted.
pub fn ingest(panel: &SpreadPanel, cfg: &IngestConfig) -> Result<(IntensityPanel, IngestReport)> {
    if !(0.0..1.0).contains(&cfg.recovery) {
        return domain(format!("recovery rate must lie in [0, 1), got {}", cfg.recovery));
    }
    let adj = cfg.adjustment;
    if !(adj.scale.is_finite() && adj.shift.is_finite()) {
        return domain("affine adjustment coefficients must be finite");
    }

    let mut entities: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in panel.records() {
        if !index.contains_key(r.entity.as_str()) {
            index.insert(&r.entity, entities.len());
            entities.push(r.entity.clone());
        }
    }
    let all_dates: Vec<NaiveDate> = panel.records().iter().map(|r| r.date).collect::<BTreeSet<_>>().into_iter().collect();
    let date_pos: BTreeMap<NaiveDate, usize> = all_dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();

    let d = entities.len();
    let mut grid: Vec<Vec<Option<f64>>> = vec![vec![None; all_dates.len()]; d];
    let mut reports: Vec<EntityReport> = entities
        .iter()
        .map(|e| EntityReport {
            entity: e.clone(),
            rows_read: 0,
            rows_dropped: 0,
            cells_filled: 0,
        })
        .collect();
    for r in panel.records() {
        let k = index[r.entity.as_str()];
        let mu = adj.apply(spread_to_intensity(r.spread_bps, cfg.recovery)?);
        if !(mu > 0.0 && mu.is_finite()) {
            return domain(format!("adjusted intensity for {} on {} is {mu}; it must stay > 0", r.entity, r.date));
        }
        grid[k][date_pos[&r.date]] = Some(mu);
        reports[k].rows_read += 1;
    }
    let observed: Vec<Vec<bool>> = grid.iter().map(|c| c.iter().map(Option::is_some).collect()).collect();

    if let AlignmentPolicy::ForwardFill { max_gap } = cfg.alignment {
        for (k, col) in grid.iter_mut().enumerate() {
            let mut last: Option<f64> = None;
            let mut gap = 0;
            for cell in col.iter_mut() {
                match *cell {
                    Some(v) => {
                        last = Some(v);
                        gap = 0;
                    }
                    None => {
                        gap += 1;
                        if let (Some(v), true) = (last, gap <= max_gap) {
                            *cell = Some(v);
                            reports[k].cells_filled += 1;
                        }
                    }
                }
            }
        }
    }

    let keep: Vec<bool> = (0..all_dates.len()).map(|i| grid.iter().all(|c| c[i].is_some())).collect();
    let dropped_dates: Vec<NaiveDate> = all_dates.iter().zip(&keep).filter(|(_, k)| !**k).map(|(d, _)| *d).collect();
    for (k, rep) in reports.iter_mut().enumerate() {
        rep.rows_dropped = (0..all_dates.len()).filter(|&i| !keep[i] && observed[k][i]).count();
        rep.cells_filled -= (0..all_dates.len()).filter(|&i| !keep[i] && !observed[k][i] && grid[k][i].is_some()).count();
    }
    let dates: Vec<NaiveDate> = all_dates.iter().zip(&keep).filter(|(_, k)| **k).map(|(d, _)| *d).collect();
    if d < MIN_ENTITIES || dates.len() < MIN_DATES {
        return Err(Error::InsufficientData {
            entities: d,
            dates: dates.len(),
            min_dates: MIN_DATES,
        });
    }
    let columns = grid
        .into_iter()
        .map(|c| c.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(v, _)| v.expect("kept cell")).collect())
        .collect();
    let report = IngestReport {
        rows_read: panel.len(),
        dates_seen: all_dates.len(),
        dates_kept: dates.len(),
        dropped_dates,
        entities: reports,
        config: cfg.clone(),
    };
    Ok((IntensityPanel::new(dates, entities, columns)?, report))
}

/// Long-format `date,entity,intensity`, date-major.
pub fn write_intensity_csv<W: Write>(panel: &IntensityPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "entity", "intensity"])?;
    for (i, date) in panel.dates().iter().enumerate() {
        let ds = date.to_string();
        for (k, e) in panel.entities().iter().enumerate() {
            w.write_record([ds.as_str(), e.as_str(), panel.value(i, k).to_string().as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `date,entity,intensity`; the panel must be rectangular.
pub fn read_intensity_csv<R: Read>(input: R) -> Result<IntensityPanel> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    if !expect_header(&mut r, &["date", "entity", "intensity"])? {
        return Err(Error::InsufficientData {
            entities: 0,
            dates: 0,
            min_dates: MIN_DATES,
        });
    }
    let mut entities: Vec<String> = Vec::new();
    let mut cells: BTreeMap<NaiveDate, HashMap<String, f64>> = BTreeMap::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let date = parse_date(&row[0], line)?;
        let entity = row[1].trim().to_string();
        let v = parse_number(&row[2], line, "intensity")?;
        if !entities.contains(&entity) {
            entities.push(entity.clone());
        }
        if cells.entry(date).or_default().insert(entity.clone(), v).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate intensity for {entity} on {date}"),
            });
        }
    }
    let dates: Vec<NaiveDate> = cells.keys().copied().collect();
    let mut columns = vec![Vec::with_capacity(dates.len()); entities.len()];
    for (date, row) in &cells {
        for (k, e) in entities.iter().enumerate() {
            match row.get(e) {
                Some(v) => columns[k].push(*v),
                None => return argument(format!("intensity panel is missing {e} on {date}")),
            }
        }
    }
    IntensityPanel::new(dates, entities, columns)
}

/// Square CSV with an `entity` column; undefined cells are left empty.
pub fn write_tau_matrix_csv<W: Write>(m: &TauMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["entity".to_string()];
    header.extend(m.labels().iter().cloned());
    w.write_record(&header)?;
    for i in 0..m.dim() {
        let mut row = vec![m.labels()[i].clone()];
        row.extend((0..m.dim()).map(|j| m.get(i, j).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
