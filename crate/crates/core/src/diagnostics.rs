//! Implied systemic intensity and the straight-line specification check.
//!
//! Under the model `mu_k^theta = lambda0 + lambda_k` and
//! `alpha_k = lambda0 / mu_k^theta`, so `lambda0 = sum mu_k^theta / sum 1/alpha_k`
//! at every date. The rank correlation between that series and each
//! `mu_k` should sit on the line `tau_systemic(alpha, theta)`.

use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::copula::{tau_systemic, GumbelGenerator, ModelParams};
use crate::error::{argument, Error, Result};
use crate::estimator::{empirical_kendall_tau, IntensityPanel};

/// Sensitivities below this are left out of the extraction denominator.
pub const ALPHA_FLOOR: f64 = 1e-6;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemicSeries {
    pub dates: Vec<NaiveDate>,
    pub lambda0_hat: Vec<f64>,
    /// Entities dropped by the alpha floor.
    pub excluded: Vec<String>,
    pub warnings: Vec<String>,
}

impl SystemicSeries {
    /// CSV `date,lambda0_hat`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "lambda0_hat"])?;
        for (d, v) in self.dates.iter().zip(&self.lambda0_hat) {
            w.write_record([d.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_labels(panel: &IntensityPanel, params: &ModelParams) -> Result<()> {
    if panel.entities() != params.labels() {
        return argument(format!(
            "panel entities [{}] do not match parameter labels [{}]",
            panel.entities().join(","),
            params.labels().join(",")
        ));
    }
    Ok(())
}

/// Per-date `sum mu_k^theta / sum 1/alpha_k` over entities with `alpha_k >= ALPHA_FLOOR`.
pub fn extract_systemic_intensity(panel: &IntensityPanel, params: &ModelParams) -> Result<SystemicSeries> {
    check_labels(panel, params)?;
    let theta = params.theta();
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (k, &a) in params.alphas().iter().enumerate() {
        if a >= ALPHA_FLOOR {
            kept.push(k);
        } else {
            excluded.push(params.labels()[k].clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::Extraction(format!(
            "every alpha is below the floor {ALPHA_FLOOR}; the systemic intensity is not identified"
        )));
    }
    let warnings = if excluded.is_empty() {
        Vec::new()
    } else {
        vec![format!(
            "excluded from the extraction (alpha < {ALPHA_FLOOR}): {}",
            excluded.join(", ")
        )]
    };
    let denom: f64 = kept.iter().map(|&k| 1.0 / params.alphas()[k]).sum();
    let lambda0_hat = (0..panel.len())
        .map(|i| kept.iter().map(|&k| panel.value(i, k).powf(theta)).sum::<f64>() / denom)
        .collect();
    Ok(SystemicSeries {
        dates: panel.dates().to_vec(),
        lambda0_hat,
        excluded,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecCheckRecord {
    pub label: String,
    pub alpha: f64,
    pub tau_hat: f64,
    pub tau_line: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecCheckReport {
    pub theta: f64,
    pub intercept: f64,
    pub slope: f64,
    pub records: Vec<SpecCheckRecord>,
    pub rmse: f64,
    pub threshold: f64,
    pub pass: bool,
    pub warnings: Vec<String>,
}

impl SpecCheckReport {
    /// Root mean square of the record residuals.
    pub fn recompute_rmse(records: &[SpecCheckRecord]) -> f64 {
        (records.iter().map(|r| r.residual * r.residual).sum::<f64>() / records.len() as f64).sqrt()
    }
}

/// Compares `tau(lambda0_hat, mu_k)` with `tau_systemic(alpha_k, theta)` for each entity.
///
/// Passes when the RMSE is at most `threshold`.
pub fn systemic_tau_profile(
    panel: &IntensityPanel,
    params: &ModelParams,
    threshold: f64,
) -> Result<(SystemicSeries, SpecCheckReport)> {
    if panel.dim() < 2 {
        return argument("the line check needs d >= 2 entities");
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return argument(format!("threshold must be finite and >= 0, got {threshold}"));
    }
    let series = extract_systemic_intensity(panel, params)?;
    let gen = GumbelGenerator::new(params.theta())?;
    let mut warnings = series.warnings.clone();
    let mut records = Vec::with_capacity(panel.dim());
    for (k, label) in params.labels().iter().enumerate() {
        let alpha = params.alphas()[k];
        match empirical_kendall_tau(&series.lambda0_hat, panel.column(k)) {
            Ok(tau_hat) => {
                let tau_line = tau_systemic(alpha, &gen)?;
                records.push(SpecCheckRecord {
                    label: label.clone(),
                    alpha,
                    tau_hat,
                    tau_line,
                    residual: tau_hat - tau_line,
                });
            }
            Err(Error::UndefinedTau { reason, .. }) => {
                warnings.push(format!("{label} excluded: systemic tau undefined ({reason})"));
            }
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() {
        return Err(Error::Extraction("no entity has a defined systemic tau".into()));
    }
    let rmse = SpecCheckReport::recompute_rmse(&records);
    let theta = params.theta();
    let report = SpecCheckReport {
        theta,
        intercept: (theta - 1.0) / theta,
        slope: 1.0 / theta,
        records,
        rmse,
        threshold,
        pass: rmse <= threshold,
        warnings,
    };
    Ok((series, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScatterFormat {
    Csv,
    Svg,
}

impl ScatterFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Svg => "svg",
        }
    }
}

impl std::str::FromStr for ScatterFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            _ => argument(format!("unknown scatter format '{s}' (expected csv or svg)")),
        }
    }
}

pub fn emit_scatter(report: &SpecCheckReport, format: ScatterFormat) -> Result<String> {
    if report.records.is_empty() {
        return argument("cannot draw an empty report");
    }
    match format {
        ScatterFormat::Csv => scatter_csv(report),
        ScatterFormat::Svg => Ok(scatter_svg(report)),
    }
}

fn scatter_csv(report: &SpecCheckReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "alpha", "tau_hat", "tau_line", "residual"])?;
    for r in &report.records {
        w.write_record([
            r.label.clone(),
            r.alpha.to_string(),
            r.tau_hat.to_string(),
            r.tau_line.to_string(),
            r.residual.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads back the CSV form of [`emit_scatter`].
pub fn parse_scatter_csv(text: &str) -> Result<Vec<SpecCheckRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ["label", "alpha", "tau_hat", "tau_line", "residual"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected scatter header {}", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j].trim().parse().map_err(|_| Error::Parse {
                line: i + 2,
                message: format!("invalid number '{}'", &rec[j]),
            })
        };
        out.push(SpecCheckRecord {
            label: rec[0].to_string(),
            alpha: num(1)?,
            tau_hat: num(2)?,
            tau_line: num(3)?,
            residual: num(4)?,
        });
    }
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn scatter_svg(report: &SpecCheckReport) -> String {
    const W: f64 = 520.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let y_min = report
        .records
        .iter()
        .map(|r| r.tau_hat)
        .fold(report.intercept.min(0.0), f64::min)
        .max(-1.0);
    let px = |a: f64| M + a * (W - 2.0 * M);
    let py = |t: f64| H - M - (t - y_min) / (1.0 - y_min) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y0} H{x1} M{x0} {y0} V{y1}" stroke="black" fill="none"/>"#,
        x0 = px(0.0),
        y0 = py(y_min),
        x1 = px(1.0),
        y1 = py(1.0)
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{tick}</text>"#,
            px(tick),
            py(y_min) + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{y_min:.2}</text><text x="{}" y="{}" text-anchor="end">1</text>"#,
        M - 6.0,
        py(y_min),
        M - 6.0,
        py(1.0)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">alpha</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">tau(systemic, default)</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line class="model-line" x1="{}" y1="{}" x2="{}" y2="{}" stroke="steelblue" stroke-width="1.5"/>"#,
        px(0.0),
        py(report.intercept),
        px(1.0),
        py(report.intercept + report.slope)
    );
    for r in &report.records {
        let (cx, cy) = (px(r.alpha), py(r.tau_hat.max(y_min)));
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{cx}" cy="{cy}" r="4" fill="firebrick"><title>{}</title></circle><text x="{}" y="{}">{}</text>"#,
            xml_escape(&r.label),
            cx + 6.0,
            cy - 6.0,
            xml_escape(&r.label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="end">theta = {:.4}, RMSE = {:.4}</text>"#,
        W - M,
        report.theta,
        report.rmse
    );
    s.push_str("</svg>\n");
    s
}
