use std::path::Path;

use contagion_core::copula::{default_labels, ModelParams, ShockIntensities};
use contagion_core::data_io::{
    ingest, read_intensity_csv, read_spread_csv, write_intensity_csv, write_tau_matrix_csv, AffineAdjustment,
    AlignmentPolicy, IngestConfig,
};
use contagion_core::diagnostics::{emit_scatter, systemic_tau_profile};
use contagion_core::estimator::{
    fit, fit_theta_fixed_alphas, pairwise_tau_matrix_with, rolling_fit_with, write_rolling_csv, FitConfig,
    IntensityPanel,
};
use contagion_core::hac::{hac_kendall_tau_report, HacSpec, CONSISTENCY_TOLERANCE};
use contagion_core::sampler::{simulate_default_times, synthetic_panel, SimConfig};
use contagion_core::Error;
use serde::Serialize;

use crate::manifest::{now, read_input, InputDigest, OutDir, RunManifest};
use crate::{
    Align, CliError, Command, DiagnoseArgs, EstimateArgs, FitArgs, HacTauArgs, IngestArgs, RollingArgs, SimulateArgs,
};

pub fn dispatch(command: Command, argv: Vec<String>) -> Result<(), CliError> {
    let started_at = now();
    let manifest = |name: &str, flags: &dyn erased::Flags, inputs: Vec<InputDigest>, seed: Option<u64>| RunManifest {
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        args: argv.clone(),
        flags: flags.to_json(),
        inputs,
        seed,
        outputs: Vec::new(),
        started_at: started_at.clone(),
        finished_at: String::new(),
    };
    match command {
        Command::Ingest(a) => {
            let (out, inputs) = cmd_ingest(&a)?;
            out.finish(manifest("ingest", &a, inputs, None))
        }
        Command::Estimate(a) => {
            let (out, inputs) = cmd_estimate(&a)?;
            out.finish(manifest("estimate", &a, inputs, Some(a.fit.seed)))
        }
        Command::Diagnose(a) => {
            let (out, inputs, verdict) = cmd_diagnose(&a)?;
            out.finish(manifest("diagnose", &a, inputs, None))?;
            verdict
        }
        Command::Rolling(a) => {
            let (out, inputs) = cmd_rolling(&a)?;
            out.finish(manifest("rolling", &a, inputs, Some(a.fit.seed)))
        }
        Command::Simulate(a) => {
            let out = cmd_simulate(&a)?;
            out.finish(manifest("simulate", &a, Vec::new(), Some(a.seed)))
        }
        Command::HacTau(a) => {
            let (out, verdict) = cmd_hac_tau(&a)?;
            if let Some(out) = out {
                out.finish(manifest("hac-tau", &a, Vec::new(), None))?;
            }
            verdict
        }
    }
}

mod erased {
    pub trait Flags {
        fn to_json(&self) -> serde_json::Value;
    }

    impl<T: serde::Serialize> Flags for T {
        fn to_json(&self) -> serde_json::Value {
            serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(Error::from)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> contagion_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_panel(path: &Path, inputs: &mut Vec<InputDigest>) -> Result<IntensityPanel, CliError> {
    let bytes = read_input(path, inputs)?;
    Ok(read_intensity_csv(bytes.as_slice())?)
}

fn read_params(path: &Path, inputs: &mut Vec<InputDigest>) -> Result<ModelParams, CliError> {
    let bytes = read_input(path, inputs)?;
    Ok(serde_json::from_slice(&bytes).map_err(Error::from)?)
}

fn fit_config(a: &FitArgs) -> Result<FitConfig, CliError> {
    let cfg = FitConfig {
        restarts: a.restarts,
        theta_max: a.theta_max,
        seed: a.seed,
        distance: a.distance,
        ..FitConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn cmd_ingest(a: &IngestArgs) -> Result<(OutDir, Vec<InputDigest>), CliError> {
    let mut inputs = Vec::new();
    let bytes = read_input(&a.input, &mut inputs)?;
    let spreads = read_spread_csv(bytes.as_slice())?;
    let cfg = IngestConfig {
        recovery: a.recovery,
        alignment: match a.align {
            Align::Intersection => AlignmentPolicy::Intersection,
            Align::ForwardFill => AlignmentPolicy::ForwardFill { max_gap: a.max_gap },
        },
        adjustment: AffineAdjustment {
            scale: a.scale,
            shift: a.shift,
        },
    };
    let (panel, report) = ingest(&spreads, &cfg)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("intensities.csv", &csv_bytes(|b| write_intensity_csv(&panel, b))?)?;
    out.write("ingest_report.json", &json_bytes(&report)?)?;
    print_json(&report)?;
    eprintln!(
        "ingested {} rows: {} entities x {} dates ({} dates dropped)",
        report.rows_read,
        panel.dim(),
        panel.len(),
        report.dropped_dates.len()
    );
    Ok((out, inputs))
}

fn cmd_estimate(a: &EstimateArgs) -> Result<(OutDir, Vec<InputDigest>), CliError> {
    let mut inputs = Vec::new();
    let panel = read_panel(&a.input, &mut inputs)?;
    let fixed = a.fix_alphas.as_deref().map(|p| read_params(p, &mut inputs)).transpose()?;
    let cfg = fit_config(&a.fit)?;
    let target = pairwise_tau_matrix_with(&panel, a.fit.basis)?;
    let result = match &fixed {
        None => fit(&target, &cfg)?,
        Some(p) => {
            if p.labels() != panel.entities() {
                return Err(Error::Argument(format!(
                    "fixed-alpha labels [{}] do not match panel entities [{}]",
                    p.labels().join(","),
                    panel.entities().join(",")
                ))
                .into());
            }
            fit_theta_fixed_alphas(&target, p.alphas(), &cfg)?
        }
    };
    let mut out = OutDir::create(&a.out)?;
    out.write("fit.json", &json_bytes(&result)?)?;
    out.write("tau_matrix.csv", &csv_bytes(|b| write_tau_matrix_csv(&target, b))?)?;
    print_json(&result)?;
    eprintln!("theta = {:.6}, objective = {:.3e}", result.params.theta(), result.objective);
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok((out, inputs))
}

type Verdict = Result<(), CliError>;

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<(OutDir, Vec<InputDigest>, Verdict), CliError> {
    let mut inputs = Vec::new();
    let panel = read_panel(&a.input, &mut inputs)?;
    let params = read_params(&a.params, &mut inputs)?;
    let (series, report) = systemic_tau_profile(&panel, &params, a.threshold)?;
    let scatter = emit_scatter(&report, a.format)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("systemic_intensity.csv", &csv_bytes(|b| series.write_csv(b))?)?;
    out.write(&format!("scatter.{}", a.format.extension()), scatter.as_bytes())?;
    out.write("spec_check.json", &json_bytes(&report)?)?;
    print_json(&report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "RMSE {:.6} against threshold {}: {}",
        report.rmse,
        report.threshold,
        if report.pass { "pass" } else { "fail" }
    );
    let verdict = if report.pass {
        Ok(())
    } else {
        Err(CliError::Threshold {
            rmse: report.rmse,
            threshold: report.threshold,
        })
    };
    Ok((out, inputs, verdict))
}

fn cmd_rolling(a: &RollingArgs) -> Result<(OutDir, Vec<InputDigest>), CliError> {
    let mut inputs = Vec::new();
    let panel = read_panel(&a.input, &mut inputs)?;
    let cfg = fit_config(&a.fit)?;
    let points = rolling_fit_with(&panel, a.window, a.step, &cfg, a.mode, a.fit.basis)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("rolling.csv", &csv_bytes(|b| write_rolling_csv(&points, panel.entities(), b))?)?;
    eprintln!("{} windows of {} dates", points.len(), a.window);
    Ok((out, inputs))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<OutDir, CliError> {
    if a.lambdas.len() != a.d {
        return Err(Error::Argument(format!("--d is {} but {} lambdas were given", a.d, a.lambdas.len())).into());
    }
    if a.lambda0 == 0.0 && a.lambdas.iter().all(|&l| l == 0.0) {
        return Err(Error::DegenerateModel("all shock rates are zero".into()).into());
    }
    let shocks = ShockIntensities::new(a.lambda0, a.lambdas.clone())?;
    let cfg = SimConfig::new(a.n, a.seed, shocks, a.theta)?;
    let sample = simulate_default_times(&cfg)?;
    let labels = default_labels(a.d);
    let panel = if a.panel {
        Some(synthetic_panel(&sample, &cfg, labels.clone(), a.start_date)?)
    } else {
        None
    };
    let mut out = OutDir::create(&a.out)?;
    out.write("default_times.csv", &csv_bytes(|b| sample.write_csv(&labels, b))?)?;
    if let Some(p) = &panel {
        out.write("intensities.csv", &csv_bytes(|b| write_intensity_csv(p, b))?)?;
    }
    eprintln!("simulated {} replications of {} entities", a.n, a.d);
    Ok(out)
}

fn cmd_hac_tau(a: &HacTauArgs) -> Result<(Option<OutDir>, Verdict), CliError> {
    let lambdas: [f64; 3] = a
        .lambdas
        .as_slice()
        .try_into()
        .map_err(|_| Error::Argument(format!("--lambdas needs exactly 3 rates, got {}", a.lambdas.len())))?;
    if !(a.tolerance > 0.0 && a.tolerance.is_finite()) {
        return Err(Error::Argument(format!("--tolerance must be positive, got {}", a.tolerance)).into());
    }
    let spec = HacSpec::new(a.theta, a.phi, lambdas, a.position)?;
    let report = hac_kendall_tau_report(&spec, a.tolerance)?;
    print_json(&report)?;
    let out = match &a.out {
        Some(dir) => {
            let mut out = OutDir::create(dir)?;
            out.write("hac_tau.json", &json_bytes(&report)?)?;
            Some(out)
        }
        None => None,
    };
    let verdict = if report.difference.abs() > CONSISTENCY_TOLERANCE {
        Err(Error::Consistency {
            first: report.tau,
            second: report.tau_kendall_integral,
            difference: report.difference,
        }
        .into())
    } else {
        Ok(())
    };
    Ok((out, verdict))
}
