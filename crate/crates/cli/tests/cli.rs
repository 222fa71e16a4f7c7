use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_contagion"));
    c.env_remove("CONTAGION_SEED");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

// alphas (0.2, 0.4, 0.5, 0.7, 0.9) with lambda0 = 1
const LAMBDAS5: &str = "4,1.5,1,0.42857142857142855,0.11111111111111112";

fn simulate(dir: &Path, out: &str, lambdas: &str, theta: &str, n: &str, seed: &str) {
    let d = lambdas.split(',').count().to_string();
    let o = run(
        dir,
        &[
            "simulate", "--d", &d, "--theta", theta, "--lambda0", "1", "--lambdas", lambdas, "--n", n, "--seed", seed,
            "--out", out, "--panel",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn spread_csv(m: usize, entities: &[&str]) -> String {
    let mut s = String::from("date,entity,spread_bps\n");
    for i in 0..m {
        let date = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64);
        for (k, e) in entities.iter().enumerate() {
            s.push_str(&format!("{date},{e},{}\n", 40 + 10 * k + (i * 7 + k * 3) % 13));
        }
    }
    s
}

#[test]
fn ingest_contract() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("spreads.csv"), spread_csv(40, &["FR", "DE", "IT"])).unwrap();
    let o = run(t.path(), &["ingest", "--input", "spreads.csv", "--out", "ing"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut files: Vec<String> = fs::read_dir(t.path().join("ing"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["ingest_report.json", "intensities.csv", "manifest.json"]);
    let text = fs::read_to_string(t.path().join("ing/intensities.csv")).unwrap();
    assert!(text.starts_with("date,entity,intensity\n2020-01-01,FR,"));

    let o = run(t.path(), &["ingest", "--input", "spreads.csv", "--out", "r1", "--recovery", "1.0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("domain error"));

    fs::write(t.path().join("empty.csv"), "").unwrap();
    let o = run(t.path(), &["ingest", "--input", "empty.csv", "--out", "e"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("insufficient aligned data"));

    let o = run(t.path(), &["ingest", "--input", "missing.csv", "--out", "m"]);
    assert_eq!(code(&o), 1);
    assert!(!t.path().join("m").exists());
}

#[test]
fn ingest_affine_and_fill() {
    let t = TempDir::new().unwrap();
    let mut text = spread_csv(40, &["A", "B"]);
    text = text.replace("2020-01-05,B,", "2020-01-05,X,");
    fs::write(t.path().join("s.csv"), text.replace("\n2020-01-05,X,", "\n#")).unwrap();
    // a row that cannot be parsed fails the run
    let o = run(t.path(), &["ingest", "--input", "s.csv", "--out", "o"]);
    assert_eq!(code(&o), 2);

    let mut lines: Vec<String> = spread_csv(40, &["A", "B"]).lines().map(String::from).collect();
    lines.retain(|l| !l.starts_with("2020-01-05,B,"));
    fs::write(t.path().join("s.csv"), lines.join("\n") + "\n").unwrap();
    let o = run(t.path(), &["ingest", "--input", "s.csv", "--out", "o1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(t.path().join("o1/ingest_report.json"))["dates_kept"], 39);
    let o = run(
        t.path(),
        &["ingest", "--input", "s.csv", "--out", "o2", "--align", "forward-fill", "--max-gap", "1", "--scale", "0.6"],
    );
    assert_eq!(code(&o), 0);
    let rep = json(t.path().join("o2/ingest_report.json"));
    assert_eq!(rep["dates_kept"], 40);
    assert_eq!(rep["entities"][1]["cells_filled"], 1);
}

#[test]
fn estimate_recovers_simulated_parameters() {
    let t = TempDir::new().unwrap();
    simulate(t.path(), "sim", LAMBDAS5, "3", "2000", "11");
    let o = run(t.path(), &["estimate", "--input", "sim/intensities.csv", "--out", "est", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit = json(t.path().join("est/fit.json"));
    let stdout: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout, fit);
    assert!((fit["theta"].as_f64().unwrap() - 3.0).abs() <= 0.3);
    for (a, truth) in fit["alphas"].as_array().unwrap().iter().zip([0.2, 0.4, 0.5, 0.7, 0.9]) {
        assert!((a.as_f64().unwrap() - truth).abs() <= 0.1, "{a} vs {truth}");
    }
    assert_eq!(fit["restarts"].as_array().unwrap().len(), 50);
    let taus = fs::read_to_string(t.path().join("est/tau_matrix.csv")).unwrap();
    assert!(taus.starts_with("entity,E1,E2,E3,E4,E5\n"));

    let o = run(t.path(), &["estimate", "--input", "sim/intensities.csv", "--out", "est2", "--seed", "5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(t.path().join("est/fit.json")).unwrap(), fs::read(t.path().join("est2/fit.json")).unwrap());

    // fixed alphas taken from the previous fit
    let o = run(
        t.path(),
        &["estimate", "--input", "sim/intensities.csv", "--out", "fx", "--fix-alphas", "est/fit.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fx = json(t.path().join("fx/fit.json"));
    assert_eq!(fx["alphas"], fit["alphas"]);
    assert_eq!(fx["fixed_alphas"], true);
}

#[test]
fn estimate_error_paths_and_warnings() {
    let t = TempDir::new().unwrap();
    simulate(t.path(), "two", "1,0.5", "2", "200", "3");
    let o = run(t.path(), &["estimate", "--input", "two/intensities.csv", "--out", "e2", "--restarts", "4"]);
    assert_eq!(code(&o), 0);
    let fit = json(t.path().join("e2/fit.json"));
    assert!(fit["warnings"][0].as_str().unwrap().contains("identifiability"));
    assert!(stderr(&o).contains("identifiability"));

    simulate(t.path(), "three", "1,0.5,2", "2", "200", "3");
    fs::write(t.path().join("bad.json"), r#"{"labels":["X","Y"],"alphas":[0.5,0.5],"theta":2}"#).unwrap();
    let o = run(
        t.path(),
        &["estimate", "--input", "three/intensities.csv", "--out", "e3", "--fix-alphas", "bad.json"],
    );
    assert_eq!(code(&o), 2);
    let o = run(t.path(), &["estimate", "--input", "nowhere.csv", "--out", "e4"]);
    assert_eq!(code(&o), 1);
    let o = run(t.path(), &["estimate", "--input", "three/intensities.csv", "--out", "e5", "--distance", "cubic"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn seed_from_environment_and_flag_precedence() {
    let t = TempDir::new().unwrap();
    let args = ["simulate", "--d", "2", "--theta", "2", "--lambda0", "1", "--lambdas", "1,1", "--n", "50"];
    let o = bin().current_dir(t.path()).env("CONTAGION_SEED", "42").args(args).args(["--out", "a"]).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(t.path().join("a/manifest.json"))["seed"], 42);
    let o = bin()
        .current_dir(t.path())
        .env("CONTAGION_SEED", "42")
        .args(args)
        .args(["--out", "b", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(t.path().join("b/manifest.json"))["seed"], 7);
}

#[test]
fn simulate_contract() {
    let t = TempDir::new().unwrap();
    simulate(t.path(), "a", "1,2,3", "2", "300", "9");
    simulate(t.path(), "b", "1,2,3", "2", "300", "9");
    for f in ["default_times.csv", "intensities.csv"] {
        assert_eq!(fs::read(t.path().join("a").join(f)).unwrap(), fs::read(t.path().join("b").join(f)).unwrap());
    }
    let m = json(t.path().join("a/manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["outputs"], serde_json::json!(["default_times.csv", "intensities.csv"]));
    let base = ["simulate", "--d", "2", "--theta", "2", "--lambdas"];
    let o = run(t.path(), &[&base[..], &["1,1", "--lambda0", "1", "--n", "0", "--out", "z"]].concat());
    assert_eq!(code(&o), 2);
    let o = run(t.path(), &[&base[..], &["0,0", "--lambda0", "0", "--n", "10", "--out", "z"]].concat());
    assert_eq!(code(&o), 2);
    let o = run(t.path(), &[&base[..], &["1,1,1", "--lambda0", "1", "--n", "10", "--out", "z"]].concat());
    assert_eq!(code(&o), 2);
}

fn two_block_panel(dir: &Path) {
    simulate(dir, "blk1", "1,0.6666666666666667,0.4285714285714286", "4", "500", "21");
    simulate(dir, "blk2", "1,0.6666666666666667,0.4285714285714286", "4", "500", "22");
    let a = fs::read_to_string(dir.join("blk1/intensities.csv")).unwrap();
    let b = fs::read_to_string(dir.join("blk2/intensities.csv")).unwrap();
    let mut out = String::from("date,entity,intensity\n");
    for line in a.lines().skip(1) {
        out.push_str(line);
        out.push('\n');
    }
    for line in b.lines().skip(1) {
        let line = line.replace(",E1,", ",E4,").replace(",E2,", ",E5,").replace(",E3,", ",E6,");
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(dir.join("blocks.csv"), out).unwrap();
}

#[test]
fn diagnose_contract() {
    let t = TempDir::new().unwrap();
    simulate(t.path(), "good", "1,0.6666666666666667,0.4285714285714286,0.25,0.11111111111111112", "3", "500", "31");
    let o = run(t.path(), &["estimate", "--input", "good/intensities.csv", "--out", "gfit"]);
    assert_eq!(code(&o), 0);
    let o = run(
        t.path(),
        &["diagnose", "--input", "good/intensities.csv", "--params", "gfit/fit.json", "--out", "gd"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = json(t.path().join("gd/spec_check.json"));
    assert!(rep["rmse"].as_f64().unwrap() < 0.05);
    let svg = fs::read_to_string(t.path().join("gd/scatter.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(t.path().join("gd/systemic_intensity.csv").exists());

    two_block_panel(t.path());
    let o = run(t.path(), &["estimate", "--input", "blocks.csv", "--out", "bfit"]);
    assert_eq!(code(&o), 0);
    let o = run(
        t.path(),
        &["diagnose", "--input", "blocks.csv", "--params", "bfit/fit.json", "--out", "bd", "--format", "csv"],
    );
    assert_eq!(code(&o), 3);
    assert!(t.path().join("bd/scatter.csv").exists());
    assert!(t.path().join("bd/manifest.json").exists());

    let o = run(
        t.path(),
        &["diagnose", "--input", "good/intensities.csv", "--params", "gfit/fit.json", "--out", "x", "--format", "png"],
    );
    assert_eq!(code(&o), 1);

    let labels = r#"{"labels":["E1","E2","E3","E4","E5"],"alphas":[0,0,0,0,1e-9],"theta":2}"#;
    fs::write(t.path().join("zero.json"), labels).unwrap();
    let o = run(t.path(), &["diagnose", "--input", "good/intensities.csv", "--params", "zero.json", "--out", "z"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn rolling_contract() {
    let t = TempDir::new().unwrap();
    simulate(t.path(), "s", "1,0.5,2", "2", "120", "41");
    let o = run(t.path(), &["estimate", "--input", "s/intensities.csv", "--out", "full", "--restarts", "5"]);
    assert_eq!(code(&o), 0);
    let o = run(
        t.path(),
        &["rolling", "--input", "s/intensities.csv", "--out", "r", "--window", "120", "--step", "3", "--restarts", "5"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(t.path().join("r/rolling.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "window_end,theta,alpha_E1,alpha_E2,alpha_E3,objective");
    let fit = json(t.path().join("full/fit.json"));
    let fields: Vec<f64> = lines[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields[0], fit["theta"].as_f64().unwrap());
    assert_eq!(fields[1], fit["alphas"][0].as_f64().unwrap());
    assert_eq!(fields[4], fit["objective"].as_f64().unwrap());

    let o = run(
        t.path(),
        &["rolling", "--input", "s/intensities.csv", "--out", "r2", "--window", "30", "--step", "45", "--restarts", "3"],
    );
    assert_eq!(code(&o), 0);
    let ends: Vec<String> = fs::read_to_string(t.path().join("r2/rolling.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    // windows start at 0, 45, 90
    assert_eq!(ends, ["2000-01-30", "2000-03-15", "2000-04-29"]);

    let o = run(t.path(), &["rolling", "--input", "s/intensities.csv", "--out", "r3", "--window", "500"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn hac_tau_contract() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["hac-tau", "--theta", "2", "--phi", "2", "--lambdas", "1,1,1", "--case", "inner"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["tau"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-5);
    assert!(v["difference"].as_f64().unwrap() < 1e-5);
    assert!(!t.path().join("manifest.json").exists());

    let o = run(
        t.path(),
        &["hac-tau", "--theta", "3", "--phi", "1.5", "--lambdas", "1,1,0", "--case", "outer", "--out", "h"],
    );
    assert_eq!(code(&o), 0);
    let v = json(t.path().join("h/hac_tau.json"));
    assert!((v["tau"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-5);
    assert!(t.path().join("h/manifest.json").exists());

    let o = run(t.path(), &["hac-tau", "--theta", "1.2", "--phi", "1.5", "--lambdas", "1,1,1", "--case", "inner"]);
    assert_eq!(code(&o), 2);
    let o = run(t.path(), &["hac-tau", "--theta", "2", "--phi", "1.5", "--lambdas", "1,1", "--case", "inner"]);
    assert_eq!(code(&o), 2);
}
