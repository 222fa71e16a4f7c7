use chrono::NaiveDate;
use contagion_core::copula::{default_labels, GumbelGenerator, ModelParams, ShockIntensities, TauMatrix};
use contagion_core::estimator::{
    fit, fit_theta_fixed_alphas, pairwise_tau_matrix, rolling_fit, FitConfig, IntensityPanel, RollingMode,
};
use contagion_core::sampler::{simulate_default_times, synthetic_panel, SimConfig};

const TRUTH: [f64; 5] = [0.2, 0.4, 0.5, 0.7, 0.9];

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
}

fn panel(alphas: &[f64], theta: f64, m: usize, seed: u64) -> IntensityPanel {
    let cfg = SimConfig::new(
        m,
        seed,
        ShockIntensities::new(1.0, ShockIntensities::unit_systemic_for(alphas)).unwrap(),
        theta,
    )
    .unwrap();
    let s = simulate_default_times(&cfg).unwrap();
    synthetic_panel(&s, &cfg, default_labels(alphas.len()), start()).unwrap()
}

fn sampled_target(seed: u64) -> TauMatrix {
    pairwise_tau_matrix(&panel(&TRUTH, 3.0, 2000, seed)).unwrap()
}

#[test]
fn sampled_target_recovers_parameters() {
    let r = fit(&sampled_target(101), &FitConfig::default()).unwrap();
    assert!((r.params.theta() - 3.0).abs() <= 0.3, "theta {}", r.params.theta());
    for (a, t) in r.params.alphas().iter().zip(TRUTH) {
        assert!((a - t).abs() <= 0.1, "{a} vs {t}");
    }
}

#[test]
fn fixed_alpha_fit_on_sampled_target() {
    let r = fit_theta_fixed_alphas(&sampled_target(102), &TRUTH, &FitConfig::default()).unwrap();
    assert!((r.params.theta() - 3.0).abs() <= 0.3, "theta {}", r.params.theta());
}

#[test]
fn fit_reproducible_across_calls() {
    let t = sampled_target(103);
    let cfg = FitConfig {
        seed: 77,
        ..FitConfig::default()
    };
    assert_eq!(fit(&t, &cfg).unwrap(), fit(&t, &cfg).unwrap());
}

#[test]
fn objective_vanishes_only_at_exact_match() {
    let p = ModelParams::unlabeled(TRUTH.to_vec(), 3.0).unwrap();
    let t = TauMatrix::from_params(&p).unwrap();
    let gen = GumbelGenerator::new(3.0).unwrap();
    assert_eq!(gen.theta(), 3.0);
    let q = ModelParams::unlabeled(TRUTH.to_vec(), 3.01).unwrap();
    let f = contagion_core::estimator::objective(&q, &t, Default::default()).unwrap();
    assert!(f > 0.0);
}

fn thetas(points: &[contagion_core::estimator::RollingPoint]) -> Vec<f64> {
    points.iter().map(|p| p.result.params.theta()).collect()
}

#[test]
fn rolling_theta_is_stable_under_stationarity() {
    let p = panel(&[0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], 3.0, 600, 104);
    let r = rolling_fit(&p, 250, 50, &FitConfig::default(), RollingMode::Free).unwrap();
    let th = thetas(&r);
    assert_eq!(th.len(), 8);
    let mean = th.iter().sum::<f64>() / th.len() as f64;
    let sd = (th.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (th.len() as f64 - 1.0)).sqrt();
    assert!(sd < 0.5, "sd {sd} over {th:?}");
}

#[test]
fn rolling_theta_detects_regime_shift() {
    let alphas = [0.3, 0.5, 0.6, 0.8];
    let a = panel(&alphas, 2.0, 300, 105);
    let b = panel(&alphas, 5.0, 300, 106);
    let dates: Vec<NaiveDate> = (0..600).map(|i| start() + chrono::Days::new(i)).collect();
    let cols = (0..4)
        .map(|k| a.column(k).iter().chain(b.column(k)).copied().collect())
        .collect();
    let p = IntensityPanel::new(dates, default_labels(4), cols).unwrap();
    let r = rolling_fit(&p, 250, 50, &FitConfig::default(), RollingMode::Free).unwrap();
    let th = thetas(&r);
    assert!(th.last().unwrap() - th[0] >= 2.0, "{th:?}");
}
