mod common;

use palette_rjmcmc::io::{RunConfig, StoreSource};
use palette_rjmcmc::postprocess::{method1, MethodChoice};
use palette_rjmcmc::presets::{self, ExampleOverrides};
use palette_rjmcmc::samplers::{fit_stores, Stage1Settings};
use palette_rjmcmc::{
    reweight_under_prior, run_stage2, stream_rng, tune_model_priors, BoundModelSet, Error, SampleStore, Stage2Settings,
};
use proptest::prelude::*;

const EXACT: f64 = 0.657_979;

fn binomial_stores(seed: u64) -> (Vec<SampleStore>, BoundModelSet) {
    let (models, data) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
    let stores = fit_stores(&models, &data, &Stage1Settings::default(), seed).unwrap();
    (stores, models.bind(&data).unwrap())
}

#[test]
fn oracle_matches_published_exact_value() {
    let p = common::binomial_pooled_posterior([8.0, 16.0], [20.0, 30.0], 1.0, 1.0, 0.5);
    assert!((p - EXACT).abs() < 1e-6, "{p}");
}

#[test]
fn estimators_agree_with_each_other_and_the_exact_value() {
    let (stores, bound) = binomial_stores(10);
    let r = run_stage2(&stores, &bound, &Stage2Settings::default(), 11).unwrap();
    let m1 = r.method1.as_ref().unwrap();
    let m2 = r.method2.as_ref().unwrap();
    let se_store = common::store_se(&stores, &bound);
    let est = [
        (m1.probs_indicator[1], m1.se_indicator.as_ref().unwrap()[1]),
        (m1.probs_rao_blackwell[1], m1.se_rao_blackwell.as_ref().unwrap()[1]),
        (m2.stationary[1], m2.se_stationary.as_ref().unwrap()[1]),
    ];
    for (i, &(a, sa)) in est.iter().enumerate() {
        assert!((a - EXACT).abs() <= 3.0 * sa.hypot(se_store), "estimator {i}: {a} vs {EXACT}");
        for &(b, sb) in &est[i + 1..] {
            assert!((a - b).abs() <= 3.0 * sa.hypot(sb), "{a} vs {b}");
        }
    }
}

#[test]
fn traces_from_both_starting_models_converge() {
    let (stores, bound) = binomial_stores(12);
    let mut rng = stream_rng(13, 0);
    let m = method1(&stores, &bound, 100_000, 50_000, &[0, 1], 1, &mut rng).unwrap();
    let a = m.chains[0].trace.last().unwrap();
    let b = m.chains[1].trace.last().unwrap();
    assert_eq!((m.chains[0].initial_model, m.chains[1].initial_model), (1, 2));
    assert_eq!(a.iteration, 100_000);
    assert!((a.probs[1] - b.probs[1]).abs() < 0.01);
    assert_eq!(m.chains[0].trace.len(), 50_000);
}

#[test]
fn tuned_then_reweighted_matches_equal_priors() {
    let (stores, bound) = binomial_stores(14);
    let plain = run_stage2(&stores, &bound, &Stage2Settings::default(), 15).unwrap();
    let tuned_settings = Stage2Settings {
        tune_priors: true,
        ..Default::default()
    };
    let tuned = run_stage2(&stores, &bound, &tuned_settings, 16).unwrap();
    let t = tuned.tuning.as_ref().unwrap();
    assert!(t.converged);
    // Balanced visits need prior odds equal to the inverse Bayes factor.
    assert!((t.weights[0] - EXACT).abs() < 0.05, "{:?}", t.weights);

    let p = tuned.probs[1];
    let back = reweight_under_prior(&tuned.probs, &tuned.prior_weights, &[0.5, 0.5]).unwrap();
    assert_eq!(tuned.probs_target_prior.as_deref(), Some(back.as_slice()));
    // Delta method for the two-model reweighting map.
    let r = (0.5 / tuned.prior_weights[1]) / (0.5 / tuned.prior_weights[0]);
    let slope = r / (p * r + 1.0 - p).powi(2);
    let se_tuned = slope * tuned.method1.as_ref().unwrap().se_rao_blackwell.as_ref().unwrap()[1];
    let se_plain = plain.method1.as_ref().unwrap().se_rao_blackwell.as_ref().unwrap()[1];
    assert!(
        (back[1] - plain.probs[1]).abs() <= 3.0 * se_tuned.hypot(se_plain),
        "{} vs {}",
        back[1],
        plain.probs[1]
    );
}

#[test]
fn tuning_from_balanced_start_stops_after_one_round() {
    let (stores, mut bound) = binomial_stores(17);
    bound.set_weights(&[EXACT, 1.0 - EXACT]).unwrap();
    let mut rng = stream_rng(18, 0);
    let t = tune_model_priors(&stores, &bound, &[0.5, 0.5], 5, 50_000, &mut rng).unwrap();
    assert_eq!(t.rounds, 1);
    assert!(t.converged);
}

#[test]
fn never_visited_model_is_reported() {
    let (stores, mut bound) = binomial_stores(19);
    bound.set_weights(&[1.0 - 1e-14, 1e-14]).unwrap();
    let s = Stage2Settings {
        method: MethodChoice::One,
        iterations: 2_000,
        initial_models: vec![1],
        ..Default::default()
    };
    let r = run_stage2(&stores, &bound, &s, 20).unwrap();
    assert_eq!(r.method1.as_ref().unwrap().visits[1], 0);
    assert!(r
        .diagnostics
        .iter()
        .any(|d| d == "model_2 never visited; increase iterations or tune priors"));
    // The Rao-Blackwell estimate is still positive, so Bayes factors remain defined.
    assert!(r.bayes_factors.is_some());
}

#[test]
fn example_runs_and_schema_errors() {
    let out = presets::run_example(
        "binomial",
        &ExampleOverrides {
            seed: Some(3),
            iterations: Some(40_000),
            draws_per_model: Some(40_000),
            ..Default::default()
        },
    )
    .unwrap();
    assert!((out.report.probs[1] - EXACT).abs() < 0.01);
    let e = presets::run_example("trout", &ExampleOverrides::default()).unwrap_err();
    assert!(matches!(e, Error::MissingData { .. }));
    assert!(e.to_string().contains("y, S, L"));
}

#[test]
fn pine_data_file_is_loaded_with_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pine.csv");
    let mut text = String::from("y,x,z\n");
    for i in 0..42 {
        let x = 25.0 + 0.3 * i as f64;
        text.push_str(&format!("{},{},{}\n", 1500.0 + 100.0 * x, x, x + 1.0 + (i % 5) as f64));
    }
    std::fs::write(&path, text).unwrap();
    let mut cfg = presets::Example::Pine.config();
    cfg.data = Some(path);
    let run = cfg.prepare().unwrap();
    assert_eq!(run.data.n_rows(), 42);
    assert_eq!(run.models.weights(), vec![0.9995, 0.0005]);
    assert_eq!(run.sources, vec![StoreSource::Fit, StoreSource::Fit]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_round_trip(
        seed in any::<u64>(),
        iters in 1usize..1_000_000,
        frac in 0.0f64..0.99,
        method in prop_oneof![Just(MethodChoice::One), Just(MethodChoice::Two), Just(MethodChoice::Both)],
        w in 0.001f64..0.999,
        chains in 1usize..8,
    ) {
        let mut cfg = presets::Example::Binomial.config();
        cfg.seed = seed;
        cfg.stage1.chains = chains;
        cfg.stage2.iterations = iters;
        cfg.stage2.burnin_fraction = frac;
        cfg.stage2.method = method;
        let models = presets::binomial_models(2.0, 3.0, 15.0, w).unwrap().0;
        cfg.models = models.models().iter().cloned().map(Into::into).collect();
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml_string().unwrap(), text);
    }
}
