use palette_rjmcmc::presets;
use palette_rjmcmc::{apply_bijection, invert_bijection, log_sum_exp, stream_rng, ModelSet};
use rand::Rng;

fn shipped_models() -> Vec<ModelSet> {
    vec![
        presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap().0,
        presets::pine_models(0.0005).unwrap(),
        presets::trout_models(0.2).unwrap(),
    ]
}

#[test]
fn round_trip_for_every_shipped_model() {
    let mut rng = stream_rng(1, 0);
    for set in shipped_models() {
        for model in set.models() {
            let mut worst = 0.0_f64;
            for _ in 0..10_000 {
                let psi: Vec<f64> = (0..set.dim()).map(|_| rng.random_range(-1e3..1e3)).collect();
                let (theta, u) = apply_bijection(model, &psi).unwrap();
                let back = invert_bijection(model, &theta, &u).unwrap();
                worst = worst.max(psi.iter().zip(back.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
            assert!(worst < 1e-10, "{}: {worst:e}", model.name);
        }
    }
}

#[test]
fn halving_map_jacobian_is_exactly_half() {
    let (set, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
    let b = set.get(1).bijection.as_ref().unwrap();
    assert_eq!(b.ln_abs_det(), 0.5f64.ln());
}

#[test]
fn full_conditional_is_a_simplex_and_weight_scale_free() {
    let mut rng = stream_rng(2, 0);
    let (models, data) = presets::binomial_models(1.0, 1.0, 15.0, 0.3).unwrap();
    let bound = models.bind(&data).unwrap();
    let mut scaled = bound.clone();
    scaled.set_weights(&[0.7 * 13.0, 0.3 * 13.0]).unwrap();
    let mut p = [0.0; 2];
    let mut q = [0.0; 2];
    let mut checked = 0;
    for _ in 0..10_000 {
        let psi = [rng.random_range(0.001..0.999), rng.random_range(0.001..0.999)];
        if bound.full_conditional(&psi, None, &mut p).is_err() {
            continue;
        }
        scaled.full_conditional(&psi, None, &mut q).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((p[0] - q[0]).abs() < 1e-12);
        checked += 1;
    }
    assert!(checked > 5_000);
}

#[test]
fn hierarchical_full_conditional_is_a_simplex() {
    let mut rng = stream_rng(3, 0);
    let models = presets::trout_models(0.2).unwrap();
    let data = palette_rjmcmc::Dataset::from_columns([
        ("y", vec![1.0, 0.0, 1.0, 1.0]),
        ("S", vec![-1.0, 1.0, 1.0, -1.0]),
        ("L", vec![0.3, -1.2, 0.5, 0.4]),
    ])
    .unwrap();
    let bound = models.bind(&data).unwrap();
    let mut p = [0.0; 5];
    for _ in 0..2_000 {
        let psi: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        bound.full_conditional(&psi, Some(rng.random_range(0.05..3.0)), &mut p).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn log_sum_exp_shift_up_to_a_million() {
    let mut rng = stream_rng(4, 0);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random_range(-30.0..30.0)).collect();
        let c = rng.random_range(-1e6..1e6);
        let a = log_sum_exp(&x).unwrap();
        let b = log_sum_exp(&x.iter().map(|v| v + c).collect::<Vec<_>>()).unwrap();
        // Absolute agreement is limited by the spacing of doubles near |c|.
        assert!((b - (a + c)).abs() <= 1e-12 * (1.0 + c.abs() + a.abs()), "{a} {b} {c}");
    }
}
