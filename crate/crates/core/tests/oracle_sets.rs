use csforest::dataset::{example1_specs, Features, GaussianClassSpec, ScenarioComponent};
use csforest::oracle::{oracle_score, oracle_sets, OracleModel, OracleSpec, MIN_MC_SAMPLES};
use csforest::rng;
use proptest::prelude::*;

fn component(name: &str, spec: GaussianClassSpec, weight: f64) -> ScenarioComponent {
    ScenarioComponent {
        name: name.into(),
        spec,
        weight,
    }
}

fn two_class_line(w: f64) -> OracleSpec {
    let a = GaussianClassSpec::new(vec![-1.0], vec![1.0]).unwrap();
    let b = GaussianClassSpec::new(vec![1.0], vec![1.0]).unwrap();
    OracleSpec {
        class_names: vec!["a".into(), "b".into()],
        classes: vec![a.clone(), b.clone()],
        test_mixture: vec![component("a", a, 0.5), component("b", b, 0.5)],
        train_weights: vec![0.5, 0.5],
        w,
        mc_samples: 5000,
        seed: 1,
    }
}

#[test]
fn equidistant_point_closed_form() {
    for w in [0.0, 0.5, 1.0, 3.0] {
        let spec = two_class_line(w);
        for k in 0..2 {
            let s = oracle_score(&spec, &[0.0], k).unwrap();
            assert!((s - 1.0 / (1.0 + w)).abs() < 1e-12, "w={w}: {s}");
        }
    }
}

#[test]
fn isolated_class_mean_closed_form() {
    // Other components are 40 sd away, so μ reduces to (π_te + w·π_tr)·f_k.
    let near = GaussianClassSpec::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let far = GaussianClassSpec::new(vec![40.0, 0.0], vec![1.0, 1.0]).unwrap();
    let spec = OracleSpec {
        class_names: vec!["near".into(), "far".into()],
        classes: vec![near.clone(), far.clone()],
        test_mixture: vec![component("near", near, 0.2), component("far", far, 0.8)],
        train_weights: vec![0.6, 0.4],
        w: 1.0,
        mc_samples: MIN_MC_SAMPLES,
        seed: 0,
    };
    let s = oracle_score(&spec, &[0.0, 0.0], 0).unwrap();
    assert!((s - 1.0 / 0.8).abs() < 1e-12);
}

#[test]
fn class_means_and_far_outliers() {
    let spec = OracleSpec::example1(10, 1.0, 3).unwrap();
    let model = OracleModel::new(spec).unwrap();
    let mut at_mean = vec![0.0; 10];
    at_mean[0] = 3.0;
    let sets = model.predict(&Features::from_rows(&[at_mean]).unwrap(), 0.5).unwrap();
    assert!(sets.contains(0, 1));
    // Class R direction, far out in the second coordinate.
    let mut far = vec![0.0; 10];
    far[1] = 6.0;
    let mut farther = vec![0.0; 10];
    farther[1] = 9.0;
    let sets = model
        .predict(&Features::from_rows(&[far, farther]).unwrap(), 0.05)
        .unwrap();
    assert!(sets.is_outlier(0) && sets.is_outlier(1));
}

#[test]
fn coverage_within_monte_carlo_error() {
    let spec = OracleSpec::example1(10, 1.0, 7).unwrap();
    let specs = example1_specs(10).unwrap();
    let model = OracleModel::new(spec.clone()).unwrap();
    let draws = 4000;
    let alpha = 0.05;
    for k in 0..2 {
        let mut r = rng::stream(99, "oracle-coverage", k as u64);
        let rows: Vec<Vec<f64>> = (0..draws).map(|_| specs[k].sample(&mut r)).collect();
        let sets = model.predict(&Features::from_rows(&rows).unwrap(), alpha).unwrap();
        let covered = (0..draws).filter(|&i| sets.contains(i, k)).count() as f64 / draws as f64;
        let se = (alpha * (1.0 - alpha) * (1.0 / draws as f64 + 1.0 / spec.mc_samples as f64)).sqrt();
        assert!((covered - (1.0 - alpha)).abs() <= 3.0 * se, "class {k}: {covered}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scaling_mu_keeps_sets(c in 0.01f64..100.0, seed in 0u64..100) {
        let mut spec = OracleSpec::example1(3, 1.0, seed).unwrap();
        spec.mc_samples = MIN_MC_SAMPLES;
        let mut scaled = spec.clone();
        for comp in &mut scaled.test_mixture {
            comp.weight *= c;
        }
        for w in &mut scaled.train_weights {
            *w *= c;
        }
        let mut r = rng::stream(seed, "oracle-scale", 0);
        let specs = example1_specs(3).unwrap();
        let rows: Vec<Vec<f64>> = (0..60).map(|i| specs[i % 3].sample(&mut r)).collect();
        let x = Features::from_rows(&rows).unwrap();
        let a = oracle_sets(&spec, &x, 0.1).unwrap();
        let b = oracle_sets(&scaled, &x, 0.1).unwrap();
        for i in 0..x.n_samples() {
            prop_assert_eq!(a.get(i), b.get(i));
        }
    }

    #[test]
    fn oracle_sets_shrink_with_alpha(a1 in 0.001f64..0.999, a2 in 0.001f64..0.999, seed in 0u64..100) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let mut spec = OracleSpec::example1(3, 1.0, seed).unwrap();
        spec.mc_samples = MIN_MC_SAMPLES;
        let model = OracleModel::new(spec).unwrap();
        let specs = example1_specs(3).unwrap();
        let mut r = rng::stream(seed, "oracle-alpha", 0);
        let rows: Vec<Vec<f64>> = (0..30).map(|i| specs[i % 3].sample(&mut r)).collect();
        let x = Features::from_rows(&rows).unwrap();
        let wide = model.predict(&x, lo).unwrap();
        let narrow = model.predict(&x, hi).unwrap();
        for i in 0..x.n_samples() {
            prop_assert!(narrow.get(i).iter().all(|&k| wide.contains(i, k)));
        }
    }
}
