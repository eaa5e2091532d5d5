use csforest::csforest::{CsForest, CsForestParams};
use csforest::dataset::generate_example1;
use csforest::eval::{aggregate_runs, align_truth, type_errors, EvalReport, ExportFormat, Truth};
use csforest::sets::PredictionSets;
use proptest::prelude::*;

fn names() -> Vec<String> {
    vec!["a".into(), "b".into(), "c".into()]
}

fn truth_strategy() -> impl Strategy<Value = Truth> {
    prop_oneof![
        (0usize..3).prop_map(Truth::Inlier),
        prop_oneof![Just("x"), Just("y")].prop_map(|s| Truth::Outlier(s.to_string())),
    ]
}

fn cases() -> impl Strategy<Value = Vec<(Vec<usize>, Truth)>> {
    proptest::collection::vec(
        (proptest::collection::btree_set(0usize..3, 0..=3), truth_strategy()),
        1..60,
    )
    .prop_map(|v| v.into_iter().map(|(s, t)| (s.into_iter().collect(), t)).collect())
}

fn report_of(cases: &[(Vec<usize>, Truth)]) -> EvalReport {
    let sets = PredictionSets::new(names(), cases.iter().map(|(s, _)| s.clone()).collect()).unwrap();
    let truth: Vec<Truth> = cases.iter().map(|(_, t)| t.clone()).collect();
    type_errors(&sets, &truth).unwrap()
}

proptest! {
    #[test]
    fn report_ignores_sample_order(cases in cases(), rotate in 0usize..60) {
        let mut shuffled = cases.clone();
        shuffled.reverse();
        let len = shuffled.len();
        shuffled.rotate_left(rotate % len);
        prop_assert_eq!(report_of(&cases), report_of(&shuffled));
    }

    #[test]
    fn class_rates_partition(cases in cases()) {
        let r = report_of(&cases);
        for c in &r.classes {
            prop_assert_eq!(c.singleton + c.multi + c.empty + c.miss, c.count);
            for (key, v) in r.flat() {
                if key != "mean_set_size" {
                    prop_assert!((0.0..=1.0).contains(&v), "{} = {}", key, v);
                }
            }
            if c.outlier {
                prop_assert_eq!(c.coverage(), None);
                prop_assert_eq!(c.singleton + c.multi, 0);
            } else if c.count > 0 {
                prop_assert!((c.coverage().unwrap() + c.type_i().unwrap() - 1.0).abs() < 1e-12);
            }
        }
        let inliers: usize = r.classes.iter().filter(|c| !c.outlier).map(|c| c.count).sum();
        prop_assert_eq!(inliers, r.n_inliers);
        let missed: usize = r.classes.iter().filter(|c| !c.outlier).map(|c| c.empty + c.miss).sum();
        prop_assert_eq!(missed, r.type_i_count);
        if let Some(rej) = r.outlier_rejection() {
            let (empty, count) = r.classes.iter().filter(|c| c.outlier).fold((0, 0), |(e, n), c| (e + c.empty, n + c.count));
            prop_assert!((rej - empty as f64 / count as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn json_export_roundtrips(cases in cases()) {
        let r = report_of(&cases);
        prop_assert_eq!(EvalReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}

#[test]
fn exported_files() {
    let cases = vec![(vec![0], Truth::Inlier(0)), (vec![], Truth::Outlier("x".into()))];
    let r = report_of(&cases);
    // Classes b and c never occur and are still listed with zero counts.
    assert_eq!(r.class("c").unwrap().count, 0);
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    r.export(&json, ExportFormat::Json).unwrap();
    assert_eq!(EvalReport::import_json(&json).unwrap(), r);
    let text = std::fs::read_to_string(&json).unwrap();
    assert!(text.contains("\"name\": \"c\"") && text.contains("\"count\": 0"));

    let csv = dir.path().join("r.csv");
    r.export(&csv, ExportFormat::LongCsv).unwrap();
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("class,category,rate\n"));
    assert!(body.contains("c,singleton,0\n"));
    assert!(body.contains("x,empty,1\n"));

    let kv = dir.path().join("r.txt");
    r.export(&kv, ExportFormat::KeyValue).unwrap();
    assert!(std::fs::read_to_string(&kv).unwrap().contains("outlier_rejection,1\n"));
    assert!(r
        .export(dir.path().join("no/such/dir/r.json"), ExportFormat::Json)
        .is_err());
}

#[test]
fn aggregate_edge_cases() {
    let r = report_of(&[(vec![0], Truth::Inlier(0))]);
    let agg = aggregate_runs(std::slice::from_ref(&r)).unwrap();
    assert_eq!(agg.runs, 1);
    assert!(agg.entries.iter().all(|e| e.sd == 0.0));
    let other = report_of(&[(vec![0], Truth::Outlier("x".into()))]);
    assert!(aggregate_runs(&[r, other]).is_err());
    assert!(aggregate_runs(&[]).is_err());
}

#[test]
fn seeded_runs_stay_in_coverage_band() {
    let alpha = 0.05;
    let reports: Vec<EvalReport> = (0..10)
        .map(|seed| {
            let (train, test) = generate_example1(100, 100, 500 + seed).unwrap();
            let params = CsForestParams {
                b_tilde: 300,
                seed,
                ..CsForestParams::default()
            };
            let out = CsForest::new(params).fit_predict(&train, test.features()).unwrap();
            type_errors(&out.sets, &align_truth(&test, train.class_names()).unwrap()).unwrap()
        })
        .collect();
    let agg = aggregate_runs(&reports).unwrap();
    let type_i = agg.get("type_i").unwrap();
    assert!(
        type_i.mean <= 2.0 * alpha + 0.02,
        "type I {} ± {}",
        type_i.mean,
        type_i.sd
    );
}
