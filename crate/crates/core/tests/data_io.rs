use std::collections::BTreeMap;
use std::fs;

use csforest::dataset::{generate_example1, load_csv, split_per_class, subsample_per_class, write_csv};
use csforest::Error;

#[test]
fn digit_style_csv_has_784_features() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("digits.csv");
    let mut body = String::from("label");
    for j in 0..784 {
        body.push_str(&format!(",pixel{j}"));
    }
    body.push('\n');
    for i in 0..12 {
        body.push_str(&(i % 6).to_string());
        for j in 0..784 {
            body.push_str(&format!(",{}", (i * 31 + j) % 256));
        }
        body.push('\n');
    }
    fs::write(&path, body).unwrap();
    let data = load_csv(&path, Some("label")).unwrap();
    assert_eq!(data.n_features(), 784);
    assert_eq!(data.n_samples(), 12);
    assert_eq!(data.n_classes(), 6);
    let counts: BTreeMap<usize, usize> = (0..6).map(|k| (k, 2)).collect();
    assert_eq!(subsample_per_class(&data, &counts, 1).unwrap().n_samples(), 12);
}

#[test]
fn write_then_load_is_lossless() {
    let (train, _) = generate_example1(7, 1, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    write_csv(&train, &path).unwrap();
    let back = load_csv(&path, Some("label")).unwrap();
    assert_eq!(back.features(), train.features());
    assert_eq!(back.labels(), train.labels());
    assert_eq!(back.class_names(), train.class_names());
}

#[test]
fn headerless_unlabelled_and_partially_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.csv");
    fs::write(&plain, "1.5,2\n3,4.25\n").unwrap();
    let d = load_csv(&plain, None).unwrap();
    assert_eq!((d.n_samples(), d.n_features(), d.n_classes()), (2, 2, 0));

    let mixed = dir.path().join("mixed.csv");
    fs::write(&mixed, "a,b,y\n1,2,cat\n3,4,\n5,6,dog\n").unwrap();
    let d = load_csv(&mixed, Some("y")).unwrap();
    assert_eq!(d.labels(), &[Some(0), None, Some(1)]);
    assert!(d.required_labels().is_err());

    let by_index = dir.path().join("index.csv");
    fs::write(&by_index, "0.5,1.0,7\n1.5,3.0,9\n").unwrap();
    let d = load_csv(&by_index, Some("2")).unwrap();
    assert_eq!(d.n_features(), 2);
    assert_eq!(d.n_samples(), 2);
    assert_eq!(d.class_names(), &["7".to_string(), "9".to_string()]);
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x1,x2,label\n1,2,a\n3,oops,b\n").unwrap();
    match load_csv(&path, Some("label")) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
    fs::write(&path, "x1,x2,label\n1,2,a\n3,b\n").unwrap();
    assert!(matches!(
        load_csv(&path, Some("label")),
        Err(Error::Parse { line: 3, .. })
    ));
    assert!(matches!(load_csv(&path, Some("nope")), Err(Error::Config(_))));
    fs::write(&path, "").unwrap();
    assert!(matches!(load_csv(&path, None), Err(Error::NoData)));
    assert!(matches!(
        load_csv(dir.path().join("missing.csv"), None),
        Err(Error::Csv(_) | Error::Io(_))
    ));
}

#[test]
fn pool_split_counts() {
    let (train, _) = generate_example1(50, 1, 5).unwrap();
    let tr: BTreeMap<usize, usize> = [(0, 20), (1, 10)].into();
    let te: BTreeMap<usize, usize> = [(0, 5), (1, 30)].into();
    let (a, b) = split_per_class(&train, &tr, &te, 2).unwrap();
    assert_eq!(a.class_counts(), vec![20, 10]);
    assert_eq!(b.class_counts(), vec![5, 30]);
    let too_many: BTreeMap<usize, usize> = [(0, 51)].into();
    assert!(matches!(
        subsample_per_class(&train, &too_many, 1),
        Err(Error::InsufficientSamples {
            requested: 51,
            available: 50,
            ..
        })
    ));
}
