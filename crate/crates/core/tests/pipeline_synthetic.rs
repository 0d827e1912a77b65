use adiv_core::cv::{cross_validate, holdout_evaluate, CvConfig, Dataset};
use adiv_core::divergence::{DivergenceConfig, Pooling, Scope};
use adiv_core::dump::{generate_synthetic, DumpMetadata, SyntheticSpec};
use adiv_core::metrics::auroc;
use adiv_core::pipeline::extract_features;
use adiv_core::probe::{predict_proba, train, TrainConfig};
use adiv_core::sanity::{baseline_auroc, metadata_labels, run_sanity_suite, SanityConfig, SurfaceFeature};
use adiv_core::Error;

fn spec(n: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_examples: n,
        seed,
        ..SyntheticSpec::default()
    }
}

fn features(spec: &SyntheticSpec, scope: Scope) -> Dataset {
    let dump = generate_synthetic(spec).unwrap();
    let records = extract_features(&dump, scope, Pooling::Mean, &DivergenceConfig::default()).unwrap();
    Dataset::from_records(&records).unwrap()
}

#[test]
fn concentrated_rows_score_higher() {
    let data = features(&spec(400, 42), Scope::Answer);
    let mean_of = |label: u8| {
        let rows: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == label).collect();
        rows.iter().map(|&i| data.x.row(i).mean().unwrap()).sum::<f64>() / rows.len() as f64
    };
    assert!(mean_of(1) > mean_of(0));
}

#[test]
fn held_out_auroc() {
    let train_set = features(&spec(300, 1), Scope::Full);
    let test_set = features(&spec(200, 2), Scope::Full);
    let model = train(train_set.x.view(), &train_set.y, &TrainConfig::default()).unwrap();
    let scores = predict_proba(&model, test_set.x.view()).unwrap();
    assert!(auroc(&scores, &test_set.y).unwrap() >= 0.95);

    let holdout = holdout_evaluate(&train_set, &CvConfig::default(), 0.2).unwrap();
    assert_eq!(holdout.cells.len(), 3);
    assert!(holdout.auroc.mean >= 0.95);
}

#[test]
fn report_exports() {
    let data = features(&spec(120, 8), Scope::Answer);
    let report = cross_validate(&data, &CvConfig::default()).unwrap();
    assert_eq!(report.cells.len(), 15);
    assert_eq!(report.cells_csv().lines().count(), 16);
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert!(json["auroc"]["mean"].as_f64().unwrap() >= 0.95);
    assert!(report.to_text().contains("auroc"));
    assert_eq!(report, cross_validate(&data, &CvConfig::default()).unwrap());
}

#[test]
fn unlabeled_features_are_a_schema_error() {
    let dump = generate_synthetic(&spec(4, 3)).unwrap();
    let mut records = extract_features(&dump, Scope::Answer, Pooling::Max, &DivergenceConfig::default()).unwrap();
    records[2].label = None;
    assert!(matches!(Dataset::from_records(&records), Err(Error::Schema(_))));
}

#[test]
fn sanity_suite_on_synthetic() {
    let s = spec(200, 5);
    let dump = generate_synthetic(&s).unwrap();
    let metas: Vec<DumpMetadata> = dump.iter().map(|e| e.meta.clone()).collect();
    let records = extract_features(&dump, Scope::Answer, Pooling::Mean, &DivergenceConfig::default()).unwrap();
    let data = Dataset::from_records(&records).unwrap();
    let labels = metadata_labels(&metas).unwrap();
    assert_eq!(labels, data.y);

    // synthetic surface fields are drawn independently of the label
    for f in [SurfaceFeature::PromptLength, SurfaceFeature::RawOutputLength, SurfaceFeature::EndsWithPunctuation, SurfaceFeature::DigitCount] {
        let a = baseline_auroc(f, &metas, &labels).unwrap();
        assert!((0.4..=0.6).contains(&a), "{}: {a}", f.name());
    }
    assert_eq!(baseline_auroc(SurfaceFeature::GenerationLength, &metas, &labels).unwrap(), 0.5);

    let cfg = SanityConfig { n_permutations: 4, seed: 1, cv: CvConfig::default() };
    let report = run_sanity_suite(&metas, &data, &cfg).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert_eq!(report.rows[5].name, "permuted labels");
    assert_eq!(report, run_sanity_suite(&metas, &data, &cfg).unwrap());
    assert_eq!(report.to_csv().lines().count(), 7);

    assert!(matches!(run_sanity_suite(&metas[1..], &data, &cfg), Err(Error::Metadata(_))));
}
