use proptest::prelude::*;
use propensity_core::data::{generate_synthetic, Cell, Column, ColumnKind, SyntheticConfig};
use propensity_core::pipeline::{clean_and_split, encode_rows, prepare};
use propensity_core::{
    Dataset, ModelArtifact, ModelConfig, ModelKind, Outcome, PipelineConfig, PredictOptions, TrainedModel,
};

fn dataset(n: usize, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticConfig::new(n, 0.5837, false), seed).unwrap()
}

/// Defaults shrunk so every model trains in well under a second.
fn quick(kind: ModelKind) -> ModelConfig {
    let mut cfg = ModelConfig::defaults(kind, 1);
    let small = [("n_trees", 10), ("n_stages", 20), ("epochs", 3), ("samples", 20)];
    for (k, v) in small {
        let _ = cfg.set(k, v.into());
    }
    let _ = cfg.set("hidden", serde_json::json!(match kind {
        ModelKind::Dnn => serde_json::json!([16, 8]),
        _ => serde_json::json!(16),
    }));
    cfg
}

#[test]
fn prepared_sets_are_balanced_and_ordered() {
    let ds = dataset(1200, 4);
    let cfg = PipelineConfig::default();
    let p = prepare(&ds, &cfg).unwrap();
    let [neg, pos] = p.train.class_counts();
    assert_eq!(neg, pos);
    assert_eq!(p.test.len(), p.test_rows.len());
    assert_eq!(p.train.layout, p.test.layout);

    let (train, test) = clean_and_split(&ds, &cfg).unwrap();
    assert_eq!(test, p.test_rows);
    let col = ds.schema.index_of("bill_issue_date").unwrap();
    let latest = train.rows.iter().map(|r| r[col].as_date().unwrap()).max().unwrap();
    assert!(test.rows.iter().all(|r| r[col].as_date().unwrap() >= latest));
}

#[test]
fn every_model_survives_an_artifact_file() {
    let ds = dataset(900, 6);
    let cfg = PipelineConfig::default();
    let p = prepare(&ds, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let (model, _) = propensity_core::models::train_model(&quick(kind), &p.train).unwrap();
        let opts = PredictOptions::default();
        let before = model.predict(&p.test, &opts).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        ModelArtifact::new(&ds.schema, cfg.clone(), p.encoder.clone(), model).save(&path).unwrap();

        let art = ModelArtifact::load(&path).unwrap();
        assert_eq!(art.kind(), kind);
        art.check_schema(&ds.schema).unwrap();
        let data = encode_rows(&art.encoder, &p.test_rows, true).unwrap();
        assert_eq!(art.model.predict(&data, &opts).unwrap(), before, "{kind}");
        if !matches!(art.model, TrainedModel::Bnn(_)) {
            assert!(before.iter().all(|pr| pr.outcome != Outcome::Undecided));
        }
    }
}

#[test]
fn artifact_rejects_a_different_schema() {
    let ds = dataset(400, 2);
    let cfg = PipelineConfig::default();
    let p = prepare(&ds, &cfg).unwrap();
    let (model, _) = propensity_core::models::train_model(&quick(ModelKind::Dt), &p.train).unwrap();
    let art = ModelArtifact::new(&ds.schema, cfg, p.encoder, model);
    let mut other = ds.schema.clone();
    other.columns.insert(0, Column::new("extra", ColumnKind::Continuous));
    assert!(art.check_schema(&other).is_err());
    let mut json: serde_json::Value = serde_json::from_str(&art.to_json().unwrap()).unwrap();
    json["format_version"] = 99.into();
    assert!(ModelArtifact::from_json(&json.to_string()).is_err());
}

#[test]
fn inference_rows_without_labels_are_scored() {
    let ds = dataset(600, 8);
    let p = prepare(&ds, &PipelineConfig::default()).unwrap();
    let target = ds.schema.target_index();
    let rows = ds.rows.iter().take(25).map(|r| {
        let mut r = r.clone();
        r[target] = Cell::Missing;
        r
    });
    let unlabelled = ds.with_rows(rows.collect());
    assert!(encode_rows(&p.encoder, &unlabelled, true).is_err());
    let data = encode_rows(&p.encoder, &unlabelled, false).unwrap();
    assert_eq!(data.len(), 25);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn split_sizes_follow_the_fraction(n in 30usize..300, frac in 0.05f64..0.6, seed in 0u64..1000) {
        let ds = dataset(n, seed);
        let cfg = PipelineConfig { test_fraction: frac, ..PipelineConfig::default() };
        if let Ok((train, test)) = clean_and_split(&ds, &cfg) {
            let total = train.len() + test.len();
            prop_assert_eq!(test.len(), ((frac * total as f64) - 1e-9).ceil() as usize);
        }
    }
}
