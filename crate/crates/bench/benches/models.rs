use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use propensity_core::bnn::posterior_predictive_batch;
use propensity_core::data::{generate_synthetic, SyntheticConfig};
use propensity_core::metrics::roc_auc;
use propensity_core::models::train_model;
use propensity_core::pipeline::prepare;
use propensity_core::trees::{best_split_any, Criterion as Impurity, FeatureMatrix};
use propensity_core::{ModelConfig, ModelKind, PipelineConfig, Prepared, TrainedModel};

fn prepared(n: usize) -> Prepared {
    let ds = generate_synthetic(&SyntheticConfig::new(n, 0.5837, false), 1).unwrap();
    prepare(&ds, &PipelineConfig::default()).unwrap()
}

fn config(kind: ModelKind) -> ModelConfig {
    let mut cfg = ModelConfig::defaults(kind, 0);
    for (k, v) in [("n_trees", 20), ("n_stages", 30), ("epochs", 1)] {
        let _ = cfg.set(k, v.into());
    }
    if kind == ModelKind::Bnn {
        cfg.set("hidden", 128.into()).unwrap();
    }
    cfg
}

fn training(c: &mut Criterion) {
    let p = prepared(5000);
    let mut g = c.benchmark_group("train_5k");
    g.sample_size(10);
    for kind in ModelKind::ALL {
        let cfg = config(kind);
        g.bench_function(kind.name(), |b| b.iter(|| train_model(black_box(&cfg), &p.train).unwrap()));
    }
    g.finish();
}

fn prediction(c: &mut Criterion) {
    let p = prepared(5000);
    let mut g = c.benchmark_group("predict_1k");
    g.sample_size(10);
    for kind in ModelKind::ALL {
        let (model, _) = train_model(&config(kind), &p.train).unwrap();
        g.bench_function(kind.name(), |b| b.iter(|| model.predict(black_box(&p.test), &Default::default()).unwrap()));
    }
    g.finish();
}

fn posterior(c: &mut Criterion) {
    let p = prepared(2000);
    let (model, _) = train_model(&config(ModelKind::Bnn), &p.train).unwrap();
    let TrainedModel::Bnn(m) = model else { unreachable!() };
    let rows: Vec<usize> = (0..100).collect();
    c.bench_function("bnn_posterior_100x100", |b| {
        b.iter(|| posterior_predictive_batch(&m, black_box(&p.test), &rows, 100).unwrap())
    });
}

fn kernels(c: &mut Criterion) {
    let p = prepared(20_000);
    let x = FeatureMatrix::from_encoded(&p.train);
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    c.bench_function("best_split_root", |b| {
        b.iter(|| best_split_any(&x, black_box(&p.train.labels), &rows, Impurity::Gini).unwrap())
    });

    let scores: Vec<f64> = (0..p.train.len()).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    c.bench_function("roc_auc", |b| {
        b.iter_batched(|| scores.clone(), |s| roc_auc(&p.train.labels, &s).unwrap(), BatchSize::LargeInput)
    });
}

criterion_group!(benches, training, prediction, posterior, kernels);
criterion_main!(benches);
