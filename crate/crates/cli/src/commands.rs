use anyhow::{bail, ensure, Context, Result};
use propensity_core::bnn::histogram_report;
use propensity_core::data::{generate_synthetic, load_csv, write_csv, Dataset, SyntheticConfig};
use propensity_core::metrics::{evaluate, write_classwise_csv, write_table_csv, ConfusionMatrix, MetricsReport};
use propensity_core::models::{predict_from_posterior, train_model, LogEntry};
use propensity_core::pipeline::{clean_and_split, encode_rows, prepare};
use propensity_core::trees::ranked;
use propensity_core::{FeatureSchema, ModelArtifact, ModelConfig, ModelKind, Outcome, PipelineConfig, PredictOptions, Prediction};
use serde::Deserialize;

use crate::args::{EvaluateArgs, GenerateArgs, PredictArgs, RunArgs};
use crate::config::RunConfig;
use crate::outputs::Outputs;

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut cfg = SyntheticConfig::new(a.rows, a.positive_rate, a.drift);
    if let Some(t) = a.temperature {
        cfg.temperature = t;
    }
    let ds = generate_synthetic(&cfg, a.seed)?;
    let mut out = Outputs::new(&a.out)?;
    out.write("schema.json", (serde_json::to_string_pretty(&ds.schema)? + "\n").as_bytes())?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    out.write("data.csv", &buf)?;
    out.commit();
    Ok(())
}

fn load_inputs(c: &RunConfig) -> Result<(FeatureSchema, Dataset)> {
    let schema_path = c.schema_path()?;
    let schema = FeatureSchema::load(&schema_path).with_context(|| format!("cannot load schema {}", schema_path.display()))?;
    let data_path = c.data_path()?;
    let ds = load_csv(data_path, &schema).with_context(|| format!("cannot load data {}", data_path.display()))?;
    Ok((schema, ds))
}

fn load_artifact(c: &RunConfig, kind: ModelKind) -> Result<ModelArtifact> {
    let path = c.artifact_path(kind);
    let art = ModelArtifact::load(&path).with_context(|| format!("cannot load model {}", path.display()))?;
    ensure!(
        art.kind() == kind,
        "{} holds a {} model, not {kind}",
        path.display(),
        art.kind()
    );
    Ok(art)
}

fn check_threshold(c: &RunConfig) -> Result<()> {
    if let Some(t) = c.threshold {
        ensure!((0.0..=1.0).contains(&t), "--threshold must be in [0, 1], got {t}");
    }
    if c.samples == Some(0) {
        bail!("--samples must be at least 1");
    }
    Ok(())
}

fn options(c: &RunConfig) -> PredictOptions {
    PredictOptions {
        threshold: c.threshold,
        samples: c.samples,
    }
}

/// Defaults for `kind`, then BNN-specific flags, then named overrides.
/// Returns the keys that applied.
fn model_config(c: &RunConfig, kind: ModelKind) -> Result<(ModelConfig, Vec<String>)> {
    let mut cfg = ModelConfig::defaults(kind, c.seed);
    if let ModelConfig::Bnn(b) = &mut cfg {
        if let Some(t) = c.threshold {
            b.threshold = t;
        }
        if let Some(s) = c.samples {
            b.samples = s;
        }
    }
    let mut used = Vec::new();
    for (k, v) in &c.params {
        let mut trial = cfg.clone();
        match trial.set(k, v.clone()) {
            Ok(()) => {
                cfg = trial;
                used.push(k.clone());
            }
            Err(e) if e.to_string().contains("has no parameter") => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok((cfg, used))
}

fn pipeline_config(c: &RunConfig) -> Result<PipelineConfig> {
    let mut p = PipelineConfig {
        seed: c.seed,
        ..PipelineConfig::default()
    };
    if let Some(f) = c.test_fraction {
        ensure!(f > 0.0 && f < 1.0, "--test-fraction must be in (0, 1), got {f}");
        p.test_fraction = f;
    }
    if let Some(o) = c.oversample {
        p.oversample = o;
    }
    Ok(p)
}

fn log_csv(log: &[LogEntry]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "loss"])?;
    for e in log {
        w.write_record([e.step.to_string(), e.loss.to_string()])?;
    }
    Ok(w.into_inner()?)
}

pub fn train(args: &RunArgs) -> Result<()> {
    let c = RunConfig::resolve(args)?;
    check_threshold(&c)?;
    let kinds = c.require_models()?.to_vec();
    let mut configs = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    for &k in &kinds {
        let (cfg, keys) = model_config(&c, k)?;
        used.extend(keys);
        configs.push(cfg);
    }
    if let Some((k, _)) = c.params.iter().find(|(k, _)| !used.contains(k)) {
        let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
        bail!("parameter `{k}` does not apply to model {}", names.join(", "));
    }

    let (schema, ds) = load_inputs(&c)?;
    let pipeline = pipeline_config(&c)?;
    let prepared = prepare(&ds, &pipeline)?;
    let mut out = Outputs::new(&c.out)?;
    for cfg in configs {
        let kind = cfg.kind();
        let started = std::time::Instant::now();
        let (model, log) = train_model(&cfg, &prepared.train)?;
        log::info!("trained {kind} in {:.1}s", started.elapsed().as_secs_f64());
        let art = ModelArtifact::new(&schema, pipeline.clone(), prepared.encoder.clone(), model);
        out.write(&format!("model.{kind}.json"), art.to_json()?.as_bytes())?;
        out.write(&format!("train_log.{kind}.csv"), &log_csv(&log)?)?;
    }
    out.commit();
    Ok(())
}

fn write_reports(out: &mut Outputs, reports: &[MetricsReport]) -> Result<()> {
    out.write("metrics.json", (serde_json::to_string_pretty(reports)? + "\n").as_bytes())?;
    let mut buf = Vec::new();
    write_table_csv(reports, &mut buf)?;
    out.write("metrics_table.csv", &buf)?;
    let mut buf = Vec::new();
    write_classwise_csv(reports, &mut buf)?;
    out.write("classwise.csv", &buf)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CountsRow {
    model: String,
    tp: u64,
    tn: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    #[serde(default)]
    abstained: u64,
}

pub fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let c = RunConfig::resolve(&a.run)?;
    check_threshold(&c)?;
    let reports = match &a.counts {
        Some(path) => {
            let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read counts {}", path.display()))?;
            let mut reports = Vec::new();
            for row in rdr.deserialize::<CountsRow>() {
                let r = row.with_context(|| format!("bad row in {}", path.display()))?;
                let cm = ConfusionMatrix {
                    abstained: r.abstained,
                    ..ConfusionMatrix::new(r.tp, r.tn, r.fp, r.fn_)
                };
                reports.push(MetricsReport::from_confusion(r.model, cm, None));
            }
            ensure!(!reports.is_empty(), "{} has no rows", path.display());
            reports
        }
        None => {
            let kinds = c.require_models()?.to_vec();
            let (schema, ds) = load_inputs(&c)?;
            let mut reports = Vec::new();
            for kind in kinds {
                let art = load_artifact(&c, kind)?;
                art.check_schema(&schema)?;
                let rows = if a.all_rows { ds.clone() } else { clean_and_split(&ds, &art.pipeline)?.1 };
                let data = encode_rows(&art.encoder, &rows, true)?;
                let preds = art.model.predict(&data, &options(&c))?;
                let y_pred: Vec<Option<u8>> = preds.iter().map(|p| p.outcome.class()).collect();
                let scores: Vec<f64> = preds.iter().map(|p| p.probability).collect();
                let report = evaluate(kind.name(), &data.labels, &y_pred, Some(&scores))?;
                log::info!("{kind}: accuracy {:?} on {} rows", report.accuracy, data.len());
                reports.push(report);
            }
            reports
        }
    };
    let mut out = Outputs::new(&c.out)?;
    write_reports(&mut out, &reports)?;
    out.commit();
    Ok(())
}

fn predictions_csv(preds: &[Prediction]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance_id", "outcome", "probability", "spread"])?;
    for (i, p) in preds.iter().enumerate() {
        w.write_record([i.to_string(), p.outcome.to_string(), p.probability.to_string(), p.spread.to_string()])?;
    }
    Ok(w.into_inner()?)
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let c = RunConfig::resolve(&a.run)?;
    check_threshold(&c)?;
    let kinds = c.require_models()?;
    ensure!(kinds.len() == 1, "predict takes a single --model");
    let kind = kinds[0];
    if a.histograms {
        ensure!(kind == ModelKind::Bnn, "--histograms needs the bnn model");
        ensure!(a.bins > 0, "--bins must be at least 1");
    }
    let (schema, ds) = load_inputs(&c)?;
    let art = load_artifact(&c, kind)?;
    art.check_schema(&schema)?;
    let data = encode_rows(&art.encoder, &ds, false)?;
    let mut out = Outputs::new(&c.out)?;
    match art.model.posterior(&data, c.samples) {
        Some(pps) => {
            let pps = pps?;
            let threshold = match (&art.model, c.threshold) {
                (_, Some(t)) => t,
                (propensity_core::TrainedModel::Bnn(m), None) => m.config.threshold,
                _ => unreachable!("only the bnn has a posterior"),
            };
            let preds = predict_from_posterior(&pps, threshold);
            out.write("predictions.csv", &predictions_csv(&preds)?)?;
            if a.histograms {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["instance_id", "class", "bin", "lower", "upper", "count", "decided"])?;
                for (i, pp) in pps.iter().enumerate() {
                    for h in histogram_report(pp, a.bins, threshold)? {
                        for (b, count) in h.counts.iter().enumerate() {
                            w.write_record([
                                i.to_string(),
                                h.class.to_string(),
                                b.to_string(),
                                h.edges[b].to_string(),
                                h.edges[b + 1].to_string(),
                                count.to_string(),
                                h.decided.to_string(),
                            ])?;
                        }
                    }
                }
                out.write("histograms.csv", &w.into_inner()?)?;
            }
            let undecided = preds.iter().filter(|p| p.outcome == Outcome::Undecided).count();
            log::info!("{undecided} of {} rows undecided at threshold {threshold}", preds.len());
        }
        None => {
            let preds = art.model.predict(&data, &options(&c))?;
            out.write("predictions.csv", &predictions_csv(&preds)?)?;
        }
    }
    out.commit();
    Ok(())
}

pub fn report(args: &RunArgs) -> Result<()> {
    let c = RunConfig::resolve(args)?;
    let kinds = c.require_models()?;
    ensure!(kinds.len() == 1, "report takes a single --model");
    let kind = kinds[0];
    ensure!(kind.is_tree(), "feature importance needs a tree model (rf, xgb, dt), not {kind}");
    let art = load_artifact(&c, kind)?;
    let layout = art.encoder.layout();
    let names = layout.feature_names();
    let imp = art.model.importance(names.len())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "importance", "rank"])?;
    for (name, v, rank) in ranked(&names, &imp) {
        w.write_record([name, v.to_string(), rank.to_string()])?;
    }
    let mut out = Outputs::new(&c.out)?;
    out.write("importance.csv", &w.into_inner()?)?;
    out.commit();
    Ok(())
}
