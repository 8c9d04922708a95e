use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use propensity_core::ModelKind;
use serde::Deserialize;
use serde_json::Value;

use crate::args::{parse_models, RunArgs};

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: Option<PathBuf>,
    schema: Option<PathBuf>,
    model: Option<Value>,
    artifact: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threshold: Option<f64>,
    samples: Option<usize>,
    test_fraction: Option<f64>,
    oversample: Option<bool>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub models: Vec<ModelKind>,
    pub artifact: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub threshold: Option<f64>,
    pub samples: Option<usize>,
    pub test_fraction: Option<f64>,
    pub oversample: Option<bool>,
    /// Hyperparameter overrides in application order.
    pub params: Vec<(String, Value)>,
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn file_models(v: &Value) -> Result<Vec<ModelKind>> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_str().map(str::to_string).context("model list entries must be strings"))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("`model` must be a string or a list of strings"),
    };
    parse_models(&text).map(|m| m.0).map_err(anyhow::Error::msg)
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                serde_json::from_str::<FileConfig>(&text).with_context(|| format!("invalid config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let models = match (&args.model, &file.model) {
            (Some(m), _) => m.0.clone(),
            (None, Some(v)) => file_models(v)?,
            (None, None) => Vec::new(),
        };

        let mut params: Vec<(String, Value)> = file.params.into_iter().collect();
        let h = &args.hyper;
        let mut flag = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                params.push((key.to_string(), v));
            }
        };
        flag("n_trees", h.n_trees.map(Value::from));
        flag("n_stages", h.n_stages.map(Value::from));
        flag("max_depth", h.max_depth.map(Value::from));
        flag("criterion", h.criterion.clone().map(Value::from));
        flag("min_samples_leaf", h.min_samples_leaf.map(Value::from));
        flag("min_samples_split", h.min_samples_split.map(Value::from));
        flag("learning_rate", h.learning_rate.map(Value::from));
        flag("epochs", h.epochs.map(Value::from));
        flag("batch_size", h.batch_size.map(Value::from));
        flag("c", h.c.map(Value::from));
        flag("max_iter", h.max_iter.map(Value::from));
        flag("tol", h.tol.map(Value::from));
        flag("alpha", h.alpha.map(Value::from));
        flag("kl_weight", h.kl_weight.map(Value::from));
        if let Some(hidden) = &h.hidden {
            let units = hidden
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("--hidden expects numbers, got `{hidden}`"))?;
            params.push(("hidden".into(), Value::from(units)));
        }
        for raw in &args.params {
            let Some((k, v)) = raw.split_once('=') else {
                bail!("--param expects KEY=VALUE, got `{raw}`");
            };
            params.push((k.trim().to_string(), parse_value(v.trim())));
        }

        Ok(RunConfig {
            data: args.data.clone().or(file.data),
            schema: args.schema.clone().or(file.schema),
            models,
            artifact: args.artifact.clone().or(file.artifact),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            threshold: args.threshold.or(file.threshold),
            samples: args.samples.or(file.samples),
            test_fraction: args.test_fraction.or(file.test_fraction),
            oversample: args.oversample.or(file.oversample),
            params,
        })
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().context("--data is required")
    }

    pub fn schema_path(&self) -> Result<PathBuf> {
        if let Some(s) = &self.schema {
            return Ok(s.clone());
        }
        let data = self.data_path()?;
        Ok(data.parent().unwrap_or(Path::new(".")).join("schema.json"))
    }

    pub fn require_models(&self) -> Result<&[ModelKind]> {
        if self.models.is_empty() {
            bail!("--model is required (one of bnn, dnn, rf, xgb, dt, lr, mnb, or a comma list)");
        }
        Ok(&self.models)
    }

    pub fn artifact_path(&self, kind: ModelKind) -> PathBuf {
        let file = format!("model.{kind}.json");
        match (&self.artifact, self.models.len()) {
            (Some(p), _) if p.is_dir() => p.join(file),
            (Some(p), 1) => p.clone(),
            _ => self.out.join(file),
        }
    }
}
