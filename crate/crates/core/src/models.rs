//! One entry point for the seven model families: configuration defaults,
//! training on a prepared split, prediction and importance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::{fit_logistic, fit_mnb, predict_logistic, predict_mnb, LogisticConfig, LogisticModel, MnbModel, SparseRow};
use crate::bnn::{build_bnn, decide, posterior_predictive_batch, train_bnn, BnnConfig, BnnModel, Outcome, PosteriorPredictive};
use crate::data::EncodedDataset;
use crate::dnn::{build_dnn, predict_proba_dnn, train_dnn, DnnConfig, DnnModel};
use crate::error::{Error, Result};
use crate::trees::{
    feature_importance, fit_forest, fit_gbm, grow_tree, predict_forest, predict_gbm, predict_tree, Criterion, FeatureMatrix,
    ForestConfig, ForestModel, GbmConfig, GbmLoss, GbmModel, TreeConfig, TreeNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bnn,
    Dnn,
    Rf,
    Xgb,
    Dt,
    Lr,
    Mnb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Bnn,
        ModelKind::Dnn,
        ModelKind::Rf,
        ModelKind::Xgb,
        ModelKind::Dt,
        ModelKind::Lr,
        ModelKind::Mnb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bnn => "bnn",
            ModelKind::Dnn => "dnn",
            ModelKind::Rf => "rf",
            ModelKind::Xgb => "xgb",
            ModelKind::Dt => "dt",
            ModelKind::Lr => "lr",
            ModelKind::Mnb => "mnb",
        }
    }

    pub fn is_tree(self) -> bool {
        matches!(self, ModelKind::Rf | ModelKind::Xgb | ModelKind::Dt)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_lowercase();
        if s == "gbm" {
            return Ok(ModelKind::Xgb);
        }
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`; expected one of bnn, dnn, rf, xgb (gbm), dt, lr, mnb")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbConfig {
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Bnn(BnnConfig),
    Dnn(DnnConfig),
    Rf(ForestConfig),
    Xgb(GbmConfig),
    Dt(TreeConfig),
    Lr(LogisticConfig),
    Mnb(MnbConfig),
}

impl ModelConfig {
    /// Published hyperparameters where they exist.
    pub fn defaults(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::Bnn => ModelConfig::Bnn(BnnConfig {
                seed,
                ..BnnConfig::default()
            }),
            ModelKind::Dnn => ModelConfig::Dnn(DnnConfig {
                seed,
                ..DnnConfig::default()
            }),
            ModelKind::Rf => ModelConfig::Rf(ForestConfig {
                n_trees: 200,
                sample_size: None,
                bootstrap: true,
                tree: TreeConfig {
                    criterion: Criterion::Gini,
                    max_depth: 5,
                    min_samples_leaf: 1,
                    min_samples_split: 2,
                },
                seed,
            }),
            ModelKind::Xgb => ModelConfig::Xgb(GbmConfig {
                n_stages: 300,
                learning_rate: 0.1,
                max_depth: 5,
                min_samples_leaf: 1,
                loss: GbmLoss::Logistic,
                seed,
            }),
            ModelKind::Dt => ModelConfig::Dt(TreeConfig {
                criterion: Criterion::Entropy,
                max_depth: 5,
                min_samples_leaf: 1,
                min_samples_split: 2,
            }),
            ModelKind::Lr => ModelConfig::Lr(LogisticConfig {
                c: 1.0,
                max_iter: 100,
                tol: 1e-4,
            }),
            ModelKind::Mnb => ModelConfig::Mnb(MnbConfig {
                alpha: crate::baselines::DEFAULT_ALPHA,
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Bnn(_) => ModelKind::Bnn,
            ModelConfig::Dnn(_) => ModelKind::Dnn,
            ModelConfig::Rf(_) => ModelKind::Rf,
            ModelConfig::Xgb(_) => ModelKind::Xgb,
            ModelConfig::Dt(_) => ModelKind::Dt,
            ModelConfig::Lr(_) => ModelKind::Lr,
            ModelConfig::Mnb(_) => ModelKind::Mnb,
        }
    }

    /// Sets a hyperparameter by field name, looking one level into nested
    /// sections (a forest's `tree`). Unknown names are errors.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let kind = self.kind();
        let mut v = serde_json::to_value(&*self)?;
        let obj = v.as_object_mut().expect("configs serialize as objects");
        let slot = if key != "kind" && obj.contains_key(key) {
            obj.get_mut(key)
        } else {
            obj.values_mut()
                .filter_map(Value::as_object_mut)
                .find(|inner| inner.contains_key(key))
                .and_then(|inner| inner.get_mut(key))
        };
        let slot = slot.ok_or_else(|| Error::Config(format!("model {kind} has no parameter `{key}`")))?;
        // `hidden = [n]` is accepted by the single-layer bnn
        *slot = match value {
            Value::Array(mut a) if a.len() == 1 && !slot.is_array() => a.remove(0),
            v => v,
        };
        *self = serde_json::from_value(v).map_err(|e| Error::Config(format!("parameter `{key}`: {e}")))?;
        Ok(())
    }
}

/// A fitted single tree together with its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub tree: TreeNode,
    pub config: TreeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum TrainedModel {
    Bnn(BnnModel),
    Dnn(DnnModel),
    Rf(ForestModel),
    Xgb(GbmModel),
    Dt(DecisionTree),
    Lr(LogisticModel),
    Mnb(MnbModel),
}

/// One line of a training log: an epoch, boosting stage or solver step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub outcome: Outcome,
    /// Probability of class 1 (the posterior median for the BNN).
    pub probability: f64,
    /// Max per-class posterior std-dev; zero for point-estimate models.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PredictOptions {
    /// BNN decision threshold; the trained config's when `None`.
    pub threshold: Option<f64>,
    /// BNN posterior sample count; the trained config's when `None`.
    pub samples: Option<usize>,
}

fn one_hot_rows(data: &EncodedDataset) -> Vec<SparseRow> {
    (0..data.len()).map(|i| data.one_hot_entries(i)).collect()
}

fn count_rows(data: &EncodedDataset) -> Vec<SparseRow> {
    (0..data.len())
        .map(|i| data.count_entries(i).into_iter().map(|j| (j, 1.0)).collect())
        .collect()
}

/// Trains on `train`; the log holds per-epoch, per-stage or per-step loss.
pub fn train_model(config: &ModelConfig, train: &EncodedDataset) -> Result<(TrainedModel, Vec<LogEntry>)> {
    if train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let entries = |losses: &mut dyn Iterator<Item = f64>| losses.enumerate().map(|(step, loss)| LogEntry { step, loss }).collect();
    Ok(match config {
        ModelConfig::Bnn(c) => {
            let mut m = build_bnn(&train.layout, c.clone())?;
            let log = train_bnn(&mut m, train, None)?;
            let log = log.iter().map(|e| LogEntry { step: e.epoch, loss: e.train_loss }).collect();
            (TrainedModel::Bnn(m), log)
        }
        ModelConfig::Dnn(c) => {
            let mut m = build_dnn(&train.layout, c.clone())?;
            let log = train_dnn(&mut m, train, None)?;
            let log = log.iter().map(|e| LogEntry { step: e.epoch, loss: e.train_loss }).collect();
            (TrainedModel::Dnn(m), log)
        }
        ModelConfig::Rf(c) => {
            let x = FeatureMatrix::from_encoded(train);
            (TrainedModel::Rf(fit_forest(&x, &train.labels, c)?), Vec::new())
        }
        ModelConfig::Xgb(c) => {
            let x = FeatureMatrix::from_encoded(train);
            let m = fit_gbm(&x, &train.labels, c)?;
            let log = entries(&mut m.train_loss.iter().copied());
            (TrainedModel::Xgb(m), log)
        }
        ModelConfig::Dt(c) => {
            let x = FeatureMatrix::from_encoded(train);
            let tree = grow_tree(&x, &train.labels, c)?;
            (TrainedModel::Dt(DecisionTree { tree, config: c.clone() }), Vec::new())
        }
        ModelConfig::Lr(c) => {
            let m = fit_logistic(&one_hot_rows(train), &train.labels, train.layout.one_hot_width(), c)?;
            let log = entries(&mut m.objective_trace.iter().copied());
            (TrainedModel::Lr(m), log)
        }
        ModelConfig::Mnb(c) => {
            let m = fit_mnb(&count_rows(train), &train.labels, train.layout.count_width(), c.alpha)?;
            (TrainedModel::Mnb(m), Vec::new())
        }
    })
}

fn point(p1: f64) -> Prediction {
    Prediction {
        outcome: Outcome::Class(u8::from(p1 > 0.5)),
        probability: p1,
        spread: 0.0,
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Bnn(_) => ModelKind::Bnn,
            TrainedModel::Dnn(_) => ModelKind::Dnn,
            TrainedModel::Rf(_) => ModelKind::Rf,
            TrainedModel::Xgb(_) => ModelKind::Xgb,
            TrainedModel::Dt(_) => ModelKind::Dt,
            TrainedModel::Lr(_) => ModelKind::Lr,
            TrainedModel::Mnb(_) => ModelKind::Mnb,
        }
    }

    /// Posterior predictive per row; `None` for point-estimate models.
    pub fn posterior(&self, data: &EncodedDataset, samples: Option<usize>) -> Option<Result<Vec<PosteriorPredictive>>> {
        let TrainedModel::Bnn(m) = self else { return None };
        let rows: Vec<usize> = (0..data.len()).collect();
        Some(posterior_predictive_batch(m, data, &rows, samples.unwrap_or(m.config.samples)))
    }

    pub fn predict(&self, data: &EncodedDataset, opts: &PredictOptions) -> Result<Vec<Prediction>> {
        match self {
            TrainedModel::Bnn(m) => {
                let pps = self.posterior(data, opts.samples).expect("bnn has a posterior")?;
                Ok(predict_from_posterior(&pps, opts.threshold.unwrap_or(m.config.threshold)))
            }
            TrainedModel::Dnn(m) => Ok(predict_proba_dnn(m, data)?.iter().map(|p| point(p[1])).collect()),
            TrainedModel::Rf(m) => {
                let x = self.matrix(data)?;
                Ok((0..data.len())
                    .map(|i| {
                        let (c, p) = predict_forest(m, &x.row(i));
                        Prediction {
                            outcome: Outcome::Class(c),
                            probability: p,
                            spread: 0.0,
                        }
                    })
                    .collect())
            }
            TrainedModel::Xgb(m) => {
                let x = self.matrix(data)?;
                Ok((0..data.len())
                    .map(|i| {
                        let (c, p) = predict_gbm(m, &x.row(i));
                        Prediction {
                            outcome: Outcome::Class(c),
                            probability: p,
                            spread: 0.0,
                        }
                    })
                    .collect())
            }
            TrainedModel::Dt(t) => {
                let x = self.matrix(data)?;
                Ok((0..data.len())
                    .map(|i| {
                        let (c, p) = predict_tree(&t.tree, &x.row(i));
                        Prediction {
                            outcome: Outcome::Class(c),
                            probability: p,
                            spread: 0.0,
                        }
                    })
                    .collect())
            }
            TrainedModel::Lr(m) => one_hot_rows(data).iter().map(|r| Ok(point(predict_logistic(m, r)?))).collect(),
            TrainedModel::Mnb(m) => count_rows(data).iter().map(|r| Ok(point(predict_mnb(m, r)?[1]))).collect(),
        }
    }

    fn matrix(&self, data: &EncodedDataset) -> Result<FeatureMatrix> {
        let x = FeatureMatrix::from_encoded(data);
        let needed = self.trees().iter().filter_map(|t| t.max_feature()).max();
        if let Some(f) = needed {
            if f >= x.n_features() {
                return Err(Error::Shape(format!("model uses feature {f} but data has {}", x.n_features())));
            }
        }
        Ok(x)
    }

    fn trees(&self) -> Vec<&TreeNode> {
        match self {
            TrainedModel::Rf(m) => m.trees.iter().collect(),
            TrainedModel::Xgb(m) => m.stages.iter().collect(),
            TrainedModel::Dt(t) => vec![&t.tree],
            _ => Vec::new(),
        }
    }

    /// Normalized gain importance; an error for non-tree models.
    pub fn importance(&self, n_features: usize) -> Result<Vec<f64>> {
        if !self.kind().is_tree() {
            return Err(Error::Input(format!("feature importance needs a tree model, not {}", self.kind())));
        }
        feature_importance(self.trees(), n_features)
    }
}

/// Median-probability decisions from precomputed posteriors.
pub fn predict_from_posterior(pps: &[PosteriorPredictive], threshold: f64) -> Vec<Prediction> {
    pps.iter()
        .map(|pp| {
            let d = decide(pp, threshold);
            Prediction {
                outcome: d.outcome,
                probability: pp.medians()[1],
                spread: d.spread,
            }
        })
        .collect()
}
