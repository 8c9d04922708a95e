use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::tree::{build, Criterion, Target, TreeConfig, TreeNode};
use crate::diffcore::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GbmLoss {
    /// `½(y − F)²`; the score is used directly as a probability (clamped).
    Squared,
    /// Log-loss on `σ(F)`; stages fit `y − σ(F)`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub loss: GbmLoss,
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_stages: 300,
            learning_rate: 0.1,
            max_depth: 5,
            min_samples_leaf: 1,
            loss: GbmLoss::Logistic,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub initial: f64,
    pub stages: Vec<TreeNode>,
    pub learning_rate: f64,
    pub loss: GbmLoss,
    /// Mean training loss after each stage (index 0 is `F₀` alone).
    pub train_loss: Vec<f64>,
    pub config: GbmConfig,
}

fn mean_loss(loss: GbmLoss, y: &[f64], f: &[f64]) -> f64 {
    let total: f64 = match loss {
        GbmLoss::Squared => y.iter().zip(f).map(|(y, f)| 0.5 * (y - f) * (y - f)).sum(),
        GbmLoss::Logistic => y
            .iter()
            .zip(f)
            .map(|(y, f)| {
                // ln(1 + e^f) − y·f, computed stably
                let sp = if *f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
                sp - y * f
            })
            .sum(),
    };
    total / y.len() as f64
}

pub fn fit_gbm(x: &FeatureMatrix, labels: &[u8], config: &GbmConfig) -> Result<GbmModel> {
    if config.n_stages == 0 {
        return Err(Error::Config("gbm needs at least one stage".into()));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate <= 1.0) {
        return Err(Error::Config("learning_rate must be in [0, 1]".into()));
    }
    let n = x.n_rows();
    if n == 0 || labels.len() != n {
        return Err(Error::Input("gbm needs one label per row and at least one row".into()));
    }
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let rate = y.iter().sum::<f64>() / n as f64;
    let initial = match config.loss {
        GbmLoss::Squared => rate,
        GbmLoss::Logistic => {
            let p = rate.clamp(1e-12, 1.0 - 1e-12);
            (p / (1.0 - p)).ln()
        }
    };
    let tree_cfg = TreeConfig {
        criterion: Criterion::Gini,
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        min_samples_split: 2,
    };
    tree_cfg.validate()?;
    let orders = x.sorted_orders();
    let weights = vec![1.0; n];
    let mut f = vec![initial; n];
    let mut train_loss = vec![mean_loss(config.loss, &y, &f)];
    let mut stages = Vec::with_capacity(config.n_stages);
    let mut residual = vec![0.0; n];
    for stage in 0..config.n_stages {
        for i in 0..n {
            residual[i] = match config.loss {
                GbmLoss::Squared => y[i] - f[i],
                GbmLoss::Logistic => y[i] - sigmoid(f[i]),
            };
        }
        let tree = build(x, &orders, Target::Regress { y: &residual }, &weights, &tree_cfg);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += config.learning_rate * tree.value_at(x, i);
        }
        train_loss.push(mean_loss(config.loss, &y, &f));
        log::debug!("gbm stage {}: loss {:.6}", stage + 1, train_loss[stage + 1]);
        stages.push(tree);
    }
    Ok(GbmModel {
        initial,
        stages,
        learning_rate: config.learning_rate,
        loss: config.loss,
        train_loss,
        config: config.clone(),
    })
}

impl GbmModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.initial + self.learning_rate * self.stages.iter().map(|t| t.value(row)).sum::<f64>()
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        let s = self.score(row);
        match self.loss {
            GbmLoss::Squared => s.clamp(0.0, 1.0),
            GbmLoss::Logistic => sigmoid(s),
        }
    }
}

/// Class (probability above ½) and positive-class probability.
pub fn predict_gbm(model: &GbmModel, row: &[f64]) -> (u8, f64) {
    let p = model.probability(row);
    (u8::from(p > 0.5), p)
}
