use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::tree::{grow_tree_weighted, predict_tree, Criterion, TreeConfig, TreeNode};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Rows drawn with replacement per tree; `None` draws as many as there
    /// are training rows.
    pub sample_size: Option<usize>,
    pub bootstrap: bool,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            sample_size: None,
            bootstrap: true,
            tree: TreeConfig {
                criterion: Criterion::Gini,
                ..TreeConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub sample_size: usize,
    pub config: ForestConfig,
}

pub fn fit_forest(x: &FeatureMatrix, labels: &[u8], config: &ForestConfig) -> Result<ForestModel> {
    if config.n_trees == 0 {
        return Err(Error::Config("a forest needs at least one tree".into()));
    }
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::Input("cannot fit a forest on zero rows".into()));
    }
    let sample_size = config.sample_size.unwrap_or(n);
    if sample_size == 0 {
        return Err(Error::Config("sample_size must be at least 1".into()));
    }
    let orders = x.sorted_orders();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let weights = if config.bootstrap {
                let mut rng = seed::stream(config.seed, t as u64);
                let mut w = vec![0.0; n];
                for _ in 0..sample_size {
                    w[rng.gen_range(0..n)] += 1.0;
                }
                w
            } else {
                vec![1.0; n]
            };
            grow_tree_weighted(x, labels, &weights, &orders, &config.tree)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        sample_size,
        config: config.clone(),
    })
}

/// Majority vote (ties to class 0) and the fraction of trees voting 1.
pub fn predict_forest(model: &ForestModel, row: &[f64]) -> (u8, f64) {
    let ones = model.trees.iter().filter(|t| predict_tree(t, row).0 == 1).count();
    let frac = ones as f64 / model.trees.len() as f64;
    (u8::from(2 * ones > model.trees.len()), frac)
}
