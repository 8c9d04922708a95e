use super::forest::ForestModel;
use super::gbm::GbmModel;
use super::tree::TreeNode;
use crate::error::{Error, Result};

/// Σ over internal nodes of (node row fraction × gain), summed across
/// trees and normalized to sum to one. All zeros when no tree splits.
pub fn feature_importance<'a>(trees: impl IntoIterator<Item = &'a TreeNode>, n_features: usize) -> Result<Vec<f64>> {
    let mut imp = vec![0.0; n_features];
    let mut any = false;
    for t in trees {
        any = true;
        if let Some(f) = t.max_feature() {
            if f >= n_features {
                return Err(Error::Shape(format!("tree uses feature {f} of {n_features}")));
            }
        }
        let root = t.weight();
        t.visit_internal(&mut |f, w, gain| imp[f] += w / root * gain);
    }
    if !any {
        return Err(Error::Untrained);
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        imp.iter_mut().for_each(|v| *v /= total);
    }
    Ok(imp)
}

impl ForestModel {
    pub fn importance(&self, n_features: usize) -> Result<Vec<f64>> {
        feature_importance(&self.trees, n_features)
    }
}

impl GbmModel {
    pub fn importance(&self, n_features: usize) -> Result<Vec<f64>> {
        feature_importance(&self.stages, n_features)
    }
}

/// `(feature, importance, rank)` sorted by decreasing importance; ties keep
/// feature order. Ranks start at 1.
pub fn ranked(names: &[String], importance: &[f64]) -> Vec<(String, f64, usize)> {
    let mut idx: Vec<usize> = (0..importance.len()).collect();
    idx.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    idx.into_iter()
        .enumerate()
        .map(|(rank, i)| (names[i].clone(), importance[i], rank + 1))
        .collect()
}
