//! Decision tree, bootstrap forest and first-order gradient boosting.

mod forest;
mod gbm;
mod importance;
mod matrix;
mod tree;

pub use forest::{fit_forest, predict_forest, ForestConfig, ForestModel};
pub use gbm::{fit_gbm, predict_gbm, GbmConfig, GbmLoss, GbmModel};
pub use importance::{feature_importance, ranked};
pub use matrix::{FeatureKind, FeatureMatrix};
pub use tree::{
    best_split, best_split_any, grow_tree, impurity, predict_tree, Criterion, Split, SplitChoice, TreeConfig,
    TreeNode, GAIN_EPS,
};
