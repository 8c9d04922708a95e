//! Binary classification toolkit for tabular billing data.
//!
//! Seven model families share one encoded feature space: a Bayesian neural
//! network trained by variational inference (with posterior-predictive
//! uncertainty and an explicit "undecided" outcome), a deep network with
//! entity embeddings, a decision tree, a random forest, first-order gradient
//! boosting, logistic regression and multinomial naive Bayes.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod baselines;
pub mod bnn;
pub mod data;
pub mod diffcore;
pub mod dnn;
pub mod error;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod seed;
pub mod trees;

pub use artifact::ModelArtifact;
pub use bnn::{Outcome, PosteriorPredictive};
pub use data::{Dataset, EncodedDataset, FeatureSchema};
pub use error::{Error, Result};
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use models::{ModelConfig, ModelKind, PredictOptions, Prediction, TrainedModel};
pub use pipeline::{PipelineConfig, Prepared};

#[cfg(test)]
mod testutil;
