//! Variational Bayesian network with posterior-predictive uncertainty and
//! abstention.

mod model;
mod predictive;
mod variational;

pub use model::{build_bnn, Activation, train_bnn, BnnConfig, BnnModel, Noise, VariationalLayer};
pub use predictive::{
    decide, decided_accuracy, histogram_report, mean_forward, posterior_predictive,
    posterior_predictive_batch, ClassHistogram, Decision, Outcome, PosteriorPredictive,
};
pub use variational::{kl_gaussian, sample_weights, GaussianVariational};

#[cfg(test)]
mod tests;
