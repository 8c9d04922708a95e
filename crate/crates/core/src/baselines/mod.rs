//! Linear and count-based reference models.

mod logistic;
mod mnb;

pub use logistic::{fit_logistic, logistic_objective, predict_logistic, LogisticConfig, LogisticModel, Objective};
pub use mnb::{fit_mnb, predict_mnb, MnbModel, DEFAULT_ALPHA};

/// A sparse row: `(feature index, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[cfg(test)]
mod tests;
