use serde::{Deserialize, Serialize};

use super::SparseRow;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    /// Summed feature frequencies per class.
    pub feature_counts: [Vec<f64>; 2],
    pub log_prior: [f64; 2],
    pub alpha: f64,
    /// Smoothed `log p(f | c)`.
    pub log_likelihood: [Vec<f64>; 2],
}

impl MnbModel {
    pub fn from_counts(feature_counts: [Vec<f64>; 2], prior: [f64; 2], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        let width = feature_counts[0].len();
        if feature_counts[1].len() != width || width == 0 {
            return Err(Error::Shape("class count vectors must share a nonzero width".into()));
        }
        if feature_counts.iter().flatten().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::Input("feature counts must be finite and nonnegative".into()));
        }
        if prior.iter().any(|&p| !(p > 0.0)) || (prior[0] + prior[1] - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("invalid class prior {prior:?}")));
        }
        let log_likelihood = [0, 1].map(|c| {
            let denom = (feature_counts[c].iter().sum::<f64>() + alpha * width as f64).ln();
            feature_counts[c].iter().map(|&n| (n + alpha).ln() - denom).collect()
        });
        Ok(MnbModel {
            feature_counts,
            log_prior: prior.map(f64::ln),
            alpha,
            log_likelihood,
        })
    }

    pub fn width(&self) -> usize {
        self.feature_counts[0].len()
    }
}

/// Fits on rows of nonnegative feature frequencies.
pub fn fit_mnb(x: &[SparseRow], y: &[u8], width: usize, alpha: f64) -> Result<MnbModel> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    if x.is_empty() {
        return Err(Error::Input("no training rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let mut counts = [vec![0.0; width], vec![0.0; width]];
    let mut class_n = [0usize; 2];
    for (row, &label) in x.iter().zip(y) {
        let c = match label {
            0 | 1 => label as usize,
            l => return Err(Error::Input(format!("label {l} is not binary"))),
        };
        class_n[c] += 1;
        for &(j, v) in row {
            if j >= width {
                return Err(Error::Shape(format!("feature {j} outside width {width}")));
            }
            counts[c][j] += v;
        }
    }
    if class_n.contains(&0) {
        return Err(Error::Input("both classes must be present".into()));
    }
    let n = x.len() as f64;
    MnbModel::from_counts(counts, class_n.map(|k| k as f64 / n), alpha)
}

/// Class posterior `[p(0 | x), p(1 | x)]`.
pub fn predict_mnb(model: &MnbModel, row: &[(usize, f64)]) -> Result<[f64; 2]> {
    let mut log = model.log_prior;
    for &(j, v) in row {
        if j >= model.width() {
            return Err(Error::Shape(format!("feature {j} outside model width {}", model.width())));
        }
        if !(v >= 0.0) {
            return Err(Error::Input(format!("negative frequency {v}")));
        }
        for c in 0..2 {
            log[c] += v * model.log_likelihood[c][j];
        }
    }
    let m = log[0].max(log[1]);
    let e = log.map(|l| (l - m).exp());
    let s = e[0] + e[1];
    Ok([e[0] / s, e[1] / s])
}
