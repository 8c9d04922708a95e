//! Confusion counts and the scores derived from them.
//!
//! Undefined ratios (zero denominators) are `None` and serialize as `null`;
//! they are never reported as zero.

mod auc;
mod report;

pub use auc::{roc_auc, roc_curve};
pub use report::{classwise_report, evaluate, write_classwise_csv, write_table_csv, ClassRow, ClasswiseReport, MetricsReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Undecided predictions, excluded from the four cells.
    pub abstained: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_, abstained: 0 }
    }

    /// Number of decided instances.
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn abstention_rate(&self) -> Option<f64> {
        ratio(self.abstained, self.total() + self.abstained)
    }

    /// The same counts with class 0 treated as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
            abstained: self.abstained,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(p: Option<f64>, r: Option<f64>) -> Option<f64> {
    let (p, r) = (p?, r?);
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

/// `y_pred[i] = None` marks an undecided prediction.
pub fn confusion(y_true: &[u8], y_pred: &[Option<u8>]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!("{} labels but {} predictions", y_true.len(), y_pred.len())));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t > 1 {
            return Err(Error::Input(format!("label {t} is not binary")));
        }
        match p {
            None => cm.abstained += 1,
            Some(1) if t == 1 => cm.tp += 1,
            Some(1) => cm.fp += 1,
            Some(0) if t == 0 => cm.tn += 1,
            Some(0) => cm.fn_ += 1,
            Some(p) => return Err(Error::Input(format!("prediction {p} is not binary"))),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn basic_metrics(cm: &ConfusionMatrix) -> BasicMetrics {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    BasicMetrics {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

/// `(OA − AC) / (1 − AC)`, undefined when chance agreement is 1.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Option<f64> {
    let n = cm.total() as f64;
    if n == 0.0 {
        return None;
    }
    let oa = (cm.tp + cm.tn) as f64 / n;
    let pred_pos = (cm.tp + cm.fp) as f64 / n;
    let true_pos = (cm.tp + cm.fn_) as f64 / n;
    let ac = pred_pos * true_pos + (1.0 - pred_pos) * (1.0 - true_pos);
    (ac < 1.0).then(|| (oa - ac) / (1.0 - ac))
}

#[cfg(test)]
mod tests;
