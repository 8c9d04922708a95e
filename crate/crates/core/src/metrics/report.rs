use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{basic_metrics, cohen_kappa, confusion, harmonic, ratio, roc_auc, ConfusionMatrix};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    /// `"0"`, `"1"`, `"macro avg"` or `"weighted avg"`.
    pub label: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClasswiseReport {
    pub classes: [ClassRow; 2],
    pub macro_avg: ClassRow,
    pub weighted_avg: ClassRow,
}

impl ClasswiseReport {
    pub fn rows(&self) -> [&ClassRow; 4] {
        [&self.classes[0], &self.classes[1], &self.macro_avg, &self.weighted_avg]
    }
}

fn class_row(label: &str, cm: &ConfusionMatrix) -> ClassRow {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    ClassRow {
        label: label.into(),
        precision,
        recall,
        f1: harmonic(precision, recall),
        support: cm.tp + cm.fn_,
    }
}

fn average(label: &str, rows: &[ClassRow; 2], weights: [f64; 2]) -> ClassRow {
    let mix = |get: fn(&ClassRow) -> Option<f64>| Some(get(&rows[0])? * weights[0] + get(&rows[1])? * weights[1]);
    ClassRow {
        label: label.into(),
        precision: mix(|r| r.precision),
        recall: mix(|r| r.recall),
        f1: mix(|r| r.f1),
        support: rows[0].support + rows[1].support,
    }
}

/// Per-class rows (class 0 scored with 0 as the positive class) plus macro
/// and support-weighted averages.
pub fn classwise_report(cm: &ConfusionMatrix) -> ClasswiseReport {
    let classes = [class_row("0", &cm.swapped()), class_row("1", cm)];
    let total = (classes[0].support + classes[1].support) as f64;
    let weights = if total > 0.0 {
        [classes[0].support as f64 / total, classes[1].support as f64 / total]
    } else {
        [f64::NAN; 2]
    };
    let mut weighted_avg = average("weighted avg", &classes, weights);
    if total == 0.0 {
        weighted_avg.precision = None;
        weighted_avg.recall = None;
        weighted_avg.f1 = None;
    }
    ClasswiseReport {
        macro_avg: average("macro avg", &classes, [0.5, 0.5]),
        weighted_avg,
        classes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub kappa: Option<f64>,
    /// Over every row with a score, decided or not; `None` without scores or
    /// with a single class present.
    pub auc: Option<f64>,
    pub abstention_rate: Option<f64>,
    pub classwise: ClasswiseReport,
}

impl MetricsReport {
    pub fn from_confusion(model: impl Into<String>, cm: ConfusionMatrix, auc: Option<f64>) -> Self {
        let b = basic_metrics(&cm);
        MetricsReport {
            model: model.into(),
            confusion: cm,
            accuracy: b.accuracy,
            precision: b.precision,
            recall: b.recall,
            f1: b.f1,
            kappa: cohen_kappa(&cm),
            auc,
            abstention_rate: cm.abstention_rate(),
            classwise: classwise_report(&cm),
        }
    }
}

pub fn evaluate(model: &str, y_true: &[u8], y_pred: &[Option<u8>], scores: Option<&[f64]>) -> Result<MetricsReport> {
    let cm = confusion(y_true, y_pred)?;
    let auc = match scores {
        Some(s) => {
            let both = y_true.contains(&0) && y_true.contains(&1);
            if both {
                Some(roc_auc(y_true, s)?)
            } else {
                None
            }
        }
        None => None,
    };
    Ok(MetricsReport::from_confusion(model, cm, auc))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.3}"))
}

/// Measures as rows, one column per model.
pub fn write_table_csv<W: Write>(reports: &[MetricsReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["Measure".to_string()];
    header.extend(reports.iter().map(|r| r.model.clone()));
    w.write_record(&header)?;
    type Cell = fn(&MetricsReport) -> String;
    let rows: [(&str, Cell); 11] = [
        ("TP", |r| r.confusion.tp.to_string()),
        ("TN", |r| r.confusion.tn.to_string()),
        ("FP", |r| r.confusion.fp.to_string()),
        ("FN", |r| r.confusion.fn_.to_string()),
        ("Accuracy", |r| fmt(r.accuracy)),
        ("Precision", |r| fmt(r.precision)),
        ("Recall", |r| fmt(r.recall)),
        ("F1-score", |r| fmt(r.f1)),
        ("Kappa Score", |r| fmt(r.kappa)),
        ("AUC", |r| fmt(r.auc)),
        ("Undecided", |r| r.confusion.abstained.to_string()),
    ];
    for (name, cell) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(reports.iter().map(cell));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| crate::Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_classwise_csv<W: Write>(reports: &[MetricsReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "class", "precision", "recall", "f1", "support"])?;
    for r in reports {
        for row in r.classwise.rows() {
            w.write_record([
                r.model.clone(),
                row.label.clone(),
                fmt(row.precision),
                fmt(row.recall),
                fmt(row.f1),
                row.support.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| crate::Error::io("<csv>", e))?;
    Ok(())
}
