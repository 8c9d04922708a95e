use crate::error::{Error, Result};

fn check(y_true: &[u8], scores: &[f64]) -> Result<(f64, f64)> {
    if y_true.len() != scores.len() {
        return Err(Error::Shape(format!("{} labels but {} scores", y_true.len(), scores.len())));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Input(format!("score {s} is not a number")));
    }
    let mut n = [0.0; 2];
    for &t in y_true {
        match t {
            0 | 1 => n[t as usize] += 1.0,
            _ => return Err(Error::Input(format!("label {t} is not binary"))),
        }
    }
    if n[0] == 0.0 || n[1] == 0.0 {
        return Err(Error::Input("roc auc needs both classes".into()));
    }
    Ok((n[0], n[1]))
}

/// `(fpr, tpr)` points from the strictest threshold down, one per distinct
/// score, starting at `(0, 0)`.
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (neg, pos) = check(y_true, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / neg, tp / pos));
    }
    Ok(points)
}

/// Trapezoidal area under the ROC curve. Tied scores form one diagonal
/// segment, so ties count one half. Accumulated in integer counts.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    let (neg, pos) = check(y_true, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    // twice the area in units of one (negative, positive) pair
    let mut twice: u128 = 0;
    let mut tp: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut dtp, mut dfp) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        twice += dfp * (2 * tp + dtp);
        tp += dtp;
    }
    Ok(twice as f64 / (2.0 * neg * pos))
}
