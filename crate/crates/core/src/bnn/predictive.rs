use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{sparse_inputs, BnnModel};
use super::variational::sample_weights;
use crate::data::EncodedDataset;
use crate::diffcore::{matmul, Tensor};
use crate::error::{Error, Result};
use crate::seed;

const PREDICT_STREAM: u64 = 0x5052_4544_4943_5400;

/// `S` class-probability samples for one instance, kept as natural-log
/// probabilities so saturated softmax outputs keep their tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorPredictive {
    pub log_probs: Vec<[f64; 2]>,
}

impl PosteriorPredictive {
    pub fn samples(&self) -> usize {
        self.log_probs.len()
    }

    pub fn probs(&self) -> Vec<[f64; 2]> {
        self.log_probs.iter().map(|l| [l[0].exp(), l[1].exp()]).collect()
    }

    fn class_probs(&self, k: usize) -> Vec<f64> {
        self.log_probs.iter().map(|l| l[k].exp()).collect()
    }

    pub fn medians(&self) -> [f64; 2] {
        [median(self.class_probs(0)), median(self.class_probs(1))]
    }

    /// Sample standard deviation (n − 1) per class; zero for a single sample.
    pub fn stds(&self) -> [f64; 2] {
        [sample_std(&self.class_probs(0)), sample_std(&self.class_probs(1))]
    }

    /// Max per-class sample std-dev.
    pub fn spread(&self) -> f64 {
        let s = self.stds();
        s[0].max(s[1])
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Class(u8),
    Undecided,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Class(k) => write!(f, "{k}"),
            Outcome::Undecided => f.write_str("undecided"),
        }
    }
}

impl Outcome {
    pub fn class(self) -> Option<u8> {
        match self {
            Outcome::Class(k) => Some(k),
            Outcome::Undecided => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub outcome: Outcome,
    /// Median probability of the chosen class, or the larger median when
    /// undecided.
    pub probability: f64,
    pub spread: f64,
}

/// Picks the class with the larger median probability if that median
/// exceeds `threshold` (ties go to class 0); otherwise undecided.
pub fn decide(pp: &PosteriorPredictive, threshold: f64) -> Decision {
    decide_medians(pp.medians(), threshold, pp.spread())
}

pub(crate) fn decide_medians(m: [f64; 2], threshold: f64, spread: f64) -> Decision {
    let k = usize::from(m[1] > m[0]);
    let outcome = if m[k] > threshold {
        Outcome::Class(k as u8)
    } else {
        Outcome::Undecided
    };
    Decision {
        outcome,
        probability: m[k],
        spread,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: u8,
    /// `counts.len() + 1` edges over log-probability.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub decided: bool,
}

/// Per-class histogram of log-probabilities over `[min sample, 0]`. A class
/// whose samples all sit at log-probability 0 gets a single bin.
pub fn histogram_report(pp: &PosteriorPredictive, bins: usize, threshold: f64) -> Result<Vec<ClassHistogram>> {
    if bins == 0 {
        return Err(Error::Config("histograms need at least one bin".into()));
    }
    let decided = decide(pp, threshold).outcome.class();
    let mut out = Vec::with_capacity(2);
    for k in 0..2 {
        let vals: Vec<f64> = pp.log_probs.iter().map(|l| l[k].min(0.0)).collect();
        let lo = vals.iter().copied().fold(0.0, f64::min);
        let (edges, counts) = if lo == 0.0 {
            (vec![0.0, 0.0], vec![vals.len()])
        } else {
            let width = -lo / bins as f64;
            let edges: Vec<f64> = (0..=bins)
                .map(|b| if b == bins { 0.0 } else { lo + width * b as f64 })
                .collect();
            let mut counts = vec![0; bins];
            for v in vals {
                let b = (((v - lo) / width).floor() as usize).min(bins - 1);
                counts[b] += 1;
            }
            (edges, counts)
        };
        out.push(ClassHistogram {
            class: k as u8,
            edges,
            counts,
            decided: decided == Some(k as u8),
        });
    }
    Ok(out)
}

fn log_softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

impl BnnModel {
    /// Weights of posterior sample `s`; depends only on the model seed and
    /// `s`, so any batching or scheduling of samples gives the same result.
    pub fn sampled_weights(&self, s: usize) -> Result<Vec<(Tensor, Tensor)>> {
        let mut rng = seed::stream(self.config.seed ^ PREDICT_STREAM, s as u64);
        let noise = self.draw_noise(&mut rng);
        self.weights_with_noise(&noise)
    }

    pub fn weights_with_noise(&self, noise: &[Tensor]) -> Result<Vec<(Tensor, Tensor)>> {
        self.layers
            .iter()
            .zip(noise.chunks(2))
            .map(|(l, n)| Ok((sample_weights(&l.w, &n[0])?, sample_weights(&l.b, &n[1])?)))
            .collect()
    }

    /// Log-probabilities of every row under fixed weights.
    pub fn forward_fixed(&self, weights: &[(Tensor, Tensor)], data: &EncodedDataset, rows: &[usize]) -> Vec<[f64; 2]> {
        let inputs = sparse_inputs(data, rows);
        let (w1, b1) = &weights[0];
        let n1 = w1.cols();
        let mut h = Vec::with_capacity(rows.len() * n1);
        for entries in inputs.iter() {
            let mut acc = b1.data.clone();
            for &(j, v) in entries {
                for (a, w) in acc.iter_mut().zip(&w1.data[j * n1..(j + 1) * n1]) {
                    *a += v * w;
                }
            }
            h.extend(acc);
        }
        let mut width = n1;
        for (w, b) in &weights[1..] {
            let act = self.config.activation;
            h.iter_mut().for_each(|v| *v = act.apply(*v));
            let n = w.cols();
            let mut z = matmul(&h, &w.data, rows.len(), width, n);
            for row in z.chunks_mut(n) {
                for (o, bb) in row.iter_mut().zip(&b.data) {
                    *o += bb;
                }
            }
            h = z;
            width = n;
        }
        h.chunks(2).map(|z| log_softmax2([z[0], z[1]])).collect()
    }
}

/// Posterior predictive for many rows. Sample `s` uses the same weights for
/// every row; samples run in parallel.
pub fn posterior_predictive_batch(
    model: &BnnModel,
    data: &EncodedDataset,
    rows: &[usize],
    samples: usize,
) -> Result<Vec<PosteriorPredictive>> {
    model.check_layout(data)?;
    if samples == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= data.len()) {
        return Err(Error::Input(format!("row {bad} out of range")));
    }
    let per_sample: Vec<Vec<[f64; 2]>> = (0..samples)
        .into_par_iter()
        .map(|s| Ok(model.forward_fixed(&model.sampled_weights(s)?, data, rows)))
        .collect::<Result<_>>()?;
    Ok((0..rows.len())
        .map(|i| PosteriorPredictive {
            log_probs: per_sample.iter().map(|s| s[i]).collect(),
        })
        .collect())
}

pub fn posterior_predictive(model: &BnnModel, data: &EncodedDataset, row: usize, samples: usize) -> Result<PosteriorPredictive> {
    Ok(posterior_predictive_batch(model, data, &[row], samples)?.remove(0))
}

/// Deterministic pass with every weight at its posterior mean.
pub fn mean_forward(model: &BnnModel, data: &EncodedDataset, rows: &[usize]) -> Result<Vec<[f64; 2]>> {
    model.check_layout(data)?;
    let weights = model.weights_with_noise(&model.zero_noise())?;
    Ok(model.forward_fixed(&weights, data, rows))
}

/// Accuracy over decided rows only (NaN if every row is undecided).
pub fn decided_accuracy(model: &BnnModel, data: &EncodedDataset, threshold: f64) -> Result<f64> {
    let rows: Vec<usize> = (0..data.len()).collect();
    let pps = posterior_predictive_batch(model, data, &rows, model.config.samples)?;
    let (mut hits, mut decided) = (0usize, 0usize);
    for (pp, &y) in pps.iter().zip(&data.labels) {
        if let Some(k) = decide(pp, threshold).outcome.class() {
            decided += 1;
            hits += usize::from(k == y);
        }
    }
    Ok(hits as f64 / decided as f64)
}
