use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::variational::GaussianVariational;
use crate::data::{EncodedDataset, FeatureLayout};
use crate::diffcore::{Graph, SparseRows, Tensor, Var};
use crate::dnn::{EpochRecord, TrainingLog};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnConfig {
    pub hidden: usize,
    /// Hidden-layer activation.
    pub activation: Activation,
    pub prior_sigma: f64,
    /// Posterior samples per prediction.
    pub samples: usize,
    /// Decision threshold on the median class probability.
    pub threshold: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Weight of the KL term per mini-batch; `None` uses the default.
    pub kl_weight: Option<f64>,
    /// Std-dev of the normal initialization of weight means, as a multiple
    /// of `1/sqrt(fan_in)`.
    pub init_scale: f64,
    /// Initial `rho` for every parameter.
    pub init_rho: f64,
    pub seed: u64,
}

impl Default for BnnConfig {
    fn default() -> Self {
        BnnConfig {
            hidden: 1024,
            activation: Activation::Tanh,
            prior_sigma: 1.0,
            samples: 100,
            threshold: 0.5,
            learning_rate: 0.05,
            epochs: 20,
            batch_size: 64,
            kl_weight: None,
            init_scale: 1.0,
            init_rho: -3.0,
            seed: 0,
        }
    }
}

impl BnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config("threshold must be in (0,1)".into()));
        }
        if !(self.prior_sigma > 0.0) {
            return Err(Error::Config("prior_sigma must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(w) = self.kl_weight {
            if !(w >= 0.0) {
                return Err(Error::Config("kl_weight must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalLayer {
    pub w: GaussianVariational,
    pub b: GaussianVariational,
}

/// Bayesian network: one-hot categoricals and standardized continuous
/// features feed a variational ReLU hidden layer and a variational two-way
/// softmax output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnModel {
    pub layout: FeatureLayout,
    pub layers: Vec<VariationalLayer>,
    pub config: BnnConfig,
}

/// Standard-normal noise for every parameter tensor, ordered as
/// [`BnnModel::parameters`] pairs (one tensor per mu/rho pair).
pub type Noise = Vec<Tensor>;

pub fn build_bnn(layout: &FeatureLayout, config: BnnConfig) -> Result<BnnModel> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let widths = [layout.one_hot_width(), config.hidden, 2];
    let mut layers = Vec::new();
    for w in widths.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let std = config.init_scale / (fan_in.max(1) as f64).sqrt();
        let normal = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
        let mu_w = Tensor {
            shape: vec![fan_in, fan_out],
            data: (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect(),
        };
        let mu_b = Tensor::zeros(&[fan_out]);
        layers.push(VariationalLayer {
            w: GaussianVariational::new(mu_w, Tensor::filled(&[fan_in, fan_out], config.init_rho))?,
            b: GaussianVariational::new(mu_b, Tensor::filled(&[fan_out], config.init_rho))?,
        });
    }
    Ok(BnnModel {
        layout: layout.clone(),
        layers,
        config,
    })
}

impl BnnModel {
    pub fn input_width(&self) -> usize {
        self.layout.one_hot_width()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Per layer: `w.mu, w.rho, b.mu, b.rho`.
    pub fn parameters(&self) -> Vec<Tensor> {
        let mut out = Vec::with_capacity(self.layers.len() * 4);
        for l in &self.layers {
            out.extend([l.w.mu.clone(), l.w.rho.clone(), l.b.mu.clone(), l.b.rho.clone()]);
        }
        out
    }

    fn param_slots(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(self.layers.len() * 4);
        for l in &mut self.layers {
            out.push(&mut l.w.mu);
            out.push(&mut l.w.rho);
            out.push(&mut l.b.mu);
            out.push(&mut l.b.rho);
        }
        out
    }

    pub fn set_rho(&mut self, rho: f64) {
        for l in &mut self.layers {
            l.w.rho.data.iter_mut().for_each(|r| *r = rho);
            l.b.rho.data.iter_mut().for_each(|r| *r = rho);
        }
    }

    pub fn draw_noise(&self, rng: &mut seed::Rng) -> Noise {
        self.layers
            .iter()
            .flat_map(|l| [l.w.draw_noise(rng), l.b.draw_noise(rng)])
            .collect()
    }

    pub fn zero_noise(&self) -> Noise {
        self.layers
            .iter()
            .flat_map(|l| [Tensor::zeros(l.w.shape()), Tensor::zeros(l.b.shape())])
            .collect()
    }

    pub(crate) fn check_layout(&self, data: &EncodedDataset) -> Result<()> {
        if data.layout != self.layout {
            return Err(Error::Schema("encoded data does not match the model's feature layout".into()));
        }
        Ok(())
    }

    pub fn default_kl_weight(&self, n_train: usize) -> f64 {
        self.config
            .kl_weight
            .unwrap_or_else(|| 1.0 / n_train.max(1) as f64)
    }

    /// Class probabilities of one weight sample, on `g`, from parameter
    /// handles ordered as in [`BnnModel::parameters`].
    pub fn forward(&self, g: &mut Graph, params: &[Var], noise: &Noise, inputs: SparseRows) -> Result<Var> {
        if noise.len() != self.layers.len() * 2 {
            return Err(Error::Shape("noise does not match the layer count".into()));
        }
        let mut h = None;
        for (i, (p, n)) in params.chunks(4).zip(noise.chunks(2)).enumerate() {
            let w = g.reparam(p[0], p[1], n[0].clone())?;
            let b = g.reparam(p[2], p[3], n[1].clone())?;
            let z = match h {
                None => g.sparse_affine(inputs.clone(), w, b)?,
                Some(x) => g.affine(x, w, b)?,
            };
            h = Some(match (i + 1 < self.layers.len(), self.config.activation) {
                (false, _) => z,
                (true, Activation::Relu) => g.relu(z),
                (true, Activation::Tanh) => g.tanh(z),
            });
        }
        g.softmax(h.expect("at least one layer"))
    }

    /// `cross_entropy(sampled network) + kl_weight · KL(q ‖ prior)`.
    pub fn elbo_loss(
        &self,
        g: &mut Graph,
        params: &[Var],
        noise: &Noise,
        data: &EncodedDataset,
        rows: &[usize],
        kl_weight: f64,
    ) -> Result<Var> {
        if rows.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        if !(kl_weight >= 0.0) {
            return Err(Error::Config("kl_weight must be non-negative".into()));
        }
        let inputs = sparse_inputs(data, rows);
        let p = self.forward(g, params, noise, inputs)?;
        let labels: Vec<usize> = rows.iter().map(|&r| data.labels[r] as usize).collect();
        let nll = g.cross_entropy(p, &labels)?;
        if kl_weight == 0.0 {
            return Ok(nll);
        }
        let mut kl_total = None;
        for pair in params.chunks(2) {
            let kl = g.kl_gaussian(pair[0], pair[1], self.config.prior_sigma)?;
            kl_total = Some(match kl_total {
                None => kl,
                Some(acc) => g.add(acc, kl)?,
            });
        }
        let kl = g.scale(kl_total.expect("parameters exist"), kl_weight);
        g.add(nll, kl)
    }

    pub fn train(&mut self, train: &EncodedDataset, valid: Option<&EncodedDataset>) -> Result<TrainingLog> {
        train_bnn(self, train, valid)
    }
}

pub(crate) fn sparse_inputs(data: &EncodedDataset, rows: &[usize]) -> SparseRows {
    Arc::new(rows.iter().map(|&r| data.one_hot_entries(r)).collect())
}

/// Mini-batch gradient descent on the mu and rho of every layer, one weight
/// sample per step. Records the epoch-mean ELBO loss.
pub fn train_bnn(model: &mut BnnModel, train: &EncodedDataset, valid: Option<&EncodedDataset>) -> Result<TrainingLog> {
    model.check_layout(train)?;
    model.config.validate()?;
    if train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let cfg = model.config.clone();
    let kl_weight = model.default_kl_weight(train.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = seed::stream(cfg.seed, epoch as u64 + 1);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let noise = model.draw_noise(&mut rng);
            let mut g = Graph::new();
            let vars: Vec<Var> = model.parameters().into_iter().map(|p| g.param(p)).collect();
            let loss = model.elbo_loss(&mut g, &vars, &noise, train, batch, kl_weight)?;
            total += g.value(loss).item() * batch.len() as f64;
            g.backward(loss)?;
            for (slot, v) in model.param_slots().into_iter().zip(&vars) {
                for (p, d) in slot.data.iter_mut().zip(&g.grad(*v).data) {
                    *p -= cfg.learning_rate * d;
                }
            }
        }
        let valid_accuracy = match valid {
            Some(v) if !v.is_empty() => Some(super::predictive::decided_accuracy(model, v, cfg.threshold)?),
            _ => None,
        };
        let rec = EpochRecord {
            epoch: epoch + 1,
            train_loss: total / train.len() as f64,
            valid_accuracy,
        };
        log::info!("bnn epoch {}: elbo loss {:.5} valid acc {:?}", rec.epoch, rec.train_loss, rec.valid_accuracy);
        log.push(rec);
    }
    Ok(log)
}
