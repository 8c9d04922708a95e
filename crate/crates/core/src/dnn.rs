//! Point-estimate network: one embedding table per categorical column,
//! concatenated with the standardized continuous features, then ReLU hidden
//! layers and a two-way softmax.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{EncodedDataset, FeatureLayout};
use crate::diffcore::{glorot_uniform, EmbeddingTable, Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for DnnConfig {
    fn default() -> Self {
        DnnConfig {
            hidden: vec![200, 100],
            learning_rate: 0.1,
            epochs: 20,
            batch_size: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnModel {
    pub layout: FeatureLayout,
    pub embeddings: Vec<EmbeddingTable>,
    /// Hidden layers followed by the two-unit output layer.
    pub layers: Vec<DenseLayer>,
    pub config: DnnConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: Option<f64>,
}

pub type TrainingLog = Vec<EpochRecord>;

pub fn build_dnn(layout: &FeatureLayout, config: DnnConfig) -> Result<DnnModel> {
    if config.hidden.is_empty() {
        return Err(Error::Config("hidden layer list is empty".into()));
    }
    if config.hidden.contains(&0) {
        return Err(Error::Config("hidden layers need at least one unit".into()));
    }
    let mut rng = seed::rng(config.seed);
    let embeddings = layout
        .categorical
        .iter()
        .map(|(_, card)| EmbeddingTable::new(*card, None, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let input = embeddings.iter().map(|e| e.dim).sum::<usize>() + layout.n_continuous();
    let mut widths = vec![input];
    widths.extend(&config.hidden);
    widths.push(2);
    let layers = widths
        .windows(2)
        .map(|w| DenseLayer {
            w: glorot_uniform(&mut rng, w[0], w[1]),
            b: Tensor::zeros(&[w[1]]),
        })
        .collect();
    Ok(DnnModel {
        layout: layout.clone(),
        embeddings,
        layers,
        config,
    })
}

impl DnnModel {
    pub fn input_width(&self) -> usize {
        self.embeddings.iter().map(|e| e.dim).sum::<usize>() + self.layout.n_continuous()
    }

    /// Embedding tables, then `(w, b)` per layer.
    pub fn parameters(&self) -> Vec<Tensor> {
        let mut out: Vec<Tensor> = self.embeddings.iter().map(|e| e.weights.clone()).collect();
        for l in &self.layers {
            out.push(l.w.clone());
            out.push(l.b.clone());
        }
        out
    }

    fn param_slots(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self.embeddings.iter_mut().map(|e| &mut e.weights).collect();
        for l in &mut self.layers {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }

    /// Class probabilities for `rows` of `data`, built on `g` from parameter
    /// handles ordered as in [`DnnModel::parameters`].
    pub fn forward(&self, g: &mut Graph, params: &[Var], data: &EncodedDataset, rows: &[usize]) -> Result<Var> {
        let n_emb = self.embeddings.len();
        let mut parts = Vec::with_capacity(n_emb + 1);
        for (c, &table) in params[..n_emb].iter().enumerate() {
            let idx: Vec<usize> = rows.iter().map(|&r| data.cat_row(r)[c] as usize).collect();
            parts.push(g.embed(table, &idx)?);
        }
        let k = self.layout.n_continuous();
        if k > 0 {
            let mut cont = Vec::with_capacity(rows.len() * k);
            for &r in rows {
                cont.extend_from_slice(data.cont_row(r));
            }
            parts.push(g.constant(Tensor::matrix(rows.len(), k, cont)?));
        }
        let mut h = g.concat(&parts)?;
        let layer_vars = &params[n_emb..];
        let n_layers = self.layers.len();
        for (i, pair) in layer_vars.chunks(2).enumerate() {
            h = g.affine(h, pair[0], pair[1])?;
            if i + 1 < n_layers {
                h = g.relu(h);
            }
        }
        g.softmax(h)
    }

    fn check_layout(&self, data: &EncodedDataset) -> Result<()> {
        if data.layout != self.layout {
            return Err(Error::Schema("encoded data does not match the model's feature layout".into()));
        }
        Ok(())
    }

    pub fn loss_on(&self, g: &mut Graph, params: &[Var], data: &EncodedDataset, rows: &[usize]) -> Result<Var> {
        let p = self.forward(g, params, data, rows)?;
        let labels: Vec<usize> = rows.iter().map(|&r| data.labels[r] as usize).collect();
        g.cross_entropy(p, &labels)
    }

    pub fn train(&mut self, train: &EncodedDataset, valid: Option<&EncodedDataset>) -> Result<TrainingLog> {
        train_dnn(self, train, valid)
    }

    pub fn predict_proba(&self, data: &EncodedDataset) -> Result<Vec<[f64; 2]>> {
        predict_proba_dnn(self, data)
    }
}

/// Mini-batch gradient descent on the cross-entropy.
pub fn train_dnn(model: &mut DnnModel, train: &EncodedDataset, valid: Option<&EncodedDataset>) -> Result<TrainingLog> {
    model.check_layout(train)?;
    if train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let cfg = model.config.clone();
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = seed::stream(cfg.seed, epoch as u64 + 1);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut g = Graph::new();
            let vars: Vec<Var> = model.parameters().into_iter().map(|p| g.param(p)).collect();
            let loss = model.loss_on(&mut g, &vars, train, batch)?;
            total += g.value(loss).item() * batch.len() as f64;
            g.backward(loss)?;
            for (slot, v) in model.param_slots().into_iter().zip(&vars) {
                for (p, d) in slot.data.iter_mut().zip(&g.grad(*v).data) {
                    *p -= cfg.learning_rate * d;
                }
            }
        }
        let valid_accuracy = match valid {
            Some(v) if !v.is_empty() => Some(accuracy(&predict_proba_dnn(model, v)?, &v.labels)),
            _ => None,
        };
        let rec = EpochRecord {
            epoch: epoch + 1,
            train_loss: total / train.len() as f64,
            valid_accuracy,
        };
        log::info!("dnn epoch {}: loss {:.5} valid acc {:?}", rec.epoch, rec.train_loss, rec.valid_accuracy);
        log.push(rec);
    }
    Ok(log)
}

pub fn predict_proba_dnn(model: &DnnModel, data: &EncodedDataset) -> Result<Vec<[f64; 2]>> {
    model.check_layout(data)?;
    let params = model.parameters();
    let mut out = Vec::with_capacity(data.len());
    let all: Vec<usize> = (0..data.len()).collect();
    for chunk in all.chunks(1024) {
        let mut g = Graph::new();
        let vars: Vec<Var> = params.iter().map(|p| g.constant(p.clone())).collect();
        let p = model.forward(&mut g, &vars, data, chunk)?;
        out.extend(g.value(p).data.chunks(2).map(|r| [r[0], r[1]]));
    }
    Ok(out)
}

/// Share of rows whose argmax class (ties to class 0) equals the label.
pub fn accuracy(probs: &[[f64; 2]], labels: &[u8]) -> f64 {
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(p, &y)| u8::from(p[1] > p[0]) == y)
        .count();
    hits as f64 / labels.len().max(1) as f64
}
