use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// `min(50, floor((cardinality + 1) / 2))`, never below one.
pub fn embedding_dim(cardinality: usize) -> usize {
    50.min(cardinality.div_ceil(2)).max(1)
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rng: &mut Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..=limit))
        .collect();
    Tensor {
        shape: vec![fan_in, fan_out],
        data,
    }
}

/// Learned dense vectors for one categorical column. Row 0 is the unknown
/// category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub cardinality: usize,
    pub dim: usize,
    pub weights: Tensor,
}

impl EmbeddingTable {
    pub fn new(cardinality: usize, dim: Option<usize>, rng: &mut Rng) -> Result<Self> {
        if cardinality == 0 {
            return Err(Error::Config("embedding cardinality must be at least 1".into()));
        }
        let dim = dim.unwrap_or_else(|| embedding_dim(cardinality));
        if dim == 0 {
            return Err(Error::Config("embedding dim must be at least 1".into()));
        }
        Ok(EmbeddingTable {
            cardinality,
            dim,
            weights: glorot_uniform(rng, cardinality, dim),
        })
    }

    /// Gathers rows `idx` through a graph leaf holding `table`.
    pub fn lookup(g: &mut Graph, table: Var, idx: &[usize]) -> Result<Var> {
        g.embed(table, idx)
    }
}
