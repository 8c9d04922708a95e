use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diffcore::{kl_sum, softplus, Tensor};
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Mean-field Gaussian posterior over a parameter tensor, with
/// `sigma = softplus(rho) = ln(1 + e^rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianVariational {
    pub mu: Tensor,
    pub rho: Tensor,
}

impl GaussianVariational {
    pub fn new(mu: Tensor, rho: Tensor) -> Result<Self> {
        if mu.shape != rho.shape {
            return Err(Error::Shape(format!(
                "mu {:?} and rho {:?} differ",
                mu.shape, rho.shape
            )));
        }
        Ok(GaussianVariational { mu, rho })
    }

    pub fn sigma(&self) -> Tensor {
        self.rho.map(softplus)
    }

    pub fn shape(&self) -> &[usize] {
        &self.mu.shape
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn draw_noise(&self, rng: &mut Rng) -> Tensor {
        let data = (0..self.mu.len()).map(|_| StandardNormal.sample(rng)).collect();
        Tensor {
            shape: self.mu.shape.clone(),
            data,
        }
    }
}

/// `mu + softplus(rho) ⊙ noise`
pub fn sample_weights(layer: &GaussianVariational, noise: &Tensor) -> Result<Tensor> {
    if noise.shape != layer.mu.shape {
        return Err(Error::Shape(format!(
            "noise {:?} for parameter {:?}",
            noise.shape, layer.mu.shape
        )));
    }
    let data = layer
        .mu
        .data
        .iter()
        .zip(&layer.rho.data)
        .zip(&noise.data)
        .map(|((&m, &r), &e)| m + softplus(r) * e)
        .collect();
    Ok(Tensor {
        shape: layer.mu.shape.clone(),
        data,
    })
}

/// `Σ ln(σp/σq) + (σq² + μq²)/(2σp²) − ½` against a zero-mean prior.
pub fn kl_gaussian(q: &GaussianVariational, prior_sigma: f64) -> Result<f64> {
    if !(prior_sigma > 0.0) {
        return Err(Error::Config("prior_sigma must be positive".into()));
    }
    Ok(kl_sum(&q.mu.data, &q.rho.data, prior_sigma))
}
