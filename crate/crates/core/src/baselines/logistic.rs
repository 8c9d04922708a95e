use serde::{Deserialize, Serialize};

use super::SparseRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Inverse regularization strength. `f64::INFINITY` disables the penalty.
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm drops below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            c: 1.0,
            max_iter: 100,
            tol: 1e-4,
        }
    }
}

impl LogisticConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tolerance must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub config: LogisticConfig,
    /// Objective after each accepted step, starting from the zero model.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    pub fn zeros(width: usize) -> Self {
        LogisticModel {
            weights: vec![0.0; width],
            intercept: 0.0,
            config: LogisticConfig::default(),
            objective_trace: Vec::new(),
            iterations: 0,
            converged: false,
        }
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, row: &[(usize, f64)]) -> Result<f64> {
        let mut z = self.intercept;
        for &(j, v) in row {
            let w = self
                .weights
                .get(j)
                .ok_or_else(|| Error::Shape(format!("feature {j} outside model width {}", self.width())))?;
            z += w * v;
        }
        Ok(z)
    }
}

/// Objective value and gradient at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

impl Objective {
    fn grad_norm(&self) -> f64 {
        (self.grad_w.iter().map(|g| g * g).sum::<f64>() + self.grad_b * self.grad_b).sqrt()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_rows(x: &[SparseRow], y: &[u8], width: usize) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Input("no training rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if let Some(&l) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Input(format!("label {l} is not binary")));
    }
    for row in x {
        for &(j, v) in row {
            if j >= width {
                return Err(Error::Shape(format!("feature {j} outside width {width}")));
            }
            if !v.is_finite() {
                return Err(Error::Input(format!("non-finite feature value {v}")));
            }
        }
    }
    Ok(())
}

/// Mean negative log-likelihood plus `‖w‖² / (2·C·n)`; the intercept is not
/// penalized.
pub fn logistic_objective(model: &LogisticModel, x: &[SparseRow], y: &[u8], c: f64) -> Result<Objective> {
    check_rows(x, y, model.width())?;
    let n = x.len() as f64;
    let lambda = if c.is_infinite() { 0.0 } else { 1.0 / (c * n) };
    let mut value = 0.0;
    let mut grad_w = vec![0.0; model.width()];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = model.margin(row)?;
        // -log σ(z) for y = 1, -log(1 - σ(z)) for y = 0
        value += if label == 1 { softplus(-z) } else { softplus(z) };
        let r = sigmoid(z) - f64::from(label);
        grad_b += r;
        for &(j, v) in row {
            grad_w[j] += r * v;
        }
    }
    value /= n;
    grad_b /= n;
    let mut sq = 0.0;
    for (g, w) in grad_w.iter_mut().zip(&model.weights) {
        *g = *g / n + lambda * w;
        sq += w * w;
    }
    value += 0.5 * lambda * sq;
    Ok(Objective { value, grad_w, grad_b })
}

/// Gradient descent with Armijo backtracking from the zero model.
pub fn fit_logistic(x: &[SparseRow], y: &[u8], width: usize, cfg: &LogisticConfig) -> Result<LogisticModel> {
    cfg.validate()?;
    check_rows(x, y, width)?;
    let mut model = LogisticModel {
        config: cfg.clone(),
        ..LogisticModel::zeros(width)
    };
    let mut obj = logistic_objective(&model, x, y, cfg.c)?;
    model.objective_trace.push(obj.value);
    let mut step = 1.0;
    for _ in 0..cfg.max_iter {
        let norm = obj.grad_norm();
        if norm < cfg.tol {
            model.converged = true;
            break;
        }
        let mut accepted = None;
        while step > 1e-12 {
            let mut trial = model.clone();
            for (w, g) in trial.weights.iter_mut().zip(&obj.grad_w) {
                *w -= step * g;
            }
            trial.intercept -= step * obj.grad_b;
            let t = logistic_objective(&trial, x, y, cfg.c)?;
            if t.value <= obj.value - 0.5 * step * norm * norm {
                accepted = Some((trial, t));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, t)) = accepted else { break };
        model.weights = trial.weights;
        model.intercept = trial.intercept;
        obj = t;
        model.objective_trace.push(obj.value);
        model.iterations += 1;
        step *= 2.0;
    }
    if !model.converged && obj.grad_norm() < cfg.tol {
        model.converged = true;
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.intercept.is_finite() {
        return Err(Error::Input("logistic regression diverged".into()));
    }
    Ok(model)
}

/// Probability of class 1.
pub fn predict_logistic(model: &LogisticModel, row: &[(usize, f64)]) -> Result<f64> {
    Ok(sigmoid(model.margin(row)?))
}
