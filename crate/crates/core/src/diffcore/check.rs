use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::Result;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const GRAD_FLOOR: f64 = 1e-6;

/// Compares backward-pass gradients against central differences
/// `(f(p+h) - f(p-h)) / 2h` for every element of every parameter and returns
/// the largest relative error, with denominator `max(|a|, |b|, GRAD_FLOOR)`.
/// Below the floor the central difference is dominated by rounding (about
/// `eps·|f|/h`), so tiny gradients are effectively compared in absolute terms.
///
/// `f` must build the same scalar function each time it is called.
pub fn finite_diff_check<F>(params: &[Tensor], h: f64, f: F) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let loss = f(&mut g, &vars)?;
    g.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| g.grad(v).clone()).collect();

    let eval = |ps: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = ps.iter().map(|p| g.param(p.clone())).collect();
        let loss = f(&mut g, &vars)?;
        Ok(g.value(loss).item())
    };

    let mut work = params.to_vec();
    let mut worst: f64 = 0.0;
    for (pi, grad) in analytic.iter().enumerate() {
        for e in 0..grad.len() {
            let orig = work[pi].data[e];
            work[pi].data[e] = orig + h;
            let fp = eval(&work)?;
            work[pi].data[e] = orig - h;
            let fm = eval(&work)?;
            work[pi].data[e] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let a = grad.data[e];
            let denom = a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
