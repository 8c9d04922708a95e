//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] is an append-only arena: every operation pushes a node whose
//! parents were created earlier, so creation order is a topological order and
//! the backward sweep simply walks the arena in reverse.

use std::sync::Arc;

use super::tensor::{matmul, matmul_nt, matmul_tn, sigmoid, softplus, Tensor};
use crate::error::{Error, Result};

/// Probabilities are clamped below at this value before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Sparse input rows: `(column, value)` pairs per row.
pub type SparseRows = Arc<Vec<Vec<(usize, f64)>>>;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    SparseAffine { rows: SparseRows, w: Var, b: Var },
    Relu(Var),
    Tanh(Var),
    Softmax(Var),
    CrossEntropy { p: Var, labels: Vec<usize> },
    Embed { table: Var, idx: Vec<usize> },
    Concat(Vec<Var>),
    Reparam { mu: Var, rho: Var, noise: Tensor },
    KlGaussian { mu: Var, rho: Var, prior_sigma: f64 },
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    grad: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        let grad = Tensor::zeros(&value.shape);
        self.nodes.push(Node {
            value,
            grad,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Constant leaf; no gradient flows into it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad.data.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// `x[batch×in] · w[in×out] + b[out]`
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.shape.len() != 2 || wv.shape.len() != 2 || xv.shape[1] != wv.shape[0] {
            return Err(Error::Shape(format!(
                "affine: x {:?} · w {:?}",
                xv.shape, wv.shape
            )));
        }
        let (m, k, n) = (xv.shape[0], xv.shape[1], wv.shape[1]);
        if bv.len() != n {
            return Err(Error::Shape(format!("affine: bias {:?} for width {n}", bv.shape)));
        }
        let mut out = matmul(&xv.data, &wv.data, m, k, n);
        for row in out.chunks_mut(n) {
            for (o, bb) in row.iter_mut().zip(&bv.data) {
                *o += bb;
            }
        }
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::Affine { x, w, b }, rg))
    }

    /// Affine map of a sparse constant input, equivalent to [`Graph::affine`]
    /// on the densified rows.
    pub fn sparse_affine(&mut self, rows: SparseRows, w: Var, b: Var) -> Result<Var> {
        let (wv, bv) = (self.value(w), self.value(b));
        if wv.shape.len() != 2 || bv.len() != wv.shape[1] {
            return Err(Error::Shape(format!(
                "sparse_affine: w {:?}, b {:?}",
                wv.shape, bv.shape
            )));
        }
        let (k, n) = (wv.shape[0], wv.shape[1]);
        let mut out = Vec::with_capacity(rows.len() * n);
        for r in rows.iter() {
            let mut acc = bv.data.clone();
            for &(j, v) in r {
                if j >= k {
                    return Err(Error::Shape(format!("sparse_affine: column {j} >= {k}")));
                }
                for (a, wj) in acc.iter_mut().zip(&wv.data[j * n..(j + 1) * n]) {
                    *a += v * wj;
                }
            }
            out.extend(acc);
        }
        let rg = self.rg(w) || self.rg(b);
        let m = rows.len();
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::SparseAffine { rows, w, b }, rg))
    }

    pub fn relu(&mut self, z: Var) -> Var {
        let v = self.value(z).map(|x| x.max(0.0));
        let rg = self.rg(z);
        self.push(v, Op::Relu(z), rg)
    }

    pub fn tanh(&mut self, z: Var) -> Var {
        let v = self.value(z).map(f64::tanh);
        let rg = self.rg(z);
        self.push(v, Op::Tanh(z), rg)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, z: Var) -> Result<Var> {
        let zv = self.value(z);
        if zv.shape.len() != 2 || zv.shape[1] < 2 {
            return Err(Error::Shape(format!("softmax needs batch×K (K≥2), got {:?}", zv.shape)));
        }
        let k = zv.shape[1];
        let mut out = zv.data.clone();
        for row in out.chunks_mut(k) {
            softmax_in_place(row);
        }
        let shape = zv.shape.clone();
        let rg = self.rg(z);
        Ok(self.push(Tensor::new(shape, out)?, Op::Softmax(z), rg))
    }

    /// Mean over the batch of `-ln max(p[row, label], 1e-12)`.
    pub fn cross_entropy(&mut self, p: Var, labels: &[usize]) -> Result<Var> {
        let pv = self.value(p);
        if pv.shape.len() != 2 || pv.shape[0] != labels.len() || labels.is_empty() {
            return Err(Error::Shape(format!(
                "cross_entropy: probabilities {:?} for {} labels",
                pv.shape,
                labels.len()
            )));
        }
        let k = pv.shape[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Input(format!("label {bad} out of range for {k} classes")));
        }
        let loss = labels
            .iter()
            .enumerate()
            .map(|(r, &l)| -pv.data[r * k + l].max(LOG_CLAMP).ln())
            .sum::<f64>()
            / labels.len() as f64;
        let rg = self.rg(p);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                p,
                labels: labels.to_vec(),
            },
            rg,
        ))
    }

    /// Row gather from a `cardinality×dim` table.
    pub fn embed(&mut self, table: Var, idx: &[usize]) -> Result<Var> {
        let tv = self.value(table);
        if tv.shape.len() != 2 {
            return Err(Error::Shape("embedding table must be a matrix".into()));
        }
        let (card, dim) = (tv.shape[0], tv.shape[1]);
        let mut out = Vec::with_capacity(idx.len() * dim);
        for &i in idx {
            if i >= card {
                return Err(Error::Input(format!("embedding index {i} >= cardinality {card}")));
            }
            out.extend_from_slice(tv.row(i));
        }
        let rg = self.rg(table);
        Ok(self.push(
            Tensor::matrix(idx.len(), dim, out)?,
            Op::Embed {
                table,
                idx: idx.to_vec(),
            },
            rg,
        ))
    }

    /// Column-wise concatenation of equal-height matrices.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|&p| self.value(p).rows())
            .ok_or_else(|| Error::Shape("concat of nothing".into()))?;
        let mut width = 0;
        for &p in parts {
            let v = self.value(p);
            if v.shape.len() != 2 || v.shape[0] != rows {
                return Err(Error::Shape(format!("concat: part {:?} for {rows} rows", v.shape)));
            }
            width += v.shape[1];
        }
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(r));
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Tensor::matrix(rows, width, out)?, Op::Concat(parts.to_vec()), rg))
    }

    /// Reparameterized Gaussian sample `mu + softplus(rho) ⊙ noise`.
    pub fn reparam(&mut self, mu: Var, rho: Var, noise: Tensor) -> Result<Var> {
        let (m, r) = (self.value(mu), self.value(rho));
        if m.shape != r.shape || m.shape != noise.shape {
            return Err(Error::Shape(format!(
                "reparam: mu {:?}, rho {:?}, noise {:?}",
                m.shape, r.shape, noise.shape
            )));
        }
        let data = m
            .data
            .iter()
            .zip(&r.data)
            .zip(&noise.data)
            .map(|((&mu, &rho), &e)| mu + softplus(rho) * e)
            .collect();
        let shape = m.shape.clone();
        let rg = self.rg(mu) || self.rg(rho);
        Ok(self.push(Tensor::new(shape, data)?, Op::Reparam { mu, rho, noise }, rg))
    }

    /// `KL(N(mu, softplus(rho)²) ‖ N(0, prior_sigma²))` summed over elements.
    pub fn kl_gaussian(&mut self, mu: Var, rho: Var, prior_sigma: f64) -> Result<Var> {
        let (m, r) = (self.value(mu), self.value(rho));
        if m.shape != r.shape {
            return Err(Error::Shape("kl_gaussian: mu and rho shapes differ".into()));
        }
        if !(prior_sigma > 0.0) {
            return Err(Error::Config("prior_sigma must be positive".into()));
        }
        let kl = kl_sum(&m.data, &r.data, prior_sigma);
        let rg = self.rg(mu) || self.rg(rho);
        Ok(self.push(
            Tensor::scalar(kl),
            Op::KlGaussian {
                mu,
                rho,
                prior_sigma,
            },
            rg,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return Err(Error::Shape(format!("elementwise op on {:?} and {:?}", av.shape, bv.shape)));
        }
        let data = av.data.iter().zip(&bv.data).map(|(&x, &y)| f(x, y)).collect();
        let shape = av.shape.clone();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(shape, data)?, op, rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x * c);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, c), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    /// Reverse sweep from a scalar loss. Gradients are added to whatever the
    /// nodes already hold; call [`Graph::zero_grad`] to reset.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape
            )));
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Tensor::filled(&self.value(loss).shape, 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            self.propagate(i, &g, &mut adj);
            self.nodes[i].grad.add_assign(&g);
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &Tensor, adj: &mut [Option<Tensor>]) {
        let node = &self.nodes[i];
        let mut send = |v: Var, t: Tensor| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut adj[v.0] {
                Some(acc) => acc.add_assign(&t),
                slot @ None => *slot = Some(t),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (m, k, n) = (xv.shape[0], xv.shape[1], wv.shape[1]);
                if self.rg(*x) {
                    let dx = matmul_nt(&g.data, &wv.data, m, n, k);
                    send(*x, Tensor { shape: xv.shape.clone(), data: dx });
                }
                if self.rg(*w) {
                    let dw = matmul_tn(&xv.data, &g.data, m, k, n);
                    send(*w, Tensor { shape: wv.shape.clone(), data: dw });
                }
                if self.rg(*b) {
                    send(*b, col_sums(g, &self.value(*b).shape));
                }
            }
            Op::SparseAffine { rows, w, b } => {
                let wv = self.value(*w);
                let n = wv.shape[1];
                if self.rg(*w) {
                    let mut dw = vec![0.0; wv.len()];
                    for (r, entries) in rows.iter().enumerate() {
                        let grow = g.row(r);
                        for &(j, v) in entries {
                            for (d, gg) in dw[j * n..(j + 1) * n].iter_mut().zip(grow) {
                                *d += v * gg;
                            }
                        }
                    }
                    send(*w, Tensor { shape: wv.shape.clone(), data: dw });
                }
                if self.rg(*b) {
                    send(*b, col_sums(g, &self.value(*b).shape));
                }
            }
            Op::Relu(z) => {
                let zv = self.value(*z);
                let data = zv
                    .data
                    .iter()
                    .zip(&g.data)
                    .map(|(&x, &gg)| if x > 0.0 { gg } else { 0.0 })
                    .collect();
                send(*z, Tensor { shape: zv.shape.clone(), data });
            }
            Op::Tanh(z) => {
                let y = &node.value;
                let data = y.data.iter().zip(&g.data).map(|(&t, &gg)| gg * (1.0 - t * t)).collect();
                send(*z, Tensor { shape: y.shape.clone(), data });
            }
            Op::Softmax(z) => {
                let y = &node.value;
                let k = y.cols();
                let mut data = Vec::with_capacity(y.len());
                for (yr, gr) in y.data.chunks(k).zip(g.data.chunks(k)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    data.extend(yr.iter().zip(gr).map(|(yy, gg)| yy * (gg - dot)));
                }
                send(*z, Tensor { shape: y.shape.clone(), data });
            }
            Op::CrossEntropy { p, labels } => {
                let pv = self.value(*p);
                let k = pv.cols();
                let scale = g.item() / labels.len() as f64;
                let mut d = vec![0.0; pv.len()];
                for (r, &l) in labels.iter().enumerate() {
                    let pr = pv.data[r * k + l];
                    if pr > LOG_CLAMP {
                        d[r * k + l] = -scale / pr;
                    }
                }
                send(*p, Tensor { shape: pv.shape.clone(), data: d });
            }
            Op::Embed { table, idx } => {
                let tv = self.value(*table);
                let dim = tv.cols();
                let mut d = vec![0.0; tv.len()];
                for (r, &row) in idx.iter().enumerate() {
                    for (a, gg) in d[row * dim..(row + 1) * dim].iter_mut().zip(g.row(r)) {
                        *a += gg;
                    }
                }
                send(*table, Tensor { shape: tv.shape.clone(), data: d });
            }
            Op::Concat(parts) => {
                let rows = g.rows();
                let mut offset = 0;
                for &p in parts {
                    let pv = self.value(p);
                    let w = pv.cols();
                    if self.rg(p) {
                        let mut d = Vec::with_capacity(pv.len());
                        for r in 0..rows {
                            d.extend_from_slice(&g.row(r)[offset..offset + w]);
                        }
                        send(p, Tensor { shape: pv.shape.clone(), data: d });
                    }
                    offset += w;
                }
            }
            Op::Reparam { mu, rho, noise } => {
                if self.rg(*mu) {
                    send(*mu, g.clone());
                }
                if self.rg(*rho) {
                    let rv = self.value(*rho);
                    let data = rv
                        .data
                        .iter()
                        .zip(&noise.data)
                        .zip(&g.data)
                        .map(|((&r, &e), &gg)| gg * e * sigmoid(r))
                        .collect();
                    send(*rho, Tensor { shape: rv.shape.clone(), data });
                }
            }
            Op::KlGaussian {
                mu,
                rho,
                prior_sigma,
            } => {
                let up = g.item();
                let var_p = prior_sigma * prior_sigma;
                let (mv, rv) = (self.value(*mu), self.value(*rho));
                if self.rg(*mu) {
                    send(*mu, mv.map(|m| up * m / var_p));
                }
                if self.rg(*rho) {
                    send(
                        *rho,
                        rv.map(|r| {
                            let s = softplus(r);
                            up * (s / var_p - 1.0 / s) * sigmoid(r)
                        }),
                    );
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = Tensor {
                    shape: av.shape.clone(),
                    data: g.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect(),
                };
                let db = Tensor {
                    shape: bv.shape.clone(),
                    data: g.data.iter().zip(&av.data).map(|(x, y)| x * y).collect(),
                };
                send(*a, da);
                send(*b, db);
            }
            Op::Scale(a, c) => send(*a, g.map(|x| x * c)),
            Op::Sum(a) => {
                let up = g.item();
                send(*a, Tensor::filled(&self.value(*a).shape, up));
            }
        }
    }
}

fn col_sums(g: &Tensor, shape: &[usize]) -> Tensor {
    let n = g.cols();
    let mut d = vec![0.0; n];
    for row in g.data.chunks(n) {
        for (a, b) in d.iter_mut().zip(row) {
            *a += b;
        }
    }
    Tensor {
        shape: shape.to_vec(),
        data: d,
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub(crate) fn kl_sum(mu: &[f64], rho: &[f64], prior_sigma: f64) -> f64 {
    let var_p = prior_sigma * prior_sigma;
    mu.iter()
        .zip(rho)
        .map(|(&m, &r)| {
            let s = softplus(r);
            (prior_sigma / s).ln() + (s * s + m * m) / (2.0 * var_p) - 0.5
        })
        .sum()
}
