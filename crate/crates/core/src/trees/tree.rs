use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

/// Splits must lower impurity by more than this; candidates must beat the
/// incumbent by more than this to replace it, so near-ties keep the earlier
/// (lower feature index, lower threshold) split.
pub const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

/// Impurity of a node from its class counts.
pub fn impurity(counts: &[usize], criterion: Criterion) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Input("impurity of an empty node".into()));
    }
    let probs = counts.iter().map(|&c| c as f64 / total as f64);
    Ok(match criterion {
        Criterion::Gini => 1.0 - probs.map(|p| p * p).sum::<f64>(),
        Criterion::Entropy => -probs.map(xlog2x).sum::<f64>(),
    })
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Weighted sufficient statistics of a node: total weight plus either the
/// positive-class weight (`a`) or the first and second moments (`a`, `b`)
/// of a regression target.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Stats {
    pub w: f64,
    pub a: f64,
    pub b: f64,
}

impl Stats {
    fn sub(self, o: Stats) -> Stats {
        Stats {
            w: self.w - o.w,
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Target<'a> {
    Class { labels: &'a [u8], criterion: Criterion },
    Regress { y: &'a [f64] },
}

impl Target<'_> {
    fn add(&self, s: &mut Stats, row: usize, w: f64) {
        s.w += w;
        match self {
            Target::Class { labels, .. } => s.a += w * f64::from(labels[row]),
            Target::Regress { y } => {
                s.a += w * y[row];
                s.b += w * y[row] * y[row];
            }
        }
    }

    fn impurity(&self, s: &Stats) -> f64 {
        if s.w <= 0.0 {
            return 0.0;
        }
        match self {
            Target::Class { criterion, .. } => {
                let (p0, p1) = ((s.w - s.a) / s.w, s.a / s.w);
                match criterion {
                    Criterion::Gini => 1.0 - (p0 * p0 + p1 * p1),
                    Criterion::Entropy => -(xlog2x(p0) + xlog2x(p1)),
                }
            }
            Target::Regress { .. } => {
                let m = s.a / s.w;
                (s.b / s.w - m * m).max(0.0)
            }
        }
    }

    fn leaf(&self, s: &Stats) -> TreeNode {
        match self {
            Target::Class { .. } => TreeNode::Leaf {
                weight: s.w,
                value: if s.w > 0.0 { s.a / s.w } else { 0.0 },
                counts: Some([s.w - s.a, s.a]),
            },
            Target::Regress { .. } => TreeNode::Leaf {
                weight: s.w,
                value: if s.w > 0.0 { s.a / s.w } else { 0.0 },
                counts: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Split {
    /// Rows with `x <= value` go left.
    Threshold { value: f64 },
    /// Rows of `category` go left, other seen categories right. Categories
    /// absent from the node's training rows take the heavier branch.
    Category {
        category: u32,
        seen: Vec<u32>,
        unknown_left: bool,
    },
}

impl Split {
    pub fn goes_left(&self, x: f64) -> bool {
        match self {
            Split::Threshold { value } => x <= *value,
            Split::Category {
                category,
                seen,
                unknown_left,
            } => {
                let c = x as u32;
                if seen.binary_search(&c).is_ok() {
                    c == *category
                } else {
                    *unknown_left
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        /// Training weight (rows, counting bootstrap repeats).
        weight: f64,
        /// Positive-class frequency, or the mean target of a regression leaf.
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        counts: Option<[f64; 2]>,
    },
    Internal {
        feature: usize,
        split: Split,
        gain: f64,
        weight: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf_for(&self, row: &[f64]) -> &TreeNode {
        self.leaf_by(|f| row[f])
    }

    /// Descends reading feature `f` through `get(f)`.
    pub fn leaf_by(&self, get: impl Fn(usize) -> f64) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Internal {
            feature,
            split,
            left,
            right,
            ..
        } = node
        {
            node = if split.goes_left(get(*feature)) { left } else { right };
        }
        node
    }

    pub(crate) fn value_at(&self, x: &FeatureMatrix, i: usize) -> f64 {
        match self.leaf_by(|f| x.column(f)[i]) {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Internal { .. } => unreachable!("descent ends at a leaf"),
        }
    }

    /// Leaf value reached by `row`.
    pub fn value(&self, row: &[f64]) -> f64 {
        match self.leaf_for(row) {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Internal { .. } => unreachable!("descent ends at a leaf"),
        }
    }

    pub fn weight(&self) -> f64 {
        match self {
            TreeNode::Leaf { weight, .. } | TreeNode::Internal { weight, .. } => *weight,
        }
    }

    /// Number of split levels on the longest path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub(crate) fn visit_internal(&self, f: &mut impl FnMut(usize, f64, f64)) {
        if let TreeNode::Internal {
            feature,
            gain,
            weight,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *weight, *gain);
            left.visit_internal(f);
            right.visit_internal(f);
        }
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal { feature, left, right, .. } => {
                Some((*feature).max(left.max_feature().unwrap_or(0)).max(right.max_feature().unwrap_or(0)))
            }
        }
    }
}

/// Class (ties to 0) and positive-class probability of the leaf `row`
/// reaches.
pub fn predict_tree(tree: &TreeNode, row: &[f64]) -> (u8, f64) {
    match tree.leaf_for(row) {
        TreeNode::Leaf { value, counts, .. } => {
            let class = match counts {
                Some([c0, c1]) => u8::from(c1 > c0),
                None => u8::from(*value > 0.5),
            };
            (class, *value)
        }
        TreeNode::Internal { .. } => unreachable!("descent ends at a leaf"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub criterion: Criterion,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            criterion: Criterion::Gini,
            max_depth: 5,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

/// Best split found for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub split: Split,
    /// `Σ_j p_j · impurity_j` over the two branches.
    pub weighted_impurity: f64,
    pub gain: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    imp: f64,
    split: Split,
    left: Stats,
    right: Stats,
}

const NONE: u32 = u32::MAX;

/// Shared state of one level of split search.
struct Level<'a> {
    x: &'a FeatureMatrix,
    orders: &'a [Vec<u32>],
    target: Target<'a>,
    weights: &'a [f64],
    assign: &'a [u32],
    totals: &'a [Stats],
    active: &'a [bool],
    min_leaf: f64,
}

impl Level<'_> {
    fn consider(&self, best: &mut Option<Candidate>, total: &Stats, left: Stats, make: impl FnOnce() -> Split) {
        let right = total.sub(left);
        if left.w < self.min_leaf || right.w < self.min_leaf || left.w <= 0.0 || right.w <= 0.0 {
            return;
        }
        let imp = (left.w * self.target.impurity(&left) + right.w * self.target.impurity(&right)) / total.w;
        if best.as_ref().is_none_or(|b| imp < b.imp - GAIN_EPS) {
            *best = Some(Candidate {
                imp,
                split: make(),
                left,
                right,
            });
        }
    }

    fn search_feature(&self, f: usize) -> Vec<Option<Candidate>> {
        let k = self.totals.len();
        let col = self.x.column(f);
        let mut best: Vec<Option<Candidate>> = vec![None; k];
        match self.x.kind(f) {
            FeatureKind::Continuous => {
                let mut left = vec![Stats::default(); k];
                let mut last: Vec<Option<f64>> = vec![None; k];
                for &r in &self.orders[f] {
                    let r = r as usize;
                    let node = self.assign[r];
                    if node == NONE || !self.active[node as usize] {
                        continue;
                    }
                    let node = node as usize;
                    let v = col[r];
                    if let Some(lv) = last[node] {
                        if v > lv {
                            let mut t = 0.5 * (lv + v);
                            if t >= v {
                                t = lv;
                            }
                            self.consider(&mut best[node], &self.totals[node], left[node], || Split::Threshold { value: t });
                        }
                    }
                    self.target.add(&mut left[node], r, self.weights[r]);
                    last[node] = Some(v);
                }
            }
            FeatureKind::Categorical { cardinality } => {
                let card = cardinality as usize;
                let mut acc = vec![Stats::default(); k * card];
                for (r, &node) in self.assign.iter().enumerate() {
                    if node == NONE || !self.active[node as usize] {
                        continue;
                    }
                    let c = col[r] as usize;
                    self.target.add(&mut acc[node as usize * card + c], r, self.weights[r]);
                }
                for node in 0..k {
                    if !self.active[node] {
                        continue;
                    }
                    let per = &acc[node * card..(node + 1) * card];
                    for (c, s) in per.iter().enumerate() {
                        if s.w <= 0.0 {
                            continue;
                        }
                        let total = &self.totals[node];
                        self.consider(&mut best[node], total, *s, || {
                            let right = total.sub(*s);
                            Split::Category {
                                category: c as u32,
                                seen: (0..card as u32).filter(|&j| per[j as usize].w > 0.0).collect(),
                                unknown_left: s.w >= right.w,
                            }
                        });
                    }
                }
            }
        }
        best
    }

    /// Best candidate per node, features searched in parallel and merged in
    /// index order.
    fn search(&self) -> Vec<Option<(usize, Candidate)>> {
        let per_feature: Vec<Vec<Option<Candidate>>> =
            (0..self.x.n_features()).into_par_iter().map(|f| self.search_feature(f)).collect();
        let mut best: Vec<Option<(usize, Candidate)>> = vec![None; self.totals.len()];
        for (f, cands) in per_feature.into_iter().enumerate() {
            for (slot, cand) in best.iter_mut().zip(cands) {
                let Some(c) = cand else { continue };
                if slot.as_ref().is_none_or(|(_, b)| c.imp < b.imp - GAIN_EPS) {
                    *slot = Some((f, c));
                }
            }
        }
        best
    }
}

enum ArenaNode {
    Leaf(TreeNode),
    Internal {
        feature: usize,
        split: Split,
        gain: f64,
        weight: f64,
        left: usize,
        right: usize,
    },
}

fn assemble(arena: &mut Vec<Option<ArenaNode>>, i: usize) -> TreeNode {
    match arena[i].take().expect("each node assembled once") {
        ArenaNode::Leaf(l) => l,
        ArenaNode::Internal {
            feature,
            split,
            gain,
            weight,
            left,
            right,
        } => TreeNode::Internal {
            feature,
            split,
            gain,
            weight,
            left: Box::new(assemble(arena, left)),
            right: Box::new(assemble(arena, right)),
        },
    }
}

/// Level-wise greedy growth. `weights[i]` is the multiplicity of row `i`
/// (zero excludes it).
pub(crate) fn build(
    x: &FeatureMatrix,
    orders: &[Vec<u32>],
    target: Target<'_>,
    weights: &[f64],
    cfg: &TreeConfig,
) -> TreeNode {
    let n = x.n_rows();
    let mut assign = vec![NONE; n];
    let mut root = Stats::default();
    for (r, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            assign[r] = 0;
            target.add(&mut root, r, w);
        }
    }
    let mut arena: Vec<Option<ArenaNode>> = vec![None];
    // (arena index, stats, depth)
    let mut frontier = vec![(0usize, root, 0usize)];
    while !frontier.is_empty() {
        let totals: Vec<Stats> = frontier.iter().map(|f| f.1).collect();
        let active: Vec<bool> = frontier
            .iter()
            .map(|(_, s, d)| {
                *d < cfg.max_depth
                    && s.w >= cfg.min_samples_split as f64
                    && s.w >= 2.0 * cfg.min_samples_leaf as f64
                    && target.impurity(s) > GAIN_EPS
            })
            .collect();
        let best = if active.iter().any(|&a| a) {
            Level {
                x,
                orders,
                target,
                weights,
                assign: &assign,
                totals: &totals,
                active: &active,
                min_leaf: cfg.min_samples_leaf as f64,
            }
            .search()
        } else {
            vec![None; frontier.len()]
        };

        let mut next = Vec::new();
        // per frontier slot: (feature, split, left slot, right slot)
        let mut routes: Vec<Option<(usize, Split, u32, u32)>> = Vec::with_capacity(frontier.len());
        for ((idx, stats, depth), cand) in frontier.iter().zip(best) {
            let parent_imp = target.impurity(stats);
            match cand {
                // zero-gain splits are kept so interactions like XOR can be reached
                Some((feature, c)) if parent_imp - c.imp > -GAIN_EPS => {
                    let (l, r) = (arena.len(), arena.len() + 1);
                    arena.push(None);
                    arena.push(None);
                    arena[*idx] = Some(ArenaNode::Internal {
                        feature,
                        split: c.split.clone(),
                        gain: (parent_imp - c.imp).max(0.0),
                        weight: stats.w,
                        left: l,
                        right: r,
                    });
                    routes.push(Some((feature, c.split, next.len() as u32, next.len() as u32 + 1)));
                    next.push((l, c.left, depth + 1));
                    next.push((r, c.right, depth + 1));
                }
                _ => {
                    arena[*idx] = Some(ArenaNode::Leaf(target.leaf(stats)));
                    routes.push(None);
                }
            }
        }
        for (r, slot) in assign.iter_mut().enumerate() {
            if *slot == NONE {
                continue;
            }
            *slot = match &routes[*slot as usize] {
                None => NONE,
                Some((f, split, l, rr)) => {
                    if split.goes_left(x.column(*f)[r]) {
                        *l
                    } else {
                        *rr
                    }
                }
            };
        }
        frontier = next;
    }
    assemble(&mut arena, 0)
}

fn check_labels(x: &FeatureMatrix, labels: &[u8]) -> Result<()> {
    if labels.len() != x.n_rows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.n_rows())));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Input("labels must be 0 or 1".into()));
    }
    Ok(())
}

pub fn grow_tree(x: &FeatureMatrix, labels: &[u8], cfg: &TreeConfig) -> Result<TreeNode> {
    grow_tree_weighted(x, labels, &vec![1.0; x.n_rows()], &x.sorted_orders(), cfg)
}

pub(crate) fn grow_tree_weighted(
    x: &FeatureMatrix,
    labels: &[u8],
    weights: &[f64],
    orders: &[Vec<u32>],
    cfg: &TreeConfig,
) -> Result<TreeNode> {
    cfg.validate()?;
    check_labels(x, labels)?;
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::Input("cannot grow a tree on zero rows".into()));
    }
    let target = Target::Class {
        labels,
        criterion: cfg.criterion,
    };
    Ok(build(x, orders, target, weights, cfg))
}

fn single_node_search(
    x: &FeatureMatrix,
    labels: &[u8],
    rows: &[usize],
    features: &[usize],
    criterion: Criterion,
) -> Result<Option<SplitChoice>> {
    check_labels(x, labels)?;
    if rows.len() < 2 {
        return Err(Error::Input("best_split needs at least two rows".into()));
    }
    let mut weights = vec![0.0; x.n_rows()];
    for &r in rows {
        if r >= x.n_rows() {
            return Err(Error::Input(format!("row {r} out of range")));
        }
        weights[r] += 1.0;
    }
    let target = Target::Class { labels, criterion };
    let mut assign = vec![NONE; x.n_rows()];
    let mut total = Stats::default();
    for (r, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            assign[r] = 0;
            target.add(&mut total, r, w);
        }
    }
    let orders = x.sorted_orders();
    let level = Level {
        x,
        orders: &orders,
        target,
        weights: &weights,
        assign: &assign,
        totals: &[total],
        active: &[true],
        min_leaf: 1.0,
    };
    let parent = target.impurity(&total);
    let mut best: Option<SplitChoice> = None;
    for &f in features {
        if let Some(c) = level.search_feature(f).pop().flatten() {
            if best.as_ref().is_none_or(|b| c.imp < b.weighted_impurity - GAIN_EPS) {
                best = Some(SplitChoice {
                    feature: f,
                    split: c.split,
                    weighted_impurity: c.imp,
                    gain: (parent - c.imp).max(0.0),
                });
            }
        }
    }
    Ok(best)
}

/// Best split of `rows` on one feature; `None` when the feature is constant
/// over those rows.
pub fn best_split(
    x: &FeatureMatrix,
    labels: &[u8],
    rows: &[usize],
    feature: usize,
    criterion: Criterion,
) -> Result<Option<SplitChoice>> {
    if feature >= x.n_features() {
        return Err(Error::Input(format!("feature {feature} out of range")));
    }
    single_node_search(x, labels, rows, &[feature], criterion)
}

/// Best split of `rows` over every feature, ties to the lowest feature index.
pub fn best_split_any(x: &FeatureMatrix, labels: &[u8], rows: &[usize], criterion: Criterion) -> Result<Option<SplitChoice>> {
    let features: Vec<usize> = (0..x.n_features()).collect();
    single_node_search(x, labels, rows, &features, criterion)
}
