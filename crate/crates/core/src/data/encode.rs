use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dataset::{Cell, Dataset};
use super::schema::{ColumnKind, FeatureSchema};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

/// Category strings of one column in lexicographic order. Index 0 is the
/// unknown slot; `categories[i]` encodes as `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDictionary {
    pub column: String,
    pub categories: Vec<String>,
}

impl CategoryDictionary {
    pub fn index_of(&self, value: &str) -> u32 {
        match self.categories.binary_search_by(|c| c.as_str().cmp(value)) {
            Ok(i) => i as u32 + 1,
            Err(_) => 0,
        }
    }

    pub fn decode(&self, index: u32) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.categories.get(i as usize))
            .map(String::as_str)
    }

    /// Number of slots including the unknown slot.
    pub fn cardinality(&self) -> usize {
        self.categories.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStats {
    pub column: String,
    pub mean: f64,
    /// Population standard deviation over training rows.
    pub std: f64,
    /// Set when `std == 0`; the column then encodes as all zeros.
    pub constant: bool,
    /// `n_bins + 1` equal-width edges spanning the training min..max.
    pub bin_edges: Vec<f64>,
}

impl ContinuousStats {
    pub fn standardize(&self, v: f64) -> f64 {
        if self.constant {
            0.0
        } else {
            (v - self.mean) / self.std
        }
    }

    pub fn bin(&self, v: f64) -> u16 {
        let n = self.bin_edges.len() - 1;
        let (lo, hi) = (self.bin_edges[0], self.bin_edges[n]);
        if hi <= lo {
            return 0;
        }
        let b = ((v - lo) / (hi - lo) * n as f64).floor();
        b.clamp(0.0, (n - 1) as f64) as u16
    }
}

/// Shape of the encoded feature space, shared by every model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    /// (column name, cardinality including the unknown slot)
    pub categorical: Vec<(String, usize)>,
    pub continuous: Vec<String>,
    pub n_bins: usize,
}

impl FeatureLayout {
    pub fn n_categorical(&self) -> usize {
        self.categorical.len()
    }

    pub fn n_continuous(&self) -> usize {
        self.continuous.len()
    }

    /// Width of the one-hot categorical + raw continuous representation.
    pub fn one_hot_width(&self) -> usize {
        self.categorical.iter().map(|(_, c)| c).sum::<usize>() + self.continuous.len()
    }

    /// Width of the all-discrete count representation.
    pub fn count_width(&self) -> usize {
        self.categorical.iter().map(|(_, c)| c).sum::<usize>() + self.continuous.len() * self.n_bins
    }

    /// Tree-model feature order: categoricals first, then continuous.
    pub fn feature_names(&self) -> Vec<String> {
        self.categorical
            .iter()
            .map(|(n, _)| n.clone())
            .chain(self.continuous.iter().cloned())
            .collect()
    }
}

/// Fitted category dictionaries and standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub schema: FeatureSchema,
    pub categorical: Vec<CategoryDictionary>,
    pub continuous: Vec<ContinuousStats>,
    pub n_bins: usize,
    pub warnings: Vec<String>,
}

/// Dense row-major numeric view of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub layout: FeatureLayout,
    pub categories: Vec<u32>,
    pub continuous: Vec<f64>,
    pub bins: Vec<u16>,
    pub labels: Vec<u8>,
}

fn same_columns(a: &FeatureSchema, b: &FeatureSchema) -> bool {
    a.columns == b.columns && a.target_positive_label == b.target_positive_label
}

pub fn label_of(cell: &Cell, positive: &str) -> Result<u8> {
    match cell {
        Cell::Text(s) => Ok(u8::from(
            s.trim().to_lowercase() == positive.trim().to_lowercase(),
        )),
        _ => Err(Error::Input("missing or non-text target cell".into())),
    }
}

impl Encoder {
    pub fn fit(train: &Dataset) -> Result<Encoder> {
        Self::fit_with_bins(train, DEFAULT_BINS)
    }

    pub fn fit_with_bins(train: &Dataset, n_bins: usize) -> Result<Encoder> {
        if n_bins == 0 {
            return Err(Error::Config("n_bins must be at least 1".into()));
        }
        let mut categorical = Vec::new();
        let mut continuous = Vec::new();
        let mut warnings = Vec::new();
        for (j, col) in train.schema.columns.iter().enumerate() {
            match col.kind {
                ColumnKind::Categorical => {
                    let set: BTreeSet<&str> =
                        train.column_cells(j).filter_map(Cell::as_text).collect();
                    categorical.push(CategoryDictionary {
                        column: col.name.clone(),
                        categories: set.into_iter().map(str::to_string).collect(),
                    });
                }
                ColumnKind::Continuous => {
                    let vals: Vec<f64> = train.column_cells(j).filter_map(Cell::as_real).collect();
                    let n = vals.len().max(1) as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let (lo, hi) = if vals.is_empty() { (0.0, 0.0) } else { (lo, hi) };
                    let bin_edges = (0..=n_bins)
                        .map(|b| lo + (hi - lo) * b as f64 / n_bins as f64)
                        .collect();
                    let constant = !(std > 0.0);
                    if constant {
                        let msg = format!("continuous column `{}` is constant; encoded as zeros", col.name);
                        log::warn!("{msg}");
                        warnings.push(msg);
                    }
                    continuous.push(ContinuousStats {
                        column: col.name.clone(),
                        mean,
                        std,
                        constant,
                        bin_edges,
                    });
                }
                ColumnKind::Date => {
                    log::debug!("date column `{}` is not encoded", col.name);
                }
                ColumnKind::Target => {}
            }
        }
        Ok(Encoder {
            schema: train.schema.clone(),
            categorical,
            continuous,
            n_bins,
            warnings,
        })
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            categorical: self
                .categorical
                .iter()
                .map(|d| (d.column.clone(), d.cardinality()))
                .collect(),
            continuous: self.continuous.iter().map(|s| s.column.clone()).collect(),
            n_bins: self.n_bins,
        }
    }

    pub fn transform(&self, ds: &Dataset) -> Result<EncodedDataset> {
        if !same_columns(&self.schema, &ds.schema) {
            return Err(Error::Schema(
                "dataset columns differ from the encoder's training schema".into(),
            ));
        }
        let cat_idx: Vec<usize> = self
            .categorical
            .iter()
            .map(|d| ds.schema.index_of(&d.column).expect("same schema"))
            .collect();
        let cont_idx: Vec<usize> = self
            .continuous
            .iter()
            .map(|s| ds.schema.index_of(&s.column).expect("same schema"))
            .collect();
        let target = ds.schema.target_index();
        let positive = &ds.schema.target_positive_label;

        let n = ds.len();
        let mut out = EncodedDataset {
            layout: self.layout(),
            categories: Vec::with_capacity(n * cat_idx.len()),
            continuous: Vec::with_capacity(n * cont_idx.len()),
            bins: Vec::with_capacity(n * cont_idx.len()),
            labels: Vec::with_capacity(n),
        };
        for row in &ds.rows {
            for (d, &j) in self.categorical.iter().zip(&cat_idx) {
                out.categories
                    .push(row[j].as_text().map(|s| d.index_of(s)).unwrap_or(0));
            }
            for (s, &j) in self.continuous.iter().zip(&cont_idx) {
                match row[j].as_real() {
                    Some(v) => {
                        out.continuous.push(s.standardize(v));
                        out.bins.push(s.bin(v));
                    }
                    None => {
                        out.continuous.push(0.0);
                        out.bins.push(s.bin(s.mean));
                    }
                }
            }
            out.labels.push(label_of(&row[target], positive)?);
        }
        Ok(out)
    }

    pub fn decode_category(&self, column: usize, index: u32) -> Option<&str> {
        self.categorical.get(column).and_then(|d| d.decode(index))
    }
}

/// Fits an encoder on `train` and applies it to both datasets.
pub fn encode(train: &Dataset, other: &Dataset) -> Result<(EncodedDataset, EncodedDataset, Encoder)> {
    if !same_columns(&train.schema, &other.schema) {
        return Err(Error::Schema("train and other datasets have different schemas".into()));
    }
    let enc = Encoder::fit(train)?;
    Ok((enc.transform(train)?, enc.transform(other)?, enc))
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cat_row(&self, i: usize) -> &[u32] {
        let k = self.layout.n_categorical();
        &self.categories[i * k..(i + 1) * k]
    }

    pub fn cont_row(&self, i: usize) -> &[f64] {
        let k = self.layout.n_continuous();
        &self.continuous[i * k..(i + 1) * k]
    }

    pub fn bin_row(&self, i: usize) -> &[u16] {
        let k = self.layout.n_continuous();
        &self.bins[i * k..(i + 1) * k]
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    /// Nonzero entries of the one-hot categorical + continuous representation.
    pub fn one_hot_entries(&self, i: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.layout.n_categorical() + self.layout.n_continuous());
        let mut offset = 0;
        for (&idx, (_, card)) in self.cat_row(i).iter().zip(&self.layout.categorical) {
            out.push((offset + idx as usize, 1.0));
            offset += card;
        }
        for (j, &v) in self.cont_row(i).iter().enumerate() {
            out.push((offset + j, v));
        }
        out
    }

    /// Indices of the active slots in the all-discrete count representation
    /// (each with count one).
    pub fn count_entries(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layout.n_categorical() + self.layout.n_continuous());
        let mut offset = 0;
        for (&idx, (_, card)) in self.cat_row(i).iter().zip(&self.layout.categorical) {
            out.push(offset + idx as usize);
            offset += card;
        }
        for &b in self.bin_row(i) {
            out.push(offset + b as usize);
            offset += self.layout.n_bins;
        }
        out
    }

    /// Tree-model feature value: the category index as a real for
    /// categoricals, the standardized value for continuous columns.
    pub fn feature(&self, i: usize, f: usize) -> f64 {
        let k = self.layout.n_categorical();
        if f < k {
            self.categories[i * k + f] as f64
        } else {
            self.continuous[i * self.layout.n_continuous() + (f - k)]
        }
    }

    pub fn n_features(&self) -> usize {
        self.layout.n_categorical() + self.layout.n_continuous()
    }

    pub fn is_categorical(&self, f: usize) -> bool {
        f < self.layout.n_categorical()
    }

    pub fn select(&self, rows: &[usize]) -> EncodedDataset {
        let kc = self.layout.n_categorical();
        let kn = self.layout.n_continuous();
        let mut out = EncodedDataset {
            layout: self.layout.clone(),
            categories: Vec::with_capacity(rows.len() * kc),
            continuous: Vec::with_capacity(rows.len() * kn),
            bins: Vec::with_capacity(rows.len() * kn),
            labels: Vec::with_capacity(rows.len()),
        };
        for &i in rows {
            out.categories.extend_from_slice(self.cat_row(i));
            out.continuous.extend_from_slice(self.cont_row(i));
            out.bins.extend_from_slice(self.bin_row(i));
            out.labels.push(self.labels[i]);
        }
        out
    }
}
