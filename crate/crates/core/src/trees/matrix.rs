use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

/// Column-major feature table for the tree models. Categorical columns hold
/// category indices stored as reals; continuous columns hold standardized
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
    kinds: Vec<FeatureKind>,
    names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    /// Values are category indices below `cardinality`.
    Categorical { cardinality: u32 },
}

impl FeatureMatrix {
    pub fn new(columns: Vec<Vec<f64>>, kinds: Vec<FeatureKind>, names: Vec<String>) -> Result<Self> {
        if columns.len() != kinds.len() || columns.len() != names.len() {
            return Err(Error::Shape("columns, kinds and names differ in length".into()));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (col, kind) in columns.iter().zip(&kinds) {
            if col.len() != n_rows {
                return Err(Error::Shape("ragged feature columns".into()));
            }
            match kind {
                FeatureKind::Continuous => {
                    if col.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Input("non-finite feature value".into()));
                    }
                }
                FeatureKind::Categorical { cardinality } => {
                    if col.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || v >= *cardinality as f64) {
                        return Err(Error::Input("category index out of range".into()));
                    }
                }
            }
        }
        Ok(FeatureMatrix {
            n_rows,
            columns,
            kinds,
            names,
        })
    }

    pub fn from_encoded(data: &EncodedDataset) -> Self {
        let n = data.len();
        let mut columns = Vec::with_capacity(data.n_features());
        let mut kinds = Vec::with_capacity(data.n_features());
        for f in 0..data.n_features() {
            columns.push((0..n).map(|i| data.feature(i, f)).collect());
            kinds.push(if data.is_categorical(f) {
                FeatureKind::Categorical {
                    cardinality: data.layout.categorical[f].1 as u32,
                }
            } else {
                FeatureKind::Continuous
            });
        }
        FeatureMatrix {
            n_rows: n,
            columns,
            kinds,
            names: data.layout.feature_names(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, f: usize) -> &[f64] {
        &self.columns[f]
    }

    pub fn kind(&self, f: usize) -> FeatureKind {
        self.kinds[f]
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Row indices of every continuous column sorted by value (ties by
    /// index); empty for categorical columns.
    pub(crate) fn sorted_orders(&self) -> Vec<Vec<u32>> {
        self.columns
            .iter()
            .zip(&self.kinds)
            .map(|(col, kind)| match kind {
                FeatureKind::Continuous => {
                    let mut idx: Vec<u32> = (0..self.n_rows as u32).collect();
                    idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                    idx
                }
                FeatureKind::Categorical { .. } => Vec::new(),
            })
            .collect()
    }
}
