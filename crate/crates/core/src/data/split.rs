use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::encode::EncodedDataset;
use super::schema::ColumnKind;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub order_column: String,
    pub oversample: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(order_column: impl Into<String>) -> Self {
        SplitSpec {
            test_fraction: 0.2,
            order_column: order_column.into(),
            oversample: true,
            seed: 0,
        }
    }

    fn validate(&self, ds: &Dataset) -> Result<usize> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        let (idx, col) = ds.schema.column(&self.order_column)?;
        if col.kind != ColumnKind::Date {
            return Err(Error::ColumnKind {
                column: self.order_column.clone(),
                expected: "date",
                found: col.kind.as_str(),
            });
        }
        Ok(idx)
    }
}

/// `(train, test)` sizes: the test block is `ceil(fraction * n)` rows.
pub fn split_sizes(n: usize, test_fraction: f64) -> (usize, usize) {
    // Guard against 0.2 * 10 landing a hair above 2.
    let test = ((test_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let test = test.min(n);
    (n - test, test)
}

/// Sorts rows by the order column (stable) and holds out the latest block.
pub fn time_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let idx = spec.validate(ds)?;
    if ds.is_empty() {
        return Err(Error::Input("cannot split an empty dataset".into()));
    }
    let mut keyed = Vec::with_capacity(ds.len());
    for (i, r) in ds.rows.iter().enumerate() {
        let d = r[idx].as_date().ok_or_else(|| {
            Error::Input(format!(
                "row {i}: unparseable `{}` in order column",
                spec.order_column
            ))
        })?;
        keyed.push((d, i));
    }
    keyed.sort_by_key(|&(d, _)| d);
    let (n_train, _) = split_sizes(ds.len(), spec.test_fraction);
    let take = |range: &[(chrono::NaiveDate, usize)]| {
        range.iter().map(|&(_, i)| ds.rows[i].clone()).collect::<Vec<_>>()
    };
    Ok((
        ds.with_rows(take(&keyed[..n_train])),
        ds.with_rows(take(&keyed[n_train..])),
    ))
}

/// Appends uniformly drawn copies of minority-class rows until both classes
/// have the same count. Balanced input is returned unchanged.
pub fn oversample(train: &EncodedDataset, seed: u64) -> Result<EncodedDataset> {
    let [neg, pos] = train.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Input("oversampling needs both classes present".into()));
    }
    let minority = u8::from(pos < neg);
    let deficit = neg.abs_diff(pos);
    let pool: Vec<usize> = (0..train.len())
        .filter(|&i| train.labels[i] == minority)
        .collect();
    let mut rng = seed::rng(seed);
    let mut rows: Vec<usize> = (0..train.len()).collect();
    rows.extend((0..deficit).map(|_| pool[rng.gen_range(0..pool.len())]));
    Ok(train.select(&rows))
}
