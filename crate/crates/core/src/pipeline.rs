//! Raw rows to encoded train/test sets, in a fixed order: clean, split by
//! date, expand dates, encode on the training block, oversample.

use serde::{Deserialize, Serialize};

use crate::data::{
    clean, expand_date, normalize_cell, oversample, time_split, Cell, CleanConfig, ColumnKind, Dataset, EncodedDataset,
    Encoder, SplitSpec, DEFAULT_BINS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub clean: CleanConfig,
    pub test_fraction: f64,
    /// Date column ordering the split; `None` picks the first date column.
    pub order_column: Option<String>,
    pub oversample: bool,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            clean: CleanConfig::default(),
            test_fraction: 0.2,
            order_column: None,
            oversample: true,
            n_bins: DEFAULT_BINS,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn split_spec(&self, ds: &Dataset) -> Result<SplitSpec> {
        let order_column = match &self.order_column {
            Some(c) => c.clone(),
            None => ds
                .schema
                .names_of(ColumnKind::Date)
                .next()
                .ok_or_else(|| Error::Schema("no date column to order the split by".into()))?
                .to_string(),
        };
        Ok(SplitSpec {
            test_fraction: self.test_fraction,
            order_column,
            oversample: self.oversample,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: EncodedDataset,
    pub test: EncodedDataset,
    pub encoder: Encoder,
    /// Cleaned test rows before date expansion, in split order.
    pub test_rows: Dataset,
}

/// Replaces every date column by its calendar parts.
pub fn expand_dates(ds: &Dataset) -> Result<Dataset> {
    let dates: Vec<String> = ds.schema.names_of(ColumnKind::Date).map(str::to_string).collect();
    let mut out = ds.clone();
    for d in dates {
        out = expand_date(&out, &d)?;
    }
    Ok(out)
}

/// Cleans and splits; the test block is what evaluation scores against.
pub fn clean_and_split(ds: &Dataset, cfg: &PipelineConfig) -> Result<(Dataset, Dataset)> {
    let cleaned = clean(ds, &cfg.clean);
    if cleaned.is_empty() {
        return Err(Error::Input("no rows left after cleaning".into()));
    }
    time_split(&cleaned, &cfg.split_spec(ds)?)
}

pub fn prepare(ds: &Dataset, cfg: &PipelineConfig) -> Result<Prepared> {
    let (train_rows, test_rows) = clean_and_split(ds, cfg)?;
    let train_x = expand_dates(&train_rows)?;
    let test_x = expand_dates(&test_rows)?;
    let encoder = Encoder::fit_with_bins(&train_x, cfg.n_bins)?;
    let mut train = encoder.transform(&train_x)?;
    let test = encoder.transform(&test_x)?;
    if cfg.oversample {
        train = oversample(&train, cfg.seed)?;
    }
    log::info!("prepared {} training rows and {} test rows", train.len(), test.len());
    Ok(Prepared {
        train,
        test,
        encoder,
        test_rows,
    })
}

/// Encodes rows for a fitted encoder without dropping any: text is
/// normalized, dates expanded, columns matched by name. Missing cells encode
/// as unknown category / training mean. A missing target is an error when
/// `require_labels` is set and label 0 otherwise.
pub fn encode_rows(encoder: &Encoder, ds: &Dataset, require_labels: bool) -> Result<EncodedDataset> {
    let normalized = Dataset {
        schema: ds.schema.clone(),
        rows: ds.rows.iter().map(|r| r.iter().map(normalize_cell).collect()).collect(),
    };
    let expanded = expand_dates(&normalized)?;
    let want = &encoder.schema;
    if expanded.schema.target_positive_label.trim().to_lowercase() != want.target_positive_label.trim().to_lowercase() {
        return Err(Error::Schema("positive label differs from the model's schema".into()));
    }
    let mut idx = Vec::with_capacity(want.columns.len());
    for col in &want.columns {
        let (j, have) = expanded.schema.column(&col.name)?;
        if have.kind != col.kind {
            return Err(Error::ColumnKind {
                column: col.name.clone(),
                expected: col.kind.as_str(),
                found: have.kind.as_str(),
            });
        }
        idx.push(j);
    }
    let target = want.target_index();
    let mut rows = Vec::with_capacity(expanded.len());
    for (i, r) in expanded.rows.iter().enumerate() {
        let mut row: Vec<Cell> = idx.iter().map(|&j| r[j].clone()).collect();
        if row[target].is_missing() {
            if require_labels {
                return Err(Error::Input(format!("row {i}: missing target")));
            }
            row[target] = Cell::Text(String::new());
        }
        rows.push(row);
    }
    let projected = Dataset {
        schema: want.clone(),
        rows,
    };
    encoder.transform(&projected)
}
