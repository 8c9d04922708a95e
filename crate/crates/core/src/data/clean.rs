use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::dataset::{Cell, Dataset};
use super::schema::ColumnKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Rows whose continuous value lies further than this many population
    /// std-devs from the column mean are dropped.
    pub z_max: f64,
    /// Rows carrying a categorical value seen in fewer rows than this are
    /// dropped.
    pub min_freq: usize,
    /// Categorical columns whose most frequent value covers at least this
    /// share of rows are removed. `None` disables the rule.
    pub imbalance: Option<f64>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            z_max: 4.0,
            min_freq: 5,
            imbalance: Some(0.99),
        }
    }
}

/// Lowercases and trims text, then repeatedly drops incomplete rows,
/// imbalanced categorical columns and outlier rows until nothing changes.
/// Iterating to a fixed point makes the operation idempotent.
pub fn clean(ds: &Dataset, cfg: &CleanConfig) -> Dataset {
    let mut schema = ds.schema.clone();
    let mut rows: Vec<Vec<Cell>> = ds
        .rows
        .iter()
        .map(|r| r.iter().map(normalize).collect())
        .collect();

    loop {
        let before = (rows.len(), schema.columns.len());
        rows.retain(|r| !r.iter().any(Cell::is_missing));

        if let Some(share) = cfg.imbalance {
            if let Some(col) = imbalanced_column(&schema.columns, &rows, share) {
                log::debug!("dropping imbalanced column `{}`", schema.columns[col].name);
                schema.columns.remove(col);
                for r in &mut rows {
                    r.remove(col);
                }
            }
        }

        let mut drop = vec![false; rows.len()];
        for (j, col) in schema.columns.iter().enumerate() {
            match col.kind {
                ColumnKind::Continuous => mark_z_outliers(&rows, j, cfg.z_max, &mut drop),
                ColumnKind::Categorical => mark_rare(&rows, j, cfg.min_freq, &mut drop),
                _ => {}
            }
        }
        let mut keep = drop.iter().map(|d| !d);
        rows.retain(|_| keep.next().unwrap_or(true));

        if (rows.len(), schema.columns.len()) == before {
            break;
        }
    }
    Dataset { schema, rows }
}

pub(crate) fn normalize(cell: &Cell) -> Cell {
    match cell {
        Cell::Text(s) => {
            let t = s.trim().to_lowercase();
            if t.is_empty() {
                Cell::Missing
            } else {
                Cell::Text(t)
            }
        }
        other => other.clone(),
    }
}

fn imbalanced_column(
    columns: &[super::schema::Column],
    rows: &[Vec<Cell>],
    share: f64,
) -> Option<usize> {
    if rows.is_empty() {
        return None;
    }
    let features = columns
        .iter()
        .filter(|c| c.kind != ColumnKind::Target)
        .count();
    if features <= 1 {
        return None;
    }
    columns.iter().enumerate().find_map(|(j, c)| {
        if c.kind != ColumnKind::Categorical {
            return None;
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in rows {
            if let Cell::Text(s) = &r[j] {
                *counts.entry(s.as_str()).or_default() += 1;
            }
        }
        let top = counts.values().copied().max().unwrap_or(0);
        (top as f64 / rows.len() as f64 >= share).then_some(j)
    })
}

fn mark_z_outliers(rows: &[Vec<Cell>], j: usize, z_max: f64, drop: &mut [bool]) {
    let values: Vec<f64> = rows.iter().filter_map(|r| r[j].as_real()).collect();
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 0.0 {
        return;
    }
    for (i, r) in rows.iter().enumerate() {
        if let Some(v) = r[j].as_real() {
            if ((v - mean) / std).abs() > z_max {
                drop[i] = true;
            }
        }
    }
}

fn mark_rare(rows: &[Vec<Cell>], j: usize, min_freq: usize, drop: &mut [bool]) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        if let Cell::Text(s) = &r[j] {
            *counts.entry(s.as_str()).or_default() += 1;
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if let Cell::Text(s) = &r[j] {
            if counts[s.as_str()] < min_freq {
                drop[i] = true;
            }
        }
    }
}
