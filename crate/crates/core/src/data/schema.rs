use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Continuous,
    Date,
    Target,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Categorical => "categorical",
            ColumnKind::Continuous => "continuous",
            ColumnKind::Date => "date",
            ColumnKind::Target => "target",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column {
            name: name.into(),
            kind,
        }
    }
}

/// Rows on or after `start_date` (by `order_column`) were drawn from shifted
/// feature distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftInfo {
    pub order_column: String,
    pub start_date: NaiveDate,
    pub shifted_columns: Vec<String>,
    /// Shift applied to each column, in units of its base-range std-dev.
    pub shift_stds: f64,
}

/// Ground truth of the synthetic generator: the logistic model that produced
/// the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub seed: u64,
    pub n_rows: usize,
    pub positive_rate: f64,
    pub temperature: f64,
    pub intercept: f64,
    /// Coefficient per standardized continuous feature, or per
    /// `column=value` indicator for categoricals.
    pub coefficients: BTreeMap<String, f64>,
    /// The single feature with the largest effect on the label.
    pub planted_feature: String,
}

/// Ordered column metadata for a tabular dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
    pub target_positive_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>, target_positive_label: impl Into<String>) -> Result<Self> {
        let schema = FeatureSchema {
            columns,
            target_positive_label: target_positive_label.into(),
            drift: None,
            generator: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let targets = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Target)
            .count();
        if targets != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one target column, found {targets}"
            )));
        }
        if self.columns.len() < 2 {
            return Err(Error::Schema("no feature columns".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: FeatureSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<(usize, &Column)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Target)
            .expect("validated schema has a target column")
    }

    pub fn names_of(&self, kind: ColumnKind) -> impl Iterator<Item = &str> {
        self.columns
            .iter()
            .filter(move |c| c.kind == kind)
            .map(|c| c.name.as_str())
    }

    /// Fingerprint over column names, kinds and the positive label.
    /// Generator metadata does not contribute.
    pub fn fingerprint(&self) -> u64 {
        let mut text = String::new();
        for c in &self.columns {
            text.push_str(&c.name);
            text.push(':');
            text.push_str(c.kind.as_str());
            text.push(';');
        }
        text.push_str(&self.target_positive_label);
        crate::seed::fnv1a(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> Vec<Column> {
        vec![
            Column::new("a", ColumnKind::Categorical),
            Column::new("y", ColumnKind::Target),
        ]
    }

    #[test]
    fn rejects_bad_schemas() {
        assert!(FeatureSchema::new(cols(), "yes").is_ok());
        let mut two_targets = cols();
        two_targets.push(Column::new("z", ColumnKind::Target));
        assert!(FeatureSchema::new(two_targets, "yes").is_err());
        let mut dup = cols();
        dup.push(Column::new("a", ColumnKind::Continuous));
        assert!(FeatureSchema::new(dup, "yes").is_err());
        assert!(FeatureSchema::new(vec![Column::new("y", ColumnKind::Target)], "yes").is_err());
    }

    #[test]
    fn json_uses_lowercase_kinds() {
        let s = FeatureSchema::new(cols(), "yes").unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains(r#""kind":"categorical""#));
        assert!(!json.contains("drift"));
        let back: FeatureSchema = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn fingerprint_ignores_metadata() {
        let a = FeatureSchema::new(cols(), "yes").unwrap();
        let mut b = a.clone();
        b.drift = Some(DriftInfo {
            order_column: "d".into(),
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            shifted_columns: vec![],
            shift_stds: 1.0,
        });
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = FeatureSchema::new(cols(), "no").unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
