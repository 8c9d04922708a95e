use std::path::Path;

use chrono::NaiveDate;

use super::schema::{ColumnKind, FeatureSchema};
use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Real(f64),
    Date(NaiveDate),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Cell::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<NaiveDate> {
        match self {
            Cell::Date(d) => Some(*d),
            _ => None,
        }
    }

    /// Parses a raw CSV field according to the column kind. Unparseable and
    /// empty fields become `Missing`.
    pub fn parse(raw: &str, kind: ColumnKind) -> Cell {
        match kind {
            ColumnKind::Categorical | ColumnKind::Target => {
                if raw.trim().is_empty() {
                    Cell::Missing
                } else {
                    Cell::Text(raw.to_string())
                }
            }
            ColumnKind::Continuous => match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Cell::Real(v),
                _ => Cell::Missing,
            },
            ColumnKind::Date => NaiveDate::parse_from_str(raw.trim(), DATE_FORMAT)
                .map(Cell::Date)
                .unwrap_or(Cell::Missing),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Real(v) => format!("{v}"),
            Cell::Date(d) => d.format(DATE_FORMAT).to_string(),
            Cell::Missing => String::new(),
        }
    }
}

/// Rows of cells aligned with the schema's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<Cell>>) -> Result<Self> {
        schema.validate()?;
        let width = schema.columns.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::Shape(format!(
                "row {i} has {} cells, schema has {width} columns",
                r.len()
            )));
        }
        Ok(Dataset { schema, rows })
    }

    pub fn empty(schema: FeatureSchema) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_cells(&self, index: usize) -> impl Iterator<Item = &Cell> {
        self.rows.iter().map(move |r| &r[index])
    }

    pub fn with_rows(&self, rows: Vec<Vec<Cell>>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows,
        }
    }
}

/// Reads an RFC-4180 CSV with a header row. Extra columns in the file are
/// ignored; every schema column must be present in the header.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &FeatureSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().any(|h| h.trim().is_empty()) {
        return Err(Error::Input("malformed header: empty column name".into()));
    }
    let mut positions = Vec::with_capacity(schema.columns.len());
    for c in &schema.columns {
        let pos = headers
            .iter()
            .position(|h| h.trim() == c.name)
            .ok_or_else(|| Error::MissingColumn(c.name.clone()))?;
        positions.push(pos);
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = schema
            .columns
            .iter()
            .zip(&positions)
            .map(|(c, &p)| Cell::parse(record.get(p).unwrap_or(""), c.kind))
            .collect();
        rows.push(row);
    }
    Dataset::new(schema.clone(), rows)
}

pub fn write_csv<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ds.schema.columns.iter().map(|c| c.name.as_str()))?;
    for row in &ds.rows {
        wtr.write_record(row.iter().map(Cell::render))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))
}
