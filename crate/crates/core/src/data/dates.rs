use chrono::{Datelike, NaiveDate};

use super::dataset::{Cell, Dataset};
use super::schema::{Column, ColumnKind};
use crate::error::{Error, Result};

pub const DATE_PARTS: [&str; 5] = ["year", "month", "week", "dow", "day"];

/// Calendar parts of a date: year, month (1-12), ISO-8601 week (1-53),
/// day of week (Monday = 0) and day of month (1-31).
pub fn date_parts(d: NaiveDate) -> [u32; 5] {
    [
        d.year() as u32,
        d.month(),
        d.iso_week().week(),
        d.weekday().num_days_from_monday(),
        d.day(),
    ]
}

/// Replaces a date column, in place, by five categorical columns named
/// `<column>_year`, `<column>_month`, `<column>_week`, `<column>_dow` and
/// `<column>_day`.
pub fn expand_date(ds: &Dataset, column: &str) -> Result<Dataset> {
    let (idx, col) = ds.schema.column(column)?;
    if col.kind != ColumnKind::Date {
        return Err(Error::ColumnKind {
            column: column.to_string(),
            expected: "date",
            found: col.kind.as_str(),
        });
    }
    let mut schema = ds.schema.clone();
    let parts: Vec<Column> = DATE_PARTS
        .iter()
        .map(|p| Column::new(format!("{column}_{p}"), ColumnKind::Categorical))
        .collect();
    schema.columns.splice(idx..=idx, parts);
    schema.validate()?;

    let rows = ds
        .rows
        .iter()
        .map(|r| {
            let mut out = Vec::with_capacity(r.len() + 4);
            out.extend_from_slice(&r[..idx]);
            match r[idx].as_date() {
                Some(d) => out.extend(date_parts(d).iter().map(|v| Cell::Text(v.to_string()))),
                None => out.extend(std::iter::repeat_n(Cell::Missing, 5)),
            }
            out.extend_from_slice(&r[idx + 1..]);
            out
        })
        .collect();
    Ok(Dataset { schema, rows })
}
