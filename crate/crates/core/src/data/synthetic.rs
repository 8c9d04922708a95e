//! Synthetic billing data with a known logistic ground truth.
//!
//! Columns mirror a utility's bill-level records: customer age band, bill
//! issue and due dates, delivery method, remoteness, income grouping, bill
//! duration, account age and six area-level medians. Labels come from a
//! logistic model over a subset of those features, so every generated
//! dataset is learnable and the most influential feature is known.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Cell, Dataset};
use super::schema::{Column, ColumnKind, DriftInfo, FeatureSchema, GeneratorInfo};
use crate::error::{Error, Result};
use crate::seed;

pub const TARGET: &str = "paid_on_time";
pub const ISSUE_DATE: &str = "bill_issue_date";
pub const DUE_DATE: &str = "bill_due_date";
pub const PLANTED_FEATURE: &str = "median_household_income";

const AGE_RANGES: [(&str, f64); 6] = [
    ("18-24", -0.6),
    ("25-34", -0.3),
    ("35-44", 0.0),
    ("45-54", 0.2),
    ("55-64", 0.4),
    ("65+", 0.6),
];
const SEND_METHODS: [(&str, f64); 3] = [("email", 0.3), ("post", -0.3), ("sms", 0.0)];
const REMOTENESS: [(&str, f64); 5] = [
    ("major city", 0.3),
    ("inner regional", 0.1),
    ("outer regional", 0.0),
    ("remote", -0.2),
    ("very remote", -0.4),
];
const INCOME_GROUPS: [(&str, f64); 5] = [
    ("low", -0.4),
    ("lower middle", -0.2),
    ("middle", 0.0),
    ("upper middle", 0.2),
    ("high", 0.4),
];

/// (name, mean, std, coefficient on the standardized value, shifted under drift)
const CONTINUOUS: [(&str, f64, f64, f64, bool); 8] = [
    ("bill_duration", 91.0, 8.0, -0.5, false),
    ("account_age", 8.0, 3.0, 0.8, false),
    (PLANTED_FEATURE, 1500.0, 350.0, 2.0, false),
    ("median_household_size", 2.6, 0.3, 0.0, true),
    ("median_persons_per_bedroom", 0.9, 0.12, 0.0, true),
    ("median_weekly_income", 700.0, 150.0, 0.0, true),
    ("median_weekly_rent", 350.0, 80.0, -0.3, false),
    ("median_weekly_mortgage", 420.0, 90.0, 0.0, true),
];
/// Amplitude of the due-month seasonal effect.
const SEASONAL: f64 = 0.3;
const DATE_SPAN_DAYS: i64 = 3 * 365;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_rows: usize,
    pub positive_rate: f64,
    pub drift: bool,
    /// Label noise: labels are Bernoulli(sigmoid(logit / temperature)).
    /// Zero makes labels a deterministic threshold of the logit.
    pub temperature: f64,
    /// Share of the date range (the latest part) whose features drift.
    pub drift_fraction: f64,
    /// Drift shift in base std-devs.
    pub drift_shift: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_rows: 10_000,
            positive_rate: 0.5837,
            drift: false,
            temperature: 1.0,
            drift_fraction: 0.2,
            drift_shift: 4.0,
        }
    }
}

impl SyntheticConfig {
    pub fn new(n_rows: usize, positive_rate: f64, drift: bool) -> Self {
        SyntheticConfig {
            n_rows,
            positive_rate,
            drift,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("n_rows must be at least 1".into()));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(Error::Config("positive_rate must be in (0,1)".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("temperature must be finite and >= 0".into()));
        }
        if !(self.drift_fraction > 0.0 && self.drift_fraction < 1.0) {
            return Err(Error::Config("drift_fraction must be in (0,1)".into()));
        }
        Ok(())
    }
}

pub fn synthetic_schema() -> Vec<Column> {
    let mut cols = vec![
        Column::new("age_range", ColumnKind::Categorical),
        Column::new(ISSUE_DATE, ColumnKind::Date),
        Column::new(DUE_DATE, ColumnKind::Date),
        Column::new("send_method", ColumnKind::Categorical),
        Column::new("remoteness", ColumnKind::Categorical),
        Column::new("income_group", ColumnKind::Categorical),
    ];
    cols.extend(
        CONTINUOUS
            .iter()
            .map(|(n, ..)| Column::new(*n, ColumnKind::Continuous)),
    );
    cols.push(Column::new(TARGET, ColumnKind::Target));
    cols
}

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 1, 2).expect("valid date")
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Ground-truth coefficients keyed by feature (`column=value` for
/// categoricals).
pub fn ground_truth_coefficients() -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    let cats: [(&str, &[(&str, f64)]); 4] = [
        ("age_range", &AGE_RANGES),
        ("send_method", &SEND_METHODS),
        ("remoteness", &REMOTENESS),
        ("income_group", &INCOME_GROUPS),
    ];
    for (col, table) in cats {
        for (v, w) in table {
            m.insert(format!("{col}={v}"), *w);
        }
    }
    for (n, _, _, w, _) in CONTINUOUS {
        m.insert(n.to_string(), w);
    }
    m.insert(format!("{DUE_DATE}_month(seasonal amplitude)"), SEASONAL);
    m
}

fn messy(rng: &mut seed::Rng, s: &str) -> String {
    match rng.gen_range(0..10) {
        0 => s.to_uppercase(),
        1 => format!(" {s} "),
        _ => s.to_string(),
    }
}

/// Generates a dataset whose `schema.generator` records the ground truth
/// and, with drift enabled, whose `schema.drift` marks the shifted range.
pub fn generate_synthetic(cfg: &SyntheticConfig, seed_value: u64) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = seed::rng(seed_value);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = cfg.n_rows;
    let drift_start_day = ((1.0 - cfg.drift_fraction) * DATE_SPAN_DAYS as f64).round() as i64;

    let mut rows = Vec::with_capacity(n);
    let mut logits = Vec::with_capacity(n);
    for i in 0..n {
        let day = (i as i64 * DATE_SPAN_DAYS) / n as i64;
        let issued = start_date() + Duration::days(day);
        let due = issued + Duration::days([14, 21, 28][rng.gen_range(0..3)]);
        let drifted = cfg.drift && day >= drift_start_day;

        let mut logit = 0.0;
        let mut pick = |table: &'static [(&'static str, f64)]| {
            let (v, w) = table[rng.gen_range(0..table.len())];
            logit += w;
            v
        };
        let age = pick(&AGE_RANGES);
        let send = pick(&SEND_METHODS);
        let remote = pick(&REMOTENESS);
        let income = pick(&INCOME_GROUPS);

        let mut row = vec![
            Cell::Text(age.to_string()),
            Cell::Date(issued),
            Cell::Date(due),
            Cell::Text(messy(&mut rng, send)),
            Cell::Text(remote.to_string()),
            Cell::Text(income.to_string()),
        ];
        for (_, mean, std, w, shifts) in CONTINUOUS {
            let mut z: f64 = std_normal.sample(&mut rng);
            if drifted && shifts {
                z += cfg.drift_shift;
            }
            let v = ((mean + std * z) * 100.0).round() / 100.0;
            logit += w * (v - mean) / std;
            row.push(Cell::Real(v));
        }
        let month = due.month() as f64;
        logit += SEASONAL * (2.0 * std::f64::consts::PI * month / 12.0).sin();
        rows.push(row);
        logits.push(logit);
    }

    let intercept = calibrate_intercept(&logits, cfg.positive_rate, cfg.temperature);
    for (row, l) in rows.iter_mut().zip(&logits) {
        let z = l + intercept;
        let positive = if cfg.temperature == 0.0 {
            z > 0.0
        } else {
            rng.gen::<f64>() < sigmoid(z / cfg.temperature)
        };
        row.push(Cell::Text(if positive { "yes" } else { "no" }.into()));
    }

    let mut schema = FeatureSchema::new(synthetic_schema(), "yes")?;
    schema.generator = Some(GeneratorInfo {
        seed: seed_value,
        n_rows: n,
        positive_rate: cfg.positive_rate,
        temperature: cfg.temperature,
        intercept,
        coefficients: ground_truth_coefficients(),
        planted_feature: PLANTED_FEATURE.to_string(),
    });
    if cfg.drift {
        schema.drift = Some(DriftInfo {
            order_column: ISSUE_DATE.to_string(),
            start_date: start_date() + Duration::days(drift_start_day),
            shifted_columns: CONTINUOUS
                .iter()
                .filter(|c| c.4)
                .map(|c| c.0.to_string())
                .collect(),
            shift_stds: cfg.drift_shift,
        });
    }
    Dataset::new(schema, rows)
}

/// Intercept making the expected positive rate equal `rate`.
fn calibrate_intercept(logits: &[f64], rate: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        let mut sorted = logits.to_vec();
        sorted.sort_by(f64::total_cmp);
        // threshold between the negatives and the top `rate` share
        let n_pos = (rate * sorted.len() as f64).round() as usize;
        let n_neg = sorted.len() - n_pos.min(sorted.len());
        let cut = match n_neg {
            0 => sorted[0] - 1.0,
            k if k == sorted.len() => sorted[k - 1] + 1.0,
            k => 0.5 * (sorted[k - 1] + sorted[k]),
        };
        return -cut;
    }
    let mean_rate = |b: f64| {
        logits.iter().map(|l| sigmoid((l + b) / temperature)).sum::<f64>() / logits.len() as f64
    };
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_rate(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Whether a row of a drift-enabled dataset lies in the shifted range.
pub fn is_drifted(ds: &Dataset, row: usize) -> bool {
    let Some(drift) = &ds.schema.drift else {
        return false;
    };
    let Some(idx) = ds.schema.index_of(&drift.order_column) else {
        return false;
    };
    ds.rows[row][idx]
        .as_date()
        .is_some_and(|d| d >= drift.start_date)
}
