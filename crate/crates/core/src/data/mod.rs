//! Tabular ingestion, feature engineering, splitting and synthetic data.

mod clean;
mod dataset;
mod dates;
mod encode;
mod schema;
mod split;
pub mod synthetic;

pub use clean::{clean, CleanConfig};
pub(crate) use clean::normalize as normalize_cell;
pub use dataset::{load_csv, read_csv, save_csv, write_csv, Cell, Dataset, DATE_FORMAT};
pub use dates::{date_parts, expand_date, DATE_PARTS};
pub use encode::{
    encode, label_of, CategoryDictionary, ContinuousStats, EncodedDataset, Encoder, FeatureLayout,
    DEFAULT_BINS,
};
pub use schema::{Column, ColumnKind, DriftInfo, FeatureSchema, GeneratorInfo};
pub use split::{oversample, split_sizes, time_split, SplitSpec};
pub use synthetic::{generate_synthetic, SyntheticConfig};
