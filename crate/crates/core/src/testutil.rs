use crate::data::synthetic::{generate_synthetic, SyntheticConfig};
use crate::data::{clean, CleanConfig, Dataset, EncodedDataset, Encoder};

/// Lowercasing-only clean: keeps every row.
pub fn normalize_only(ds: &Dataset) -> Dataset {
    clean(
        ds,
        &CleanConfig {
            z_max: f64::INFINITY,
            min_freq: 0,
            imbalance: None,
        },
    )
}

/// Synthetic rows encoded with an encoder fitted on all of them.
pub fn encoded(cfg: &SyntheticConfig, seed: u64) -> EncodedDataset {
    let ds = normalize_only(&generate_synthetic(cfg, seed).unwrap());
    Encoder::fit(&ds).unwrap().transform(&ds).unwrap()
}

/// Separable synthetic data split into interleaved train/valid halves.
pub fn separable(n: usize, seed: u64) -> (EncodedDataset, EncodedDataset) {
    let cfg = SyntheticConfig {
        temperature: 0.0,
        ..SyntheticConfig::new(n, 0.5837, false)
    };
    let all = encoded(&cfg, seed);
    let train: Vec<usize> = (0..n).filter(|i| i % 5 != 0).collect();
    let valid: Vec<usize> = (0..n).filter(|i| i % 5 == 0).collect();
    (all.select(&train), all.select(&valid))
}
