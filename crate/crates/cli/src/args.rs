use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use propensity_core::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "propensity", version, about = "Propensity-to-pay models: generate, train, evaluate, predict, report")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic billing dataset (data.csv + schema.json).
    Generate(GenerateArgs),
    /// Fit one or more models and write model.<name>.json.
    Train(RunArgs),
    /// Score trained models on the held-out block (or all rows) and write
    /// metrics.json, metrics_table.csv and classwise.csv.
    Evaluate(EvaluateArgs),
    /// Write per-row predictions to predictions.csv (and BNN histograms to
    /// histograms.csv).
    Predict(PredictArgs),
    /// Write tree-model feature importance to importance.csv.
    Report(RunArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5837)]
    pub positive_rate: f64,
    /// Shift the latest dates' feature distributions.
    #[arg(long)]
    pub drift: bool,
    /// Label noise temperature (0 = deterministic labels).
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Flags shared by train, evaluate, predict and report. Any flag given on
/// the command line overrides the same key in `--config`.
#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Defaults to schema.json beside the data file.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Model name, or a comma-separated list (bnn, dnn, rf, xgb|gbm, dt,
    /// lr, mnb, all).
    #[arg(long, value_parser = parse_models)]
    pub model: Option<ModelList>,
    /// Model file, or a directory holding model.<name>.json files;
    /// defaults to <out>/model.<name>.json.
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// BNN decision threshold on the median probability.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// BNN posterior samples per prediction.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub oversample: Option<bool>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Any model hyperparameter as key=value (value parsed as JSON when
    /// possible).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

/// Hyperparameters under their own names; each applies only to models
/// that have it.
#[derive(Debug, Args, Default, Clone)]
pub struct HyperArgs {
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub n_stages: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub criterion: Option<String>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Hidden units: one number for the BNN, comma list for the DNN.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Logistic regression inverse regularization strength.
    #[arg(long = "c")]
    pub c: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kl_weight: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Score every row of --data instead of the held-out block.
    #[arg(long)]
    pub all_rows: bool,
    /// Build reports from a CSV of confusion counts (model,tp,tn,fp,fn)
    /// instead of running models.
    #[arg(long, conflicts_with = "all_rows")]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also write per-row log-probability histograms (BNN only).
    #[arg(long)]
    pub histograms: bool,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelList(pub Vec<ModelKind>);

pub fn parse_models(s: &str) -> Result<ModelList, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ModelList(ModelKind::ALL.to_vec()));
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let k: ModelKind = part.parse().map_err(|e: propensity_core::Error| e.to_string())?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(ModelList(out))
}
