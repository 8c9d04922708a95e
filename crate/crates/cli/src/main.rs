//! `propensity` command-line entry point.

mod args;
mod commands;
mod config;
mod outputs;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Predict(a) => commands::predict(a),
        Command::Report(a) => commands::report(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
