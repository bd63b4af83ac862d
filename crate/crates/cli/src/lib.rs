//! Command-line front end: synthetic data, fitting, prediction, evaluation
//! and comparison tables.

pub mod commands;
pub mod config;

use std::fmt;

use clap::{ArgAction, Parser, Subcommand};

/// A problem with the invocation rather than with the run; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "cogap", version, about = "Gap-acceptance prediction with a cognitive interaction model")]
pub struct Cli {
    /// Worker threads for simulation (all cores when absent).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(commands::SynthArgs),
    /// Fit the cognitive model on the training part of every split.
    Fit(commands::FitArgs),
    /// Predict acceptance for samples of a dataset.
    Predict(commands::PredictArgs),
    /// Evaluate a model on every split.
    Evaluate(commands::EvaluateArgs),
    /// Compare two sets of evaluation reports.
    Compare(commands::CompareArgs),
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global()?;
    }
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Compare(a) => commands::compare_cmd(a),
    }
}
