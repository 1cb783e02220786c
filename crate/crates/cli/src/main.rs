mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "spatial-rank", version, about = "Spatial-relation classification, ranking and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse grounding records, keep usable positives and write a stratified train/test split.
    Prep(commands::PrepArgs),
    /// Add the subject/object swap of every training instance.
    Augment(commands::AugmentArgs),
    /// Train the relation classifier and save a checkpoint.
    Train(commands::TrainArgs),
    /// Build smoothed co-occurrence priors from a training set.
    Priors(commands::PriorsArgs),
    /// Score all nine relations for one clause.
    Rank(commands::RankArgs),
    /// Top-1/top-3 evaluation of a checkpoint on a test set.
    Eval(commands::EvalArgs),
    /// Generate a synthetic dataset with analytically known relations.
    Synth(commands::SynthArgs),
    /// Compare backpropagation with central finite differences on random models.
    Gradcheck(commands::GradcheckArgs),
    /// Detector-coverage breakdown of correct and incorrect predictions.
    Coverage(commands::CoverageArgs),
    /// Accuracy of external binary predictions and its margin over chance.
    Binary(commands::BinaryArgs),
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Prep(a) => commands::prep(a),
        Command::Augment(a) => commands::augment(a),
        Command::Train(a) => commands::train(a),
        Command::Priors(a) => commands::priors(a),
        Command::Rank(a) => commands::rank(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Coverage(a) => commands::coverage(a),
        Command::Binary(a) => commands::binary(a),
    }
}

