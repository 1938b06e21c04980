//! `graphcam` command-line interface.
//!
//! Subcommands: `synth` (generate a synthetic dataset), `train` (repeated
//! stratified cross-validation), `attribute` (population-level saliency),
//! `report` (human-readable summary). Exit status: 0 on success, 1 for
//! validation errors, 2 for runtime/numerical errors.

mod commands;
mod manifest;
mod svg;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "graphcam", version, about = "Graph classifier training and node saliency attribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic planted-saliency dataset
    Synth(commands::synth::SynthArgs),
    /// Train graph classifiers with repeated stratified cross-validation
    Train(commands::train::TrainArgs),
    /// Compute population-level saliency maps from trained models
    Attribute(commands::attribute::AttributeArgs),
    /// Print accuracy tables and the ranked node list
    Report(commands::report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(&args),
        Command::Train(args) => commands::train::run(&args),
        Command::Attribute(args) => commands::attribute::run(&args),
        Command::Report(args) => commands::report::run(&args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
