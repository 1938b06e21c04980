use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use graphcam::data::{io::model_path, load_dataset, save_model};
use graphcam::error::Result;
use graphcam::nn::ModelConfig;
use graphcam::spectral::ScaledLaplacian;
use graphcam::train::{run_cross_validation, FoldSplit, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::manifest::{dataset_checksum, RunManifest, MANIFEST_FORMAT_VERSION};

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    /// Results directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Cross-validation repetitions
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 200)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// Number of Chebyshev coefficients per conv layer
    #[arg(long = "k-coeffs", default_value_t = 9)]
    pub k_coeffs: usize,
    /// Conv layer widths, comma separated
    #[arg(long, value_delimiter = ',', default_value = "32,32,64,64,128")]
    pub channels: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long = "weight-decay", default_value_t = 5e-4)]
    pub weight_decay: f64,
    /// Evaluate on the validation fold every N steps
    #[arg(long = "eval-every", default_value_t = 10)]
    pub eval_every: usize,
    /// Train folds on a worker pool (outputs are unaffected)
    #[arg(long)]
    pub parallel: bool,
}

/// Fold assignments written alongside the models, consumed by `attribute`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FoldsFile {
    pub runs: Vec<RunFolds>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunFolds {
    pub run: usize,
    pub folds: Vec<FoldSplit>,
}

/// Dropout is applied after layers 2, 4 and 5 when they exist (the default
/// five-layer layout), clipped to the actual depth for other layouts.
fn default_dropout_layers(num_layers: usize) -> BTreeSet<usize> {
    [1usize, 3, 4]
        .into_iter()
        .filter(|&l| l < num_layers)
        .collect()
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let dataset = load_dataset::<f64>(&args.data)?;
    let model_config = ModelConfig {
        channels: args.channels.clone(),
        num_coeffs: args.k_coeffs,
        dropout_layers: default_dropout_layers(args.channels.len()),
        dropout_rate: args.dropout,
        num_classes: dataset.num_classes(),
        input_channels: dataset.feature_dim(),
    };
    let train_config = TrainConfig {
        learning_rate: args.lr,
        weight_decay: args.weight_decay,
        batch_size: args.batch,
        total_steps: args.steps,
        eval_every: args.eval_every,
        seed: args.seed,
        ..TrainConfig::default()
    };
    model_config.validate()?;
    train_config.validate()?;

    let scaled = ScaledLaplacian::from_graph(&dataset.graph)?;
    if !scaled.converged() {
        eprintln!("note: lambda_max estimation did not converge; using the upper bound 2.0");
    }
    let outcome = run_cross_validation(
        &dataset,
        &scaled,
        &model_config,
        &train_config,
        args.runs,
        args.folds,
        args.parallel,
    )?;

    let metrics = serde_json::to_string_pretty(&outcome.report)
        .expect("report serialization cannot fail");
    super::write_text(&args.out.join("metrics.json"), &(metrics + "\n"))?;

    let folds_file = FoldsFile {
        runs: outcome
            .runs
            .iter()
            .map(|run| RunFolds {
                run: run.run,
                folds: run.folds.iter().map(|f| f.split.clone()).collect(),
            })
            .collect(),
    };
    let folds_text =
        serde_json::to_string_pretty(&folds_file).expect("folds serialization cannot fail");
    super::write_text(&args.out.join("folds.json"), &(folds_text + "\n"))?;

    for run in &outcome.runs {
        for (fold, artifacts) in run.folds.iter().enumerate() {
            save_model(&artifacts.model, &model_path(&args.out, run.run, fold))?;
        }
    }

    let manifest = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_utc: chrono::Utc::now().to_rfc3339(),
        base_seed: args.seed,
        dataset_path: args.data.display().to_string(),
        dataset_sha256: dataset_checksum(&args.data)?,
        n_runs: args.runs,
        n_folds: args.folds,
        parallel: args.parallel,
        model_config,
        train_config,
    };
    let manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    super::write_text(&args.out.join("run_manifest.json"), &(manifest_text + "\n"))?;

    println!(
        "trained {} runs x {} folds; grand mean accuracy {:.4}",
        args.runs, args.folds, outcome.report.grand_mean
    );
    for run in &outcome.report.runs {
        println!(
            "run {:>2}: mean {:.4}, std {:.4}",
            run.run + 1,
            run.mean,
            run.std
        );
    }
    println!("results written to {}", args.out.display());
    Ok(())
}
