use std::path::PathBuf;

use clap::Args;
use graphcam::data::{generate_synthetic, save_dataset, SynthConfig};
use graphcam::error::{Error, Result};

#[derive(Args)]
pub struct SynthArgs {
    /// Number of subjects
    #[arg(long, default_value_t = 500)]
    pub subjects: usize,
    /// Number of graph nodes
    #[arg(long, default_value_t = 20)]
    pub nodes: usize,
    /// Number of planted salient nodes
    #[arg(long, default_value_t = 3)]
    pub salient: usize,
    /// Between-class mean difference on salient edges
    #[arg(long, default_value_t = 0.8)]
    pub effect: f64,
    /// Per-entry noise standard deviation
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output dataset directory
    #[arg(long)]
    pub out: PathBuf,
    /// Write into an existing non-empty directory
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    if !args.force && args.out.exists() {
        let non_empty = std::fs::read_dir(&args.out)
            .map(|mut entries| entries.next().is_some())
            .unwrap_or(false);
        if non_empty {
            return Err(Error::InvalidInput(format!(
                "output directory {} is not empty (pass --force to overwrite)",
                args.out.display()
            )));
        }
    }

    let config = SynthConfig {
        n_subjects: args.subjects,
        d_nodes: args.nodes,
        n_salient: args.salient,
        effect_size: args.effect,
        noise_sd: args.noise,
        seed: args.seed,
    };
    let dataset = generate_synthetic::<f64>(&config)?;
    save_dataset(&dataset, &args.out)?;

    println!(
        "wrote synthetic dataset to {}: {} subjects, {} nodes, salient nodes {:?}",
        args.out.display(),
        dataset.subjects.len(),
        dataset.num_nodes(),
        dataset.ground_truth_salient.as_deref().unwrap_or(&[])
    );
    Ok(())
}
