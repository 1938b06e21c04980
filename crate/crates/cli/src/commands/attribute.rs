use std::path::{Path, PathBuf};

use clap::Args;
use graphcam::data::{io::model_path, load_dataset, load_model, Dataset};
use graphcam::error::{Error, Result};
use graphcam::saliency::{population_saliency, run_subject_cams, PopulationSaliency};
use graphcam::spectral::ScaledLaplacian;
use graphcam::train::{FoldArtifacts, RunArtifacts};

use super::train::FoldsFile;

#[derive(Args)]
pub struct AttributeArgs {
    /// Results directory produced by `train`
    #[arg(long)]
    pub results: PathBuf,
    /// The dataset the models were trained on
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory (defaults to the results directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Nodes counted per subject
    #[arg(long = "top-k", default_value_t = 3)]
    pub top_k: usize,
    /// Also dump every subject's activation maps
    #[arg(long = "per-subject")]
    pub per_subject: bool,
}

fn load_artifacts(results: &Path) -> Result<Vec<RunArtifacts<f64>>> {
    let folds_path = results.join("folds.json");
    let folds_text = super::read_text(&folds_path, "fold assignments")?;
    let folds_file: FoldsFile = serde_json::from_str(&folds_text).map_err(|e| Error::Parse {
        path: folds_path,
        message: e.to_string(),
    })?;

    let mut runs = Vec::with_capacity(folds_file.runs.len());
    for run_folds in folds_file.runs {
        let mut folds = Vec::with_capacity(run_folds.folds.len());
        for (fold, split) in run_folds.folds.into_iter().enumerate() {
            let path = model_path(results, run_folds.run, fold);
            let model = load_model::<f64>(&path).map_err(|e| match e {
                Error::MissingFile { path, .. } => Error::InvalidState(format!(
                    "missing model for run {}, fold {fold}: {}",
                    run_folds.run,
                    path.display()
                )),
                other => other,
            })?;
            folds.push(FoldArtifacts { split, model });
        }
        runs.push(RunArtifacts {
            run: run_folds.run,
            folds,
        });
    }
    Ok(runs)
}

fn saliency_csv(saliency: &PopulationSaliency<f64>) -> String {
    let classes = saliency.mean_activation.nrows();
    let mut out = String::from("node_index");
    for class in 0..classes {
        out.push_str(&format!(",mean_activation_class{class}_scaled"));
    }
    out.push_str(",topk_count\n");
    for node in 0..saliency.topk_counts.len() {
        out.push_str(&node.to_string());
        for class in 0..classes {
            out.push(',');
            out.push_str(&saliency.mean_activation[[class, node]].to_string());
        }
        out.push(',');
        out.push_str(&saliency.topk_counts[node].to_string());
        out.push('\n');
    }
    out
}

fn per_subject_csv(
    runs: &[RunArtifacts<f64>],
    dataset: &Dataset<f64>,
    scaled: &ScaledLaplacian<f64>,
) -> Result<String> {
    let classes = dataset.num_classes();
    let nodes = dataset.num_nodes();
    let mut out = String::from("run,subject_id,label,predicted,class_index");
    for node in 0..nodes {
        out.push_str(&format!(",node_{node}"));
    }
    out.push('\n');
    for run in runs {
        for record in run_subject_cams(run, dataset, scaled)? {
            for class in 0..classes {
                out.push_str(&format!(
                    "{},{},{},{},{class}",
                    record.run, record.subject_id, record.label, record.predicted
                ));
                for node in 0..nodes {
                    out.push(',');
                    out.push_str(&record.scores[[node, class]].to_string());
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn run(args: &AttributeArgs) -> Result<()> {
    let dataset = load_dataset::<f64>(&args.data)?;
    let scaled = ScaledLaplacian::from_graph(&dataset.graph)?;
    let runs = load_artifacts(&args.results)?;
    let saliency = population_saliency(&runs, &dataset, &scaled, args.top_k)?;

    let out_dir = args.out.clone().unwrap_or_else(|| args.results.clone());
    super::write_text(&out_dir.join("saliency.csv"), &saliency_csv(&saliency))?;
    super::write_text(
        &out_dir.join("saliency.svg"),
        &crate::svg::render(&saliency, &dataset.class_names),
    )?;
    if args.per_subject {
        super::write_text(
            &out_dir.join("per_subject_cams.csv"),
            &per_subject_csv(&runs, &dataset, &scaled)?,
        )?;
    }

    let mut ranked: Vec<usize> = (0..saliency.topk_counts.len()).collect();
    ranked.sort_by(|&a, &b| {
        saliency.topk_counts[b]
            .cmp(&saliency.topk_counts[a])
            .then(a.cmp(&b))
    });
    let preview: Vec<String> = ranked
        .iter()
        .take(args.top_k)
        .map(|&n| format!("{n} ({})", saliency.topk_counts[n]))
        .collect();
    println!(
        "attributed {} subjects x {} runs (k = {}); top nodes: {}",
        saliency.n_subjects,
        saliency.n_runs,
        saliency.k,
        preview.join(", ")
    );
    println!("saliency written to {}", out_dir.display());
    Ok(())
}
