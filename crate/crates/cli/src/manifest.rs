//! Run manifest: everything needed to reproduce a training run bit for bit
//! (in sequential mode), plus provenance metadata.

use std::fs;
use std::path::Path;

use graphcam::error::{Error, Result};
use graphcam::nn::ModelConfig;
use graphcam::train::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: String,
    pub tool_version: String,
    /// Wall-clock timestamp; informational only, not part of any
    /// reproducibility contract.
    pub created_utc: String,
    pub base_seed: u64,
    pub dataset_path: String,
    pub dataset_sha256: String,
    pub n_runs: usize,
    pub n_folds: usize,
    pub parallel: bool,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
}

/// SHA-256 over the dataset files in a fixed order: manifest, graph, then
/// each feature file as listed in the manifest.
pub fn dataset_checksum(dataset_dir: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let manifest_path = dataset_dir.join("manifest.json");
    let manifest_bytes = read(&manifest_path)?;
    hasher.update(&manifest_bytes);
    hasher.update(read(&dataset_dir.join("graph.csv"))?);

    #[derive(Deserialize)]
    struct Manifest {
        subjects: Vec<SubjectEntry>,
    }
    #[derive(Deserialize)]
    struct SubjectEntry {
        features_file: String,
    }
    let manifest: Manifest =
        serde_json::from_slice(&manifest_bytes).map_err(|e| Error::Parse {
            path: manifest_path,
            message: e.to_string(),
        })?;
    for subject in &manifest.subjects {
        hasher.update(read(&dataset_dir.join(&subject.features_file))?);
    }

    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile {
            path: path.to_path_buf(),
            context: "dataset checksum".into(),
        }),
        Err(err) => Err(Error::Io {
            path: path.to_path_buf(),
            source: err,
        }),
    }
}
