//! On-disk formats.
//!
//! A dataset directory holds `manifest.json`, `graph.csv` (d x d floats,
//! row-major, comma-separated, no header) and one `features/<id>.csv` per
//! subject with the same numeric conventions. Models are single JSON files
//! carrying the config and named flat parameter arrays with explicit shapes.
//! All numbers round-trip at full precision.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dataset, Subject};
use crate::error::{Error, Result};
use crate::nn::{Model, ModelConfig};
use crate::scalar::Scalar;
use crate::spectral::Graph;

pub const DATASET_FORMAT_VERSION: &str = "1";
pub const MODEL_FORMAT_VERSION: &str = "1";

/// Tolerance for symmetrizing a graph adjacency read from disk.
const GRAPH_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    format_version: String,
    class_names: Vec<String>,
    d_nodes: usize,
    feature_dim: usize,
    subjects: Vec<ManifestSubject>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ground_truth_salient: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestSubject {
    id: String,
    label: usize,
    features_file: String,
}

fn read_file(path: &Path, context: &str) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile {
            path: path.to_path_buf(),
            context: context.to_string(),
        }),
        Err(err) => Err(Error::Io {
            path: path.to_path_buf(),
            source: err,
        }),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(contents.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a CSV numeric matrix with an expected shape.
fn parse_matrix<T: Scalar>(
    path: &Path,
    context: &str,
    rows: usize,
    cols: usize,
) -> Result<Array2<T>> {
    let text = read_file(path, context)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != rows {
        return Err(Error::DimensionMismatch {
            context: format!("{context} ({})", path.display()),
            expected: format!("{rows} rows"),
            actual: format!("{} rows", lines.len()),
        });
    }
    let mut matrix = Array2::zeros((rows, cols));
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols {
            return Err(Error::DimensionMismatch {
                context: format!("{context} ({}), row {i}", path.display()),
                expected: format!("{cols} columns"),
                actual: format!("{} columns", cells.len()),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("row {i}, column {j}: {e}"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("{context} ({}), row {i}, column {j}", path.display()),
                });
            }
            matrix[[i, j]] = T::from_f64(value).expect("finite f64");
        }
    }
    Ok(matrix)
}

fn format_matrix<T: Scalar>(matrix: &Array2<T>) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.to_f64().expect("finite scalar").to_string())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Load and fully validate a dataset directory.
pub fn load_dataset<T: Scalar>(dir: &Path) -> Result<Dataset<T>> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = read_file(&manifest_path, "dataset manifest")?;
    let manifest: ManifestFile =
        serde_json::from_str(&manifest_text).map_err(|e| Error::Parse {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: manifest.format_version,
            expected: DATASET_FORMAT_VERSION.to_string(),
        });
    }

    let d = manifest.d_nodes;
    let graph_path = dir.join("graph.csv");
    let mut weights: Array2<T> = parse_matrix(&graph_path, "graph adjacency", d, d)?;
    for i in 0..d {
        for j in (i + 1)..d {
            let a = weights[[i, j]].to_f64().expect("finite");
            let b = weights[[j, i]].to_f64().expect("finite");
            if (a - b).abs() > GRAPH_SYMMETRY_TOL {
                return Err(Error::InvalidInput(format!(
                    "graph adjacency asymmetric beyond tolerance at [{i},{j}]: {a} vs {b}"
                )));
            }
            // Average the two triangles to restore exact symmetry.
            let mean = (weights[[i, j]] + weights[[j, i]]) / crate::scalar::cast(2.0);
            weights[[i, j]] = mean;
            weights[[j, i]] = mean;
        }
    }
    let graph = Graph::new(weights)?;

    let mut subjects = Vec::with_capacity(manifest.subjects.len());
    for entry in &manifest.subjects {
        let features_path = dir.join(&entry.features_file);
        let features = parse_matrix(
            &features_path,
            &format!("features of subject {}", entry.id),
            d,
            manifest.feature_dim,
        )?;
        if entry.label >= manifest.class_names.len() {
            return Err(Error::UnknownLabel {
                subject: entry.id.clone(),
                label: entry.label,
            });
        }
        subjects.push(Subject {
            id: entry.id.clone(),
            label: entry.label,
            features,
        });
    }

    let dataset = Dataset {
        graph,
        subjects,
        class_names: manifest.class_names,
        ground_truth_salient: manifest.ground_truth_salient,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Write a dataset directory in the layout [`load_dataset`] reads.
pub fn save_dataset<T: Scalar>(dataset: &Dataset<T>, dir: &Path) -> Result<()> {
    dataset.validate()?;
    let features_dir = dir.join("features");
    fs::create_dir_all(&features_dir).map_err(|source| Error::Io {
        path: features_dir.clone(),
        source,
    })?;

    let manifest = ManifestFile {
        format_version: DATASET_FORMAT_VERSION.to_string(),
        class_names: dataset.class_names.clone(),
        d_nodes: dataset.num_nodes(),
        feature_dim: dataset.feature_dim(),
        subjects: dataset
            .subjects
            .iter()
            .map(|s| ManifestSubject {
                id: s.id.clone(),
                label: s.label,
                features_file: format!("features/{}.csv", s.id),
            })
            .collect(),
        ground_truth_salient: dataset.ground_truth_salient.clone(),
    };
    let manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    write_file(&dir.join("manifest.json"), &(manifest_text + "\n"))?;
    write_file(&dir.join("graph.csv"), &format_matrix(dataset.graph.weights()))?;
    for subject in &dataset.subjects {
        write_file(
            &features_dir.join(format!("{}.csv", subject.id)),
            &format_matrix(&subject.features),
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: String,
    config: ModelConfig,
    parameters: Vec<ParamEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// Serialize a model to a JSON file (lossless for f64 parameters).
pub fn save_model<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    let parameters = model
        .param_refs()
        .iter()
        .map(|p| ParamEntry {
            name: p.name.clone(),
            shape: p.shape.clone(),
            values: p
                .values
                .iter()
                .map(|v| v.to_f64().expect("finite parameter"))
                .collect(),
        })
        .collect();
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION.to_string(),
        config: model.config().clone(),
        parameters,
    };
    let text = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    write_file(path, &(text + "\n"))
}

/// Load a model; fails without producing a partial model on truncated or
/// mismatching files.
pub fn load_model<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let text = read_file(path, "model file")?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: file.format_version,
            expected: MODEL_FORMAT_VERSION.to_string(),
        });
    }

    let mut model: Model<T> = Model::zeros(file.config.clone())?;
    let mut params = model.param_muts();
    if file.parameters.len() != params.len() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!(
                "expected {} parameter tensors, found {}",
                params.len(),
                file.parameters.len()
            ),
        });
    }
    for (slot, entry) in params.iter_mut().zip(file.parameters.iter()) {
        if slot.name != entry.name {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!("expected tensor {}, found {}", slot.name, entry.name),
            });
        }
        let expected_len: usize = entry.shape.iter().product();
        if entry.values.len() != expected_len || slot.values.len() != expected_len {
            return Err(Error::DimensionMismatch {
                context: format!("model tensor {} in {}", entry.name, path.display()),
                expected: format!("{} values (shape {:?})", slot.values.len(), entry.shape),
                actual: format!("{}", entry.values.len()),
            });
        }
        for (dst, &src) in slot.values.iter_mut().zip(entry.values.iter()) {
            if !src.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("model tensor {} in {}", entry.name, path.display()),
                });
            }
            *dst = T::from_f64(src).expect("finite f64");
        }
    }
    Ok(model)
}

/// Convenience: path of the model file for a (run, fold) pair inside a
/// results directory.
pub fn model_path(results_dir: &Path, run: usize, fold: usize) -> PathBuf {
    results_dir
        .join("models")
        .join(format!("run{run:02}_fold{fold:02}.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{generate_synthetic, SynthConfig};
    use crate::nn::{init_model, model_forward, Mode};
    use crate::spectral::ScaledLaplacian;
    use ndarray::Array3;
    use std::collections::BTreeSet;

    fn small_synth() -> Dataset<f64> {
        generate_synthetic(&SynthConfig {
            n_subjects: 6,
            d_nodes: 5,
            n_salient: 2,
            effect_size: 0.7,
            noise_sd: 0.3,
            seed: 21,
        })
        .unwrap()
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_synth();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded: Dataset<f64> = load_dataset(dir.path()).unwrap();
        assert_eq!(ds, loaded);
    }

    #[test]
    fn missing_feature_file_names_the_subject() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_synth();
        save_dataset(&ds, dir.path()).unwrap();
        fs::remove_file(dir.path().join("features/subj-0002.csv")).unwrap();
        match load_dataset::<f64>(dir.path()) {
            Err(Error::MissingFile { context, .. }) => {
                assert!(context.contains("subj-0002"), "context: {context}")
            }
            other => panic!("expected missing-file error, got {other:?}"),
        }
    }

    #[test]
    fn hand_written_fixture_parses_to_expected_matrices() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("features")).unwrap();
        fs::write(
            dir.path().join("manifest.json"),
            r#"{
  "format_version": "1",
  "class_names": ["ctrl", "case"],
  "d_nodes": 3,
  "feature_dim": 2,
  "subjects": [
    {"id": "a", "label": 0, "features_file": "features/a.csv"},
    {"id": "b", "label": 1, "features_file": "features/b.csv"},
    {"id": "c", "label": 0, "features_file": "features/c.csv"},
    {"id": "d", "label": 1, "features_file": "features/d.csv"}
  ]
}"#,
        )
        .unwrap();
        fs::write(dir.path().join("graph.csv"), "0,0.5,0\n0.5,0,1\n0,1,0\n").unwrap();
        for id in ["a", "b", "c", "d"] {
            fs::write(
                dir.path().join(format!("features/{id}.csv")),
                "1,2\n3,4\n5,6\n",
            )
            .unwrap();
        }
        let ds: Dataset<f64> = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.num_nodes(), 3);
        assert_eq!(ds.feature_dim(), 2);
        assert_eq!(ds.graph.weights()[[1, 2]], 1.0);
        assert_eq!(ds.subjects[0].features[[2, 1]], 6.0);
        assert_eq!(ds.class_names, vec!["ctrl".to_string(), "case".to_string()]);
    }

    #[test]
    fn asymmetric_graph_file_within_tolerance_is_symmetrized() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_synth();
        save_dataset(&ds, dir.path()).unwrap();
        // Perturb one edge by less than the tolerance.
        let path = dir.path().join("graph.csv");
        let w = ds.graph.weights();
        let mut rows = Vec::new();
        for i in 0..5 {
            let mut cells = Vec::new();
            for j in 0..5 {
                let mut v = w[[i, j]];
                if (i, j) == (0, 1) {
                    v += 5e-10;
                }
                cells.push(v.to_string());
            }
            rows.push(cells.join(","));
        }
        fs::write(&path, rows.join("\n") + "\n").unwrap();
        let loaded: Dataset<f64> = load_dataset(dir.path()).unwrap();
        let lw = loaded.graph.weights();
        assert_eq!(lw[[0, 1]], lw[[1, 0]]);
    }

    fn tiny_model() -> Model<f64> {
        init_model(
            crate::nn::ModelConfig {
                channels: vec![3, 2],
                num_coeffs: 2,
                dropout_layers: BTreeSet::from([0]),
                dropout_rate: 0.4,
                num_classes: 2,
                input_channels: 2,
            },
            13,
        )
        .unwrap()
    }

    #[test]
    fn model_round_trip_is_bitwise_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = tiny_model();
        save_model(&model, &path).unwrap();
        let loaded: Model<f64> = load_model(&path).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn truncated_model_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&tiny_model(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(
            load_model::<f64>(&path),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&tiny_model(), &path).unwrap();
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": \"1\"", "\"format_version\": \"99\"");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            load_model::<f64>(&path),
            Err(Error::FormatVersion { .. })
        ));
    }

    #[test]
    fn loaded_model_evaluates_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = tiny_model();
        save_model(&model, &path).unwrap();
        let loaded: Model<f64> = load_model(&path).unwrap();

        let graph = crate::spectral::Graph::new({
            let mut w = ndarray::Array2::<f64>::zeros((4, 4));
            for i in 0..3 {
                w[[i, i + 1]] = 0.5 + i as f64 * 0.1;
                w[[i + 1, i]] = w[[i, i + 1]];
            }
            w
        })
        .unwrap();
        let scaled = ScaledLaplacian::from_graph(&graph).unwrap();
        let batch = Array3::from_shape_fn((3, 4, 2), |(s, v, f)| {
            ((s + 1) * (v + 2)) as f64 * 0.05 - f as f64 * 0.3
        });
        let (a, _) = model_forward(&model, &scaled, &batch, Mode::Eval).unwrap();
        let (b, _) = model_forward(&loaded, &scaled, &batch, Mode::Eval).unwrap();
        assert_eq!(a, b);
    }
}
