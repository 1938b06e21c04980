//! Dataset schema, loading and validation, model serialization, and the
//! synthetic planted-saliency generator.

pub mod io;
pub mod synth;

pub use io::{
    load_dataset, load_model, save_dataset, save_model, DATASET_FORMAT_VERSION,
    MODEL_FORMAT_VERSION,
};
pub use synth::{generate_synthetic, SynthConfig};

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::Graph;

/// One sample: a node-feature matrix (`d_x x d_y`) plus a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject<T: Scalar> {
    pub id: String,
    pub label: usize,
    pub features: Array2<T>,
}

/// A full dataset: the shared graph, the subjects, class names, and (for
/// synthetic data) the ground-truth salient node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    pub graph: Graph<T>,
    pub subjects: Vec<Subject<T>>,
    pub class_names: Vec<String>,
    pub ground_truth_salient: Option<Vec<usize>>,
}

impl<T: Scalar> Dataset<T> {
    /// Number of graph nodes (`d_x`).
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Node feature width (`d_y`).
    pub fn feature_dim(&self) -> usize {
        self.subjects
            .first()
            .map(|s| s.features.ncols())
            .unwrap_or(0)
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.subjects.iter().map(|s| s.label).collect()
    }

    /// Stack the features of the selected subjects into a `batch x d_x x d_y`
    /// tensor (with the matching labels).
    pub fn batch(&self, indices: &[usize]) -> Result<(Array3<T>, Vec<usize>)> {
        let d_x = self.num_nodes();
        let d_y = self.feature_dim();
        let mut features = Array3::zeros((indices.len(), d_x, d_y));
        let mut labels = Vec::with_capacity(indices.len());
        for (slot, &idx) in indices.iter().enumerate() {
            let subject = self.subjects.get(idx).ok_or_else(|| {
                Error::InvalidInput(format!("subject index {idx} out of range"))
            })?;
            features
                .index_axis_mut(ndarray::Axis(0), slot)
                .assign(&subject.features);
            labels.push(subject.label);
        }
        Ok((features, labels))
    }

    /// Check every dataset invariant: consistent dimensions, finite values,
    /// valid labels, at least two subjects per class, unique subject ids,
    /// and in-range ground-truth indices.
    pub fn validate(&self) -> Result<()> {
        if self.class_names.len() < 2 {
            return Err(Error::InvalidInput(
                "dataset needs at least two classes".into(),
            ));
        }
        if self.subjects.is_empty() {
            return Err(Error::InvalidInput("dataset has no subjects".into()));
        }
        let d_x = self.num_nodes();
        let d_y = self.feature_dim();
        let mut per_class = vec![0usize; self.class_names.len()];
        let mut seen_ids = std::collections::BTreeSet::new();
        for subject in &self.subjects {
            if !seen_ids.insert(subject.id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate subject id {}",
                    subject.id
                )));
            }
            if subject.label >= self.class_names.len() {
                return Err(Error::UnknownLabel {
                    subject: subject.id.clone(),
                    label: subject.label,
                });
            }
            per_class[subject.label] += 1;
            if subject.features.dim() != (d_x, d_y) {
                return Err(Error::DimensionMismatch {
                    context: format!("features of subject {}", subject.id),
                    expected: format!("{d_x}x{d_y}"),
                    actual: format!(
                        "{}x{}",
                        subject.features.nrows(),
                        subject.features.ncols()
                    ),
                });
            }
            for ((i, j), &x) in subject.features.indexed_iter() {
                if !x.is_finite() {
                    return Err(Error::NonFinite {
                        location: format!("features of subject {} at [{i},{j}]", subject.id),
                    });
                }
            }
        }
        if let Some((class, _)) = per_class.iter().enumerate().find(|(_, &n)| n < 2) {
            return Err(Error::InvalidInput(format!(
                "class {} ({}) has fewer than 2 subjects",
                class, self.class_names[class]
            )));
        }
        if let Some(truth) = &self.ground_truth_salient {
            if let Some(&bad) = truth.iter().find(|&&v| v >= d_x) {
                return Err(Error::InvalidInput(format!(
                    "ground-truth salient node {bad} out of range ({d_x} nodes)"
                )));
            }
        }
        Ok(())
    }
}
