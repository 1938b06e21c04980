//! The training loop, evaluation, and the repeated cross-validation harness.

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, TrainConfig};
use super::folds::{make_stratified_folds, BalancedBatcher, FoldSplit};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{
    add_l2_gradients, init_model, l2_penalty, model_backward, model_forward, softmax_cross_entropy,
    Mode, Model, ModelConfig,
};
use crate::scalar::{cast, Scalar};
use crate::seeding::{derive_seed, purpose};
use crate::spectral::ScaledLaplacian;

/// Evaluation batches are processed in chunks of this many subjects.
const EVAL_CHUNK: usize = 256;

/// One learning-rate decay event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrEvent {
    pub step: usize,
    pub factor: f64,
}

/// Decays the learning rate whenever validation accuracy strictly decreases
/// in two consecutive evaluation rounds. The comparison history resets after
/// a decay so one bad stretch cannot cascade into repeated halvings.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    factor: f64,
    window: Vec<f64>,
    events: Vec<LrEvent>,
}

impl PlateauScheduler {
    pub fn new(factor: f64) -> Self {
        Self {
            factor,
            window: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Record one validation accuracy; returns true when a decay fired.
    pub fn observe(&mut self, accuracy: f64, step: usize, learning_rate: &mut f64) -> bool {
        self.window.push(accuracy);
        let n = self.window.len();
        if n >= 3 && self.window[n - 1] < self.window[n - 2] && self.window[n - 2] < self.window[n - 3]
        {
            *learning_rate *= self.factor;
            self.events.push(LrEvent {
                step,
                factor: self.factor,
            });
            self.window = vec![accuracy];
            return true;
        }
        if n > 3 {
            self.window.remove(0);
        }
        false
    }

    pub fn events(&self) -> &[LrEvent] {
        &self.events
    }
}

/// Index of the largest value, ties broken toward the smaller index.
pub fn argmax<T: Scalar>(values: ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (idx, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = idx;
        }
    }
    best
}

/// Evaluation result over a subject set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
}

/// Eval-mode forward over the selected subjects; prediction is the argmax
/// of the logits.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    scaled: &ScaledLaplacian<T>,
    dataset: &Dataset<T>,
    indices: &[usize],
) -> Result<EvalOutcome> {
    if indices.is_empty() {
        return Err(Error::InvalidInput("evaluate needs at least one subject".into()));
    }
    let classes = model.config().num_classes;
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut predictions = Vec::with_capacity(indices.len());
    let mut correct = 0usize;
    for chunk in indices.chunks(EVAL_CHUNK) {
        let (features, labels) = dataset.batch(chunk)?;
        let (logits, _) = model_forward(model, scaled, &features, Mode::Eval)?;
        for (row, &label) in logits.rows().into_iter().zip(labels.iter()) {
            let predicted = argmax(row);
            confusion[label][predicted] += 1;
            if predicted == label {
                correct += 1;
            }
            predictions.push(predicted);
        }
    }
    Ok(EvalOutcome {
        accuracy: correct as f64 / indices.len() as f64,
        confusion,
        predictions,
    })
}

/// Per-fold training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_accuracy: f64,
    /// Validation accuracy at each evaluation round, in step order.
    pub val_accuracies: Vec<f64>,
    pub lr_events: Vec<LrEvent>,
    pub final_lr: f64,
}

/// Per-run record: fold accuracies plus their mean and sample standard
/// deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub seed: u64,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub folds: Vec<FoldReport>,
}

/// Full cross-validation report; `grand_mean` averages every fold accuracy
/// of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub runs: Vec<RunReport>,
    pub grand_mean: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// What one call to [`train_model`] produces.
pub struct TrainOutcome<T: Scalar> {
    pub model: Model<T>,
    pub test_accuracy: f64,
    pub val_accuracies: Vec<f64>,
    pub lr_events: Vec<LrEvent>,
    pub final_lr: f64,
}

/// Train one model on one split.
///
/// Runs `total_steps` Adam steps on balanced mini-batches; every
/// `eval_every` steps the validation accuracy is recorded and fed to the
/// plateau scheduler. The final model is the one after the last step (no
/// best-checkpoint selection); test accuracy is computed once at the end.
pub fn train_model<T: Scalar>(
    dataset: &Dataset<T>,
    scaled: &ScaledLaplacian<T>,
    split: &FoldSplit,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    model_config.validate()?;
    train_config.validate()?;
    if split.train_idx.is_empty() || split.val_idx.is_empty() || split.test_idx.is_empty() {
        return Err(Error::InvalidInput(
            "split must have non-empty train/val/test partitions".into(),
        ));
    }

    let seed = train_config.seed;
    let mut model: Model<T> =
        init_model(model_config.clone(), derive_seed(seed, &[purpose::MODEL_INIT]))?;
    let mut batcher = BalancedBatcher::new(
        &split.train_idx,
        &dataset.labels(),
        train_config.batch_size,
        derive_seed(seed, &[purpose::BATCHING]),
    )?;
    let mut state = AdamState::new(&model);
    let mut scheduler = PlateauScheduler::new(train_config.lr_decay_factor);
    let mut learning_rate = train_config.learning_rate;
    let decay = cast::<T>(train_config.weight_decay);
    let mut val_accuracies = Vec::with_capacity(train_config.total_steps / train_config.eval_every);

    for step in 1..=train_config.total_steps {
        let batch_idx = batcher.next_batch();
        let (features, labels) = dataset.batch(&batch_idx)?;
        let dropout_seed = derive_seed(seed, &[purpose::DROPOUT, step as u64]);
        let (logits, trace) =
            model_forward(&model, scaled, &features, Mode::Train { dropout_seed })?;
        let (ce_loss, grad_logits) = softmax_cross_entropy(&logits, &labels).map_err(|e| {
            Error::Training {
                step,
                message: e.to_string(),
            }
        })?;
        let loss = ce_loss + l2_penalty(&model, decay);
        if !loss.is_finite() {
            return Err(Error::Training {
                step,
                message: "non-finite loss".into(),
            });
        }
        let mut grads = model_backward(&model, scaled, &trace, &grad_logits)?;
        add_l2_gradients(&model, decay, &mut grads);
        adam_step(&mut model, &grads, &mut state, cast(learning_rate), train_config).map_err(
            |e| Error::Training {
                step,
                message: e.to_string(),
            },
        )?;

        if step % train_config.eval_every == 0 {
            let val = evaluate(&model, scaled, dataset, &split.val_idx)?;
            val_accuracies.push(val.accuracy);
            scheduler.observe(val.accuracy, step, &mut learning_rate);
        }
    }

    let test = evaluate(&model, scaled, dataset, &split.test_idx)?;
    Ok(TrainOutcome {
        model,
        test_accuracy: test.accuracy,
        val_accuracies,
        lr_events: scheduler.events().to_vec(),
        final_lr: learning_rate,
    })
}

/// Trained model plus its split, for downstream attribution.
#[derive(Debug, Clone)]
pub struct FoldArtifacts<T: Scalar> {
    pub split: FoldSplit,
    pub model: Model<T>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts<T: Scalar> {
    pub run: usize,
    pub folds: Vec<FoldArtifacts<T>>,
}

/// Report plus per-fold artifacts from [`run_cross_validation`].
pub struct CvOutcome<T: Scalar> {
    pub report: CvReport,
    pub runs: Vec<RunArtifacts<T>>,
}

fn annotate(error: Error, run: usize, fold: usize) -> Error {
    let location = format!("run {run}, fold {fold}");
    match error {
        Error::Training { step, message } => Error::Training {
            step,
            message: format!("{location}: {message}"),
        },
        Error::InvalidInput(m) => Error::InvalidInput(format!("{location}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{location}: {m}")),
        Error::InvalidState(m) => Error::InvalidState(format!("{location}: {m}")),
        other => other,
    }
}

/// Stratified repeated cross-validation.
///
/// For each run `r`, folds are rebuilt with a run-specific seed and one
/// model is trained per fold. Fold tasks are independent and self-seeded,
/// so `parallel` fans them out without changing any result; outputs are
/// assembled in (run, fold) order either way.
pub fn run_cross_validation<T: Scalar>(
    dataset: &Dataset<T>,
    scaled: &ScaledLaplacian<T>,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    n_runs: usize,
    n_folds: usize,
    parallel: bool,
) -> Result<CvOutcome<T>> {
    if n_runs == 0 {
        return Err(Error::InvalidInput("need at least one run".into()));
    }
    dataset.validate()?;
    let labels = dataset.labels();
    let base_seed = train_config.seed;

    let mut tasks = Vec::with_capacity(n_runs * n_folds);
    for run in 0..n_runs {
        let fold_seed = derive_seed(base_seed, &[purpose::FOLDS, run as u64]);
        let splits = make_stratified_folds(&labels, n_folds, fold_seed)?;
        for (fold, split) in splits.into_iter().enumerate() {
            let mut fold_config = train_config.clone();
            fold_config.seed = derive_seed(base_seed, &[purpose::TRAINING, run as u64, fold as u64]);
            tasks.push((run, fold, split, fold_config));
        }
    }

    let train_task = |(run, fold, split, config): &(usize, usize, FoldSplit, TrainConfig)| {
        train_model(dataset, scaled, split, model_config, config)
            .map(|outcome| (*run, *fold, split.clone(), outcome))
            .map_err(|e| annotate(e, *run, *fold))
    };
    let outcomes: Vec<(usize, usize, FoldSplit, TrainOutcome<T>)> = if parallel {
        tasks.par_iter().map(train_task).collect::<Result<_>>()?
    } else {
        tasks.iter().map(train_task).collect::<Result<_>>()?
    };

    let mut runs = Vec::with_capacity(n_runs);
    let mut run_reports = Vec::with_capacity(n_runs);
    let mut all_accuracies = Vec::with_capacity(n_runs * n_folds);
    for run in 0..n_runs {
        let mut folds = Vec::with_capacity(n_folds);
        let mut fold_reports = Vec::with_capacity(n_folds);
        for (_, fold, split, outcome) in outcomes.iter().filter(|(r, ..)| *r == run) {
            fold_reports.push(FoldReport {
                fold: *fold,
                test_accuracy: outcome.test_accuracy,
                val_accuracies: outcome.val_accuracies.clone(),
                lr_events: outcome.lr_events.clone(),
                final_lr: outcome.final_lr,
            });
            folds.push(FoldArtifacts {
                split: split.clone(),
                model: outcome.model.clone(),
            });
        }
        let fold_accuracies: Vec<f64> = fold_reports.iter().map(|f| f.test_accuracy).collect();
        all_accuracies.extend_from_slice(&fold_accuracies);
        run_reports.push(RunReport {
            run,
            seed: derive_seed(base_seed, &[purpose::FOLDS, run as u64]),
            mean: mean(&fold_accuracies),
            std: sample_std(&fold_accuracies),
            fold_accuracies,
            folds: fold_reports,
        });
        runs.push(RunArtifacts { run, folds });
    }

    Ok(CvOutcome {
        report: CvReport {
            runs: run_reports,
            grand_mean: mean(&all_accuracies),
        },
        runs,
    })
}
