//! From-scratch baseline classifiers sharing one train / predict-posterior
//! contract.

pub mod adaboost;
pub mod ensemble;
pub mod io;
pub mod knn;
pub mod logistic;
pub mod naive_bayes;
pub mod registry;
pub mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaboost::{
    fit_adaboost, fit_stump, samme_alpha, samme_reweight, AdaBoost, AdaBoostConfig,
};
pub use ensemble::{fit_ensemble, Ensemble, EnsembleConfig};
pub use io::{ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use knn::{fit_knn, knn_predict, Knn};
pub use logistic::{fit_logistic_regression, LogisticConfig, LogisticRegression};
pub use naive_bayes::{fit_gaussian_nb, GaussianNb};
pub use registry::{fit_model, Hyperparameters, Model, ModelKind};
pub use tree::{
    entropy, et_split_score, fit_tree, information_gain, Node, SplitCandidate, SplitMode, Tree,
    TreeParams,
};

/// Tolerance on posterior normalization.
pub const POSTERIOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("invalid training data: {0}")]
    Data(String),
    #[error("class {0} has no training rows")]
    MissingClass(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("logistic regression diverged (non-finite loss) at learning rate {learning_rate}")]
    Divergence { learning_rate: f64 },
    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),
    #[error("malformed model: {0}")]
    Corrupt(String),
}

/// Per-class probabilities over a model's class set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Posterior(Vec<f64>);

impl Posterior {
    /// Validates nonnegativity and unit sum.
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::InvalidPosterior("no classes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(ModelError::InvalidPosterior(format!("entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > POSTERIOR_TOLERANCE {
            return Err(ModelError::InvalidPosterior(format!("sums to {total}")));
        }
        Ok(Self(probs))
    }

    /// Rescales nonnegative scores to unit sum; all-zero scores become uniform.
    pub fn normalize(mut scores: Vec<f64>) -> Self {
        let total: f64 = scores.iter().sum();
        if total > 0.0 && total.is_finite() {
            scores.iter_mut().for_each(|s| *s /= total);
            Self(scores)
        } else {
            Self::uniform(scores.len())
        }
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn uniform(class_count: usize) -> Self {
        Self(vec![1.0 / class_count as f64; class_count])
    }

    pub fn one_hot(class_count: usize, class: usize) -> Self {
        let mut p = vec![0.0; class_count];
        p[class] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable class, ties to the lowest class id.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

/// Index of the largest value, ties to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Shared prediction contract.
pub trait Classifier {
    fn class_count(&self) -> usize;

    fn feature_count(&self) -> usize;

    /// Posterior for a row whose length has already been checked.
    fn posterior_unchecked(&self, x: &[f64]) -> Posterior;

    fn predict_posterior(&self, x: &[f64]) -> Result<Posterior, ModelError> {
        if x.len() != self.feature_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.feature_count(),
                found: x.len(),
            });
        }
        Ok(self.posterior_unchecked(x))
    }

    fn predict_label(&self, x: &[f64]) -> Result<usize, ModelError> {
        Ok(self.predict_posterior(x)?.argmax())
    }
}

/// Borrowed labelled rows. All rows share one length, every value is finite
/// and every label is below `class_count`.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    class_count: usize,
    feature_count: usize,
}

impl<'a> TrainingSet<'a> {
    pub fn new(
        rows: &'a [Vec<f64>],
        labels: &'a [usize],
        class_count: usize,
    ) -> Result<Self, ModelError> {
        if rows.len() != labels.len() {
            return Err(ModelError::Data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if class_count == 0 {
            return Err(ModelError::Data("class count must be positive".into()));
        }
        let feature_count = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_count {
                return Err(ModelError::DimensionMismatch {
                    expected: feature_count,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::Data(format!("row {i} has a non-finite value")));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l >= class_count) {
            return Err(ModelError::Data(format!(
                "label {l} outside 0..{class_count}"
            )));
        }
        Ok(Self {
            rows,
            labels,
            class_count,
            feature_count,
        })
    }

    pub fn rows(&self) -> &'a [Vec<f64>] {
        self.rows
    }

    pub fn labels(&self) -> &'a [usize] {
        self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in self.labels {
            counts[l] += 1;
        }
        counts
    }
}
