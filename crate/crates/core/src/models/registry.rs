//! Model catalogue: short names, shared hyperparameters and a single
//! training entry point over all classifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    fit_adaboost, fit_ensemble, fit_gaussian_nb, fit_knn, fit_logistic_regression, AdaBoost,
    AdaBoostConfig, Classifier, Ensemble, EnsembleConfig, GaussianNb, Knn, LogisticConfig,
    LogisticRegression, ModelError, Posterior, TrainingSet,
};
use crate::meet::{fit_meet, MeetModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    AdaBoost,
    Bagging,
    LogisticRegression,
    NaiveBayes,
    Knn,
    ExtraTrees,
    Meet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::AdaBoost,
        ModelKind::Bagging,
        ModelKind::LogisticRegression,
        ModelKind::NaiveBayes,
        ModelKind::Knn,
        ModelKind::ExtraTrees,
        ModelKind::Meet,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
            ModelKind::AdaBoost => "adb",
            ModelKind::Bagging => "bag",
            ModelKind::LogisticRegression => "lr",
            ModelKind::NaiveBayes => "nb",
            ModelKind::Knn => "knn",
            ModelKind::ExtraTrees => "et",
            ModelKind::Meet => "meet",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.short_name() == needle)
            .ok_or_else(|| {
                ModelError::Config(format!(
                    "unknown model '{s}', expected one of dt, rf, adb, bag, lr, nb, knn, et, meet"
                ))
            })
    }
}

/// Hyperparameters for every model kind. None are given by the method
/// description; all defaults are assumptions and configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub trees: usize,
    /// `None` means `ceil(sqrt(feature_count))`.
    pub attrs_per_node: Option<usize>,
    pub min_split: usize,
    pub adaboost_rounds: usize,
    pub knn_k: usize,
    pub logistic: LogisticConfig,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            trees: 100,
            attrs_per_node: None,
            min_split: 2,
            adaboost_rounds: 50,
            knn_k: 5,
            logistic: LogisticConfig::default(),
        }
    }
}

impl Hyperparameters {
    /// Ensemble configuration for tree-based kinds.
    pub fn ensemble_config(
        &self,
        kind: ModelKind,
        feature_count: usize,
        seed: u64,
    ) -> Option<EnsembleConfig> {
        let mut cfg = match kind {
            ModelKind::DecisionTree => EnsembleConfig::decision_tree(feature_count),
            ModelKind::RandomForest => EnsembleConfig::random_forest(self.trees, seed),
            ModelKind::Bagging => EnsembleConfig::bagging(self.trees, feature_count, seed),
            ModelKind::ExtraTrees | ModelKind::Meet => {
                EnsembleConfig::extra_trees(self.trees, seed)
            }
            _ => return None,
        };
        cfg.min_split = self.min_split;
        if matches!(
            kind,
            ModelKind::RandomForest | ModelKind::ExtraTrees | ModelKind::Meet
        ) {
            cfg.attrs_per_node = self.attrs_per_node;
        }
        Some(cfg)
    }
}

/// Any trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Ensemble(Ensemble),
    AdaBoost(AdaBoost),
    Knn(Knn),
    NaiveBayes(GaussianNb),
    LogisticRegression(LogisticRegression),
    Meet(MeetModel),
}

impl Model {
    pub fn as_classifier(&self) -> &dyn Classifier {
        match self {
            Model::Ensemble(m) => m,
            Model::AdaBoost(m) => m,
            Model::Knn(m) => m,
            Model::NaiveBayes(m) => m,
            Model::LogisticRegression(m) => m,
            Model::Meet(m) => m,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Model::Ensemble(m) => m.validate(),
            Model::AdaBoost(m) => m.validate(),
            Model::Knn(m) => m.validate(),
            Model::NaiveBayes(m) => m.validate(),
            Model::LogisticRegression(m) => m.validate(),
            Model::Meet(m) => m.validate(),
        }
    }
}

impl Classifier for Model {
    fn class_count(&self) -> usize {
        self.as_classifier().class_count()
    }

    fn feature_count(&self) -> usize {
        self.as_classifier().feature_count()
    }

    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        self.as_classifier().posterior_unchecked(x)
    }

    fn predict_label(&self, x: &[f64]) -> Result<usize, ModelError> {
        self.as_classifier().predict_label(x)
    }
}

/// Trains a model of `kind`, seeding every randomized component from `seed`.
pub fn fit_model(
    kind: ModelKind,
    hyper: &Hyperparameters,
    set: &TrainingSet<'_>,
    seed: u64,
) -> Result<Model, ModelError> {
    let d = set.feature_count();
    Ok(match kind {
        ModelKind::DecisionTree
        | ModelKind::RandomForest
        | ModelKind::Bagging
        | ModelKind::ExtraTrees => {
            let cfg = hyper.ensemble_config(kind, d, seed).expect("tree kind");
            Model::Ensemble(fit_ensemble(set, &cfg)?)
        }
        ModelKind::Meet => {
            let cfg = hyper.ensemble_config(kind, d, seed).expect("tree kind");
            Model::Meet(fit_meet(set, &cfg)?)
        }
        ModelKind::AdaBoost => Model::AdaBoost(fit_adaboost(
            set,
            &AdaBoostConfig {
                rounds: hyper.adaboost_rounds,
            },
        )?),
        ModelKind::Knn => Model::Knn(fit_knn(set, hyper.knn_k)?),
        ModelKind::NaiveBayes => Model::NaiveBayes(fit_gaussian_nb(set)?),
        ModelKind::LogisticRegression => {
            Model::LogisticRegression(fit_logistic_regression(set, &hyper.logistic)?)
        }
    })
}
