//! Tree ensembles: random forest, bagging and extra trees share one trainer
//! and differ only in their [`EnsembleConfig`].
//!
//! | model        | bootstrap | split mode  | attrs per node |
//! |--------------|-----------|-------------|----------------|
//! | random forest| yes       | exhaustive  | `ceil(sqrt(d))`|
//! | bagging      | yes       | exhaustive  | `d`            |
//! | extra trees  | no        | random cut  | `ceil(sqrt(d))`|
//!
//! Tree `i` draws from its own generator seeded with
//! `derive_seed(config.seed, i)`, so the ensemble is identical for any
//! number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, SplitMode, Tree, TreeParams};
use super::{Classifier, ModelError, Posterior, TrainingSet};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// `M`
    pub tree_count: usize,
    /// `P`; `None` means `ceil(sqrt(feature_count))`.
    pub attrs_per_node: Option<usize>,
    /// `n_min`
    pub min_split: usize,
    pub bootstrap: bool,
    pub split_mode: SplitMode,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn extra_trees(tree_count: usize, seed: u64) -> Self {
        Self {
            tree_count,
            attrs_per_node: None,
            min_split: 2,
            bootstrap: false,
            split_mode: SplitMode::RandomCut,
            max_depth: None,
            seed,
        }
    }

    pub fn random_forest(tree_count: usize, seed: u64) -> Self {
        Self {
            bootstrap: true,
            split_mode: SplitMode::Exhaustive,
            ..Self::extra_trees(tree_count, seed)
        }
    }

    /// Bootstrap replicas with every feature examined at each node.
    pub fn bagging(tree_count: usize, feature_count: usize, seed: u64) -> Self {
        Self {
            attrs_per_node: Some(feature_count),
            ..Self::random_forest(tree_count, seed)
        }
    }

    /// One exhaustive tree on the full sample.
    pub fn decision_tree(feature_count: usize) -> Self {
        Self {
            tree_count: 1,
            attrs_per_node: Some(feature_count),
            min_split: 2,
            bootstrap: false,
            split_mode: SplitMode::Exhaustive,
            max_depth: None,
            seed: 0,
        }
    }

    pub fn resolved_attrs(&self, feature_count: usize) -> usize {
        self.attrs_per_node
            .unwrap_or_else(|| (feature_count as f64).sqrt().ceil() as usize)
            .max(1)
    }

    pub fn tree_params(&self, feature_count: usize) -> TreeParams {
        TreeParams {
            attrs_per_node: self.resolved_attrs(feature_count),
            min_split: self.min_split,
            split_mode: self.split_mode,
            max_depth: self.max_depth,
        }
    }

    pub fn validate(&self, feature_count: usize) -> Result<(), ModelError> {
        if self.tree_count == 0 {
            return Err(ModelError::Config("tree_count must be at least 1".into()));
        }
        let p = self.resolved_attrs(feature_count);
        if feature_count > 0 && p > feature_count {
            return Err(ModelError::Config(format!(
                "attrs_per_node {p} exceeds feature count {feature_count}"
            )));
        }
        if self.min_split < 2 {
            return Err(ModelError::Config(format!(
                "min_split must be at least 2, got {}",
                self.min_split
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub feature_count: usize,
    pub class_count: usize,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.trees.is_empty() {
            return Err(ModelError::Corrupt("ensemble has no trees".into()));
        }
        for tree in &self.trees {
            if tree.feature_count != self.feature_count || tree.class_count != self.class_count {
                return Err(ModelError::Corrupt(
                    "tree shape differs from ensemble".into(),
                ));
            }
            tree.validate()?;
        }
        Ok(())
    }
}

impl Classifier for Ensemble {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Mean of the tree posteriors.
    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        let mut acc = vec![0.0; self.class_count];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.leaf_posterior(x)) {
                *a += p;
            }
        }
        let m = self.trees.len() as f64;
        Posterior::from_normalized(acc.into_iter().map(|a| a / m).collect())
    }
}

pub fn fit_ensemble(
    set: &TrainingSet<'_>,
    config: &EnsembleConfig,
) -> Result<Ensemble, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    config.validate(set.feature_count())?;
    let params = config.tree_params(set.feature_count());
    let n = set.len();
    let trees = (0..config.tree_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(config.seed, i as u64));
            let indices: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_on(set, &indices, None, params, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ensemble {
        config: config.clone(),
        feature_count: set.feature_count(),
        class_count: set.class_count(),
        trees,
    })
}
