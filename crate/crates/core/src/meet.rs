//! Mixture of experts extra trees (MEET).
//!
//! `N` classes are covered by `ceil(N / 2)` experts, each an extra-trees
//! ensemble trained only on the rows of its (at most two) classes, plus one
//! extra-trees gate trained on every row. For a query `x` the gate posterior
//! `g` is pooled per group into expert weights `w_e = sum_{c in e} g(c)`, and
//! every class scores `w_e(c) * expert_e(c | x)`. The prediction is the class
//! with the highest score; the returned posterior is the scores rescaled to
//! unit sum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{
    argmax, fit_ensemble, Classifier, Ensemble, EnsembleConfig, ModelError, Posterior, TrainingSet,
};
use crate::rng::derive_seed;

/// Assignment of classes to two-class experts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertPlan {
    pub class_count: usize,
    pub groups: Vec<Vec<usize>>,
}

impl ExpertPlan {
    /// Experts plus the gate.
    pub fn total_classifiers(&self) -> usize {
        self.groups.len() + 1
    }

    pub fn expert_count(&self) -> usize {
        self.groups.len()
    }

    /// `(group, position within group)` for every class.
    pub fn locate(&self) -> Vec<(usize, usize)> {
        let mut at = vec![(0, 0); self.class_count];
        for (g, group) in self.groups.iter().enumerate() {
            for (pos, &c) in group.iter().enumerate() {
                at[c] = (g, pos);
            }
        }
        at
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = vec![false; self.class_count];
        for group in &self.groups {
            if group.is_empty() || group.len() > 2 {
                return Err(ModelError::Config(format!(
                    "expert groups must hold one or two classes, got {group:?}"
                )));
            }
            for &c in group {
                if c >= self.class_count || seen[c] {
                    return Err(ModelError::Config(format!(
                        "class {c} is out of range or assigned twice"
                    )));
                }
                seen[c] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(ModelError::Config(format!("class {c} has no expert")));
        }
        Ok(())
    }
}

/// Consecutive class pairs in ascending id order; an odd class count leaves
/// the last class alone in its group.
pub fn plan_experts(class_count: usize) -> Result<ExpertPlan, ModelError> {
    let order: Vec<usize> = (0..class_count).collect();
    plan_experts_with_order(&order)
}

/// Pairs classes in the given order, e.g. `[0, 3, 1, 2]` gives `{0,3},{1,2}`.
pub fn plan_experts_with_order(order: &[usize]) -> Result<ExpertPlan, ModelError> {
    if order.len() < 2 {
        return Err(ModelError::Config(format!(
            "a mixture of experts needs at least 2 classes, got {}",
            order.len()
        )));
    }
    let plan = ExpertPlan {
        class_count: order.len(),
        groups: order.chunks(2).map(<[usize]>::to_vec).collect(),
    };
    plan.validate()?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetModel {
    pub plan: ExpertPlan,
    /// Expert `e` predicts over `plan.groups[e]` in group order.
    pub experts: Vec<Ensemble>,
    pub gate: Ensemble,
}

/// Output of one MEET prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeetPrediction {
    pub posterior: Posterior,
    pub label: usize,
    /// Per-class `w_e * expert_e(c)` before normalization.
    pub scores: Vec<f64>,
    pub expert_weights: Vec<f64>,
}

/// Gate-weighted combination of expert posteriors.
///
/// `gate` holds one nonnegative weight per class; `experts[e]` is expert
/// `e`'s posterior over `plan.groups[e]`.
pub fn combine(
    plan: &ExpertPlan,
    gate: &[f64],
    experts: &[Vec<f64>],
) -> Result<MeetPrediction, ModelError> {
    if gate.len() != plan.class_count {
        return Err(ModelError::DimensionMismatch {
            expected: plan.class_count,
            found: gate.len(),
        });
    }
    if experts.len() != plan.groups.len() {
        return Err(ModelError::DimensionMismatch {
            expected: plan.groups.len(),
            found: experts.len(),
        });
    }
    let expert_weights: Vec<f64> = plan
        .groups
        .iter()
        .map(|g| g.iter().map(|&c| gate[c]).sum())
        .collect();
    let mut scores = vec![0.0; plan.class_count];
    for ((group, post), w) in plan.groups.iter().zip(experts).zip(&expert_weights) {
        if post.len() != group.len() {
            return Err(ModelError::DimensionMismatch {
                expected: group.len(),
                found: post.len(),
            });
        }
        for (&c, p) in group.iter().zip(post) {
            scores[c] = w * p;
        }
    }
    let label = argmax(&scores);
    Ok(MeetPrediction {
        posterior: Posterior::normalize(scores.clone()),
        label,
        scores,
        expert_weights,
    })
}

/// Rows of `set` whose label belongs to `group`, relabelled to positions
/// within the group.
pub fn expert_rows(set: &TrainingSet<'_>, group: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (row, &l) in set.rows().iter().zip(set.labels()) {
        if let Some(pos) = group.iter().position(|&c| c == l) {
            rows.push(row.clone());
            labels.push(pos);
        }
    }
    (rows, labels)
}

fn gate_config(config: &EnsembleConfig) -> EnsembleConfig {
    EnsembleConfig {
        seed: derive_seed(config.seed, 0),
        ..config.clone()
    }
}

fn expert_config(config: &EnsembleConfig, expert: usize) -> EnsembleConfig {
    EnsembleConfig {
        seed: derive_seed(config.seed, expert as u64 + 1),
        ..config.clone()
    }
}

/// Trains expert `expert` of a MEET model. Only rows of the group's classes
/// are used, so other classes' rows have no influence on the result.
pub fn fit_expert(
    set: &TrainingSet<'_>,
    group: &[usize],
    expert: usize,
    config: &EnsembleConfig,
) -> Result<Ensemble, ModelError> {
    let (rows, labels) = expert_rows(set, group);
    if rows.is_empty() {
        return Err(ModelError::Data(format!(
            "expert {expert} (classes {group:?}) has no training rows"
        )));
    }
    let sub = TrainingSet::new(&rows, &labels, group.len())?;
    fit_ensemble(&sub, &expert_config(config, expert))
}

/// Trains all experts and the gate. `config` is the shared extra-trees
/// configuration; each member derives its own seed from `config.seed`.
pub fn fit_meet(set: &TrainingSet<'_>, config: &EnsembleConfig) -> Result<MeetModel, ModelError> {
    fit_meet_with_plan(set, plan_experts(set.class_count())?, config)
}

pub fn fit_meet_with_plan(
    set: &TrainingSet<'_>,
    plan: ExpertPlan,
    config: &EnsembleConfig,
) -> Result<MeetModel, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if plan.class_count != set.class_count() {
        return Err(ModelError::Config(format!(
            "plan covers {} classes but the data has {}",
            plan.class_count,
            set.class_count()
        )));
    }
    plan.validate()?;
    if let Some(missing) = set.class_counts().iter().position(|&c| c == 0) {
        return Err(ModelError::MissingClass(missing));
    }
    let (gate, experts) = rayon::join(
        || fit_ensemble(set, &gate_config(config)),
        || {
            plan.groups
                .par_iter()
                .enumerate()
                .map(|(e, group)| fit_expert(set, group, e, config))
                .collect::<Result<Vec<_>, _>>()
        },
    );
    Ok(MeetModel {
        plan,
        experts: experts?,
        gate: gate?,
    })
}

impl MeetModel {
    pub fn predict_meet(&self, x: &[f64]) -> Result<MeetPrediction, ModelError> {
        let gate = self.gate.predict_posterior(x)?;
        let experts: Vec<Vec<f64>> = self
            .experts
            .iter()
            .map(|e| e.predict_posterior(x).map(Posterior::into_vec))
            .collect::<Result<_, _>>()?;
        combine(&self.plan, gate.probs(), &experts)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.plan.validate()?;
        self.gate.validate()?;
        if self.gate.class_count != self.plan.class_count
            || self.experts.len() != self.plan.groups.len()
        {
            return Err(ModelError::Corrupt("MEET members do not match plan".into()));
        }
        for (e, g) in self.experts.iter().zip(&self.plan.groups) {
            e.validate()?;
            if e.class_count != g.len() || e.feature_count != self.gate.feature_count {
                return Err(ModelError::Corrupt(
                    "expert shape does not match plan".into(),
                ));
            }
        }
        Ok(())
    }
}

impl Classifier for MeetModel {
    fn class_count(&self) -> usize {
        self.plan.class_count
    }

    fn feature_count(&self) -> usize {
        self.gate.feature_count
    }

    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        let gate = self.gate.posterior_unchecked(x);
        let experts: Vec<Vec<f64>> = self
            .experts
            .iter()
            .map(|e| e.posterior_unchecked(x).into_vec())
            .collect();
        combine(&self.plan, gate.probs(), &experts)
            .expect("validated model shapes")
            .posterior
    }

    fn predict_label(&self, x: &[f64]) -> Result<usize, ModelError> {
        Ok(self.predict_meet(x)?.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_classes_need_four_classifiers() {
        let plan = plan_experts(6).unwrap();
        assert_eq!(plan.groups, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(plan.total_classifiers(), 4);
    }

    #[test]
    fn two_and_five_classes() {
        let p2 = plan_experts(2).unwrap();
        assert_eq!(p2.groups, vec![vec![0, 1]]);
        assert_eq!(p2.total_classifiers(), 2);
        let p5 = plan_experts(5).unwrap();
        assert_eq!(p5.groups, vec![vec![0, 1], vec![2, 3], vec![4]]);
        assert_eq!(p5.total_classifiers(), 4);
        assert!(plan_experts(1).is_err());
        assert!(plan_experts(0).is_err());
    }

    #[test]
    fn custom_order_and_invalid_orders() {
        let p = plan_experts_with_order(&[3, 0, 2, 1]).unwrap();
        assert_eq!(p.groups, vec![vec![3, 0], vec![2, 1]]);
        assert!(plan_experts_with_order(&[0, 0, 1]).is_err());
        assert!(plan_experts_with_order(&[0, 5]).is_err());
    }

    #[test]
    fn hand_computed_combination() {
        let plan = plan_experts(6).unwrap();
        let gate = [0.1, 0.1, 0.3, 0.3, 0.1, 0.1];
        let experts = vec![vec![0.9, 0.1], vec![0.6, 0.4], vec![0.5, 0.5]];
        let out = combine(&plan, &gate, &experts).unwrap();
        let expect_w = [0.2, 0.6, 0.2];
        let expect_s = [0.18, 0.02, 0.36, 0.24, 0.10, 0.10];
        for (a, b) in out.expert_weights.iter().zip(expect_w) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in out.scores.iter().zip(expect_s) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(out.label, 2);
        assert!((out.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_hot_gate_and_expert() {
        let plan = plan_experts(6).unwrap();
        let gate = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let experts = vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5]];
        let out = combine(&plan, &gate, &experts).unwrap();
        assert_eq!(out.label, 0);
        assert_eq!(out.scores[0], 1.0);
    }

    #[test]
    fn combination_checks_shapes() {
        let plan = plan_experts(4).unwrap();
        assert!(combine(&plan, &[0.25; 3], &[vec![0.5; 2], vec![0.5; 2]]).is_err());
        assert!(combine(&plan, &[0.25; 4], &[vec![0.5; 2]]).is_err());
        assert!(combine(&plan, &[0.25; 4], &[vec![0.5; 2], vec![1.0]]).is_err());
    }

    fn blobs(classes: usize, per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            for i in 0..per_class {
                let jitter = ((c * 31 + i * 17) % 13) as f64 / 13.0 - 0.5;
                rows.push(vec![c as f64 * 3.0 + jitter, (i % 4) as f64]);
                labels.push(c);
            }
        }
        (rows, labels)
    }

    #[test]
    fn experts_see_only_their_classes() {
        let (rows, labels) = blobs(6, 10);
        let set = TrainingSet::new(&rows, &labels, 6).unwrap();
        let plan = plan_experts(6).unwrap();
        for group in &plan.groups {
            let (r, l) = expert_rows(&set, group);
            assert_eq!(r.len(), 20);
            assert!(l.iter().all(|&x| x < 2));
        }
        let model = fit_meet(&set, &EnsembleConfig::extra_trees(5, 3)).unwrap();
        assert_eq!(model.experts.len(), 3);
        assert_eq!(model.gate.class_count, 6);
    }

    #[test]
    fn singleton_expert_is_constant() {
        let (rows, labels) = blobs(5, 6);
        let set = TrainingSet::new(&rows, &labels, 5).unwrap();
        let model = fit_meet(&set, &EnsembleConfig::extra_trees(4, 1)).unwrap();
        let last = &model.experts[2];
        assert_eq!(last.class_count, 1);
        for r in &rows {
            assert_eq!(last.predict_posterior(r).unwrap().probs(), &[1.0]);
        }
    }

    #[test]
    fn missing_class_rejected() {
        let (rows, labels) = blobs(3, 4);
        let set = TrainingSet::new(&rows, &labels, 4).unwrap();
        assert_eq!(
            fit_meet(&set, &EnsembleConfig::extra_trees(2, 0)),
            Err(ModelError::MissingClass(3))
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(0.01f64..1.0, len).prop_map(|v| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect()
            })
        }

        proptest! {
            #[test]
            fn gate_scale_does_not_change_label(
                gate in distribution(6),
                e1 in distribution(2), e2 in distribution(2), e3 in distribution(2),
                k in 0.001f64..1000.0,
            ) {
                let plan = plan_experts(6).unwrap();
                let experts = vec![e1, e2, e3];
                let base = combine(&plan, &gate, &experts).unwrap();
                let scaled: Vec<f64> = gate.iter().map(|g| g * k).collect();
                prop_assert_eq!(base.label, combine(&plan, &scaled, &experts).unwrap().label);
                prop_assert!((base.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!((base.posterior.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }

            #[test]
            fn uniform_gate_picks_best_expert_entry(
                e1 in distribution(2), e2 in distribution(2), e3 in distribution(2),
            ) {
                let plan = plan_experts(6).unwrap();
                let experts = vec![e1, e2, e3];
                let flat: Vec<f64> = experts.concat();
                let out = combine(&plan, &[1.0 / 6.0; 6], &experts).unwrap();
                prop_assert_eq!(out.label, argmax(&flat));
            }
        }
    }
}
