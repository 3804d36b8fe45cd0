//! Multiclass AdaBoost over depth-1 trees (SAMME-style).
//!
//! Round `p` fits the depth-1 tree `h_p` with the least weighted
//! misclassification error (ties to the lower feature, then the lower
//! threshold), measures its weighted error `e`
//! and weights its vote by `alpha_p = 0.5 * ln((1 - e) / e) + ln(K - 1)`.
//! Misclassified samples are multiplied by `exp(beta_p)`, correct ones by
//! `exp(-beta_p)` with `beta_p = 0.5 * (ln((1 - e) / e) + ln(K - 1))`, then
//! renormalized, which leaves the previous stump at chance error `(K-1)/K`.
//! For `K = 2`, `beta_p = alpha_p`. The decision is
//! `argmax_l sum_p alpha_p [h_p(x) = l]`.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use super::{Classifier, ModelError, Posterior, TrainingSet};

/// Vote weight used when a round makes no weighted error.
pub const MAX_ALPHA: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub rounds: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self { rounds: 50 }
    }
}

/// Vote weight of a round with weighted error `error` over `class_count`
/// classes, capped at [`MAX_ALPHA`].
pub fn samme_alpha(error: f64, class_count: usize) -> f64 {
    if error <= 0.0 {
        return MAX_ALPHA;
    }
    let correction = ((class_count.max(2) - 1) as f64).ln();
    (0.5 * ((1.0 - error) / error).ln() + correction).min(MAX_ALPHA)
}

/// Sample reweighting exponent for a round with weighted error `error`.
pub fn samme_reweight(error: f64, class_count: usize) -> f64 {
    if error <= 0.0 {
        return MAX_ALPHA;
    }
    0.5 * (((1.0 - error) / error).ln() + ((class_count.max(2) - 1) as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub stump: Tree,
    pub alpha: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub feature_count: usize,
    pub class_count: usize,
    pub rounds: Vec<BoostRound>,
    /// Rounds dropped because their error reached `(K - 1) / K`.
    pub discarded: usize,
}

impl AdaBoost {
    /// `g_l(x) = sum_p alpha_p [h_p(x) = l]`.
    pub fn votes(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.class_count];
        for round in &self.rounds {
            g[stump_label(&round.stump, x)] += round.alpha;
        }
        g
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for r in &self.rounds {
            if r.stump.feature_count != self.feature_count
                || r.stump.class_count != self.class_count
                || !(r.alpha.is_finite() && r.alpha >= 0.0)
            {
                return Err(ModelError::Corrupt("malformed boosting round".into()));
            }
            r.stump.validate()?;
        }
        Ok(())
    }
}

fn normalized(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        counts.iter().map(|c| c / total).collect()
    } else {
        vec![1.0 / counts.len() as f64; counts.len()]
    }
}

/// Weight left over after predicting the heaviest class.
fn side_error(counts: &[f64]) -> f64 {
    counts.iter().sum::<f64>() - counts.iter().copied().fold(0.0, f64::max)
}

/// Depth-1 tree minimizing weighted error; leaves hold weighted class
/// frequencies. A root leaf is returned when no split lowers the error.
pub fn fit_stump(set: &TrainingSet<'_>, weights: &[f64]) -> Tree {
    let k = set.class_count();
    let mut totals = vec![0.0; k];
    for (&y, &w) in set.labels().iter().zip(weights) {
        totals[y] += w;
    }
    let mut best_error = side_error(&totals);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut order: Vec<usize> = (0..set.len()).collect();
    for f in 0..set.feature_count() {
        let value = |i: usize| set.rows()[i][f];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let mut left = vec![0.0; k];
        for pos in 0..order.len().saturating_sub(1) {
            let i = order[pos];
            left[set.labels()[i]] += weights[i];
            let (lo, hi) = (value(i), value(order[pos + 1]));
            if lo == hi {
                continue;
            }
            let right: Vec<f64> = totals.iter().zip(&left).map(|(t, l)| t - l).collect();
            let error = side_error(&left) + side_error(&right);
            if error < best_error - 1e-12 {
                best_error = error;
                best = Some((f, midpoint(lo, hi), left.clone()));
            }
        }
    }
    let nodes = match best {
        None => vec![Node::Leaf {
            posterior: normalized(&totals),
        }],
        Some((feature, threshold, left)) => {
            let right: Vec<f64> = totals.iter().zip(&left).map(|(t, l)| t - l).collect();
            vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    posterior: normalized(&left),
                },
                Node::Leaf {
                    posterior: normalized(&right),
                },
            ]
        }
    };
    Tree {
        feature_count: set.feature_count(),
        class_count: k,
        nodes,
    }
}

fn stump_label(stump: &Tree, x: &[f64]) -> usize {
    super::argmax(stump.leaf_posterior(x))
}

impl Classifier for AdaBoost {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Vote shares; uniform when no round survived.
    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        Posterior::normalize(self.votes(x))
    }
}

pub fn fit_adaboost(
    set: &TrainingSet<'_>,
    config: &AdaBoostConfig,
) -> Result<AdaBoost, ModelError> {
    if config.rounds == 0 {
        return Err(ModelError::Config(
            "boosting needs at least one round".into(),
        ));
    }
    if set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let n = set.len();
    let k = set.class_count();
    let uniform = vec![1.0 / n as f64; n];
    let mut weights = uniform.clone();
    let mut rounds = Vec::new();
    let mut discarded = 0;

    for _ in 0..config.rounds {
        let stump = fit_stump(set, &weights);
        let miss: Vec<bool> = set
            .rows()
            .iter()
            .zip(set.labels())
            .map(|(x, &y)| stump_label(&stump, x) != y)
            .collect();
        let error: f64 = weights
            .iter()
            .zip(&miss)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum();

        if error >= (k as f64 - 1.0) / k as f64 {
            discarded += 1;
            if weights == uniform {
                break;
            }
            weights.clone_from(&uniform);
            continue;
        }

        let alpha = samme_alpha(error, k);
        rounds.push(BoostRound {
            stump,
            alpha,
            error,
        });
        if error <= 0.0 {
            break;
        }
        let beta = samme_reweight(error, k);
        for (w, &m) in weights.iter_mut().zip(&miss) {
            *w *= if m { beta.exp() } else { (-beta).exp() };
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }

    Ok(AdaBoost {
        feature_count: set.feature_count(),
        class_count: k,
        rounds,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(samme_alpha(0.5, 2), 0.0);
        assert!((samme_alpha(0.1, 2) - 1.0986122886681098).abs() < 1e-6);
        assert!((samme_alpha(0.1, 2) - 0.5 * 9.0f64.ln()).abs() < 1e-12);
        assert_eq!(samme_alpha(0.0, 6), MAX_ALPHA);
        assert!((samme_alpha(0.5, 6) - 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn reweighting_leaves_previous_round_at_chance() {
        for (e, k) in [(0.1, 2usize), (0.3, 4), (0.6, 6), (0.05, 3)] {
            let b = samme_reweight(e, k);
            let miss = e * b.exp();
            let share = miss / (miss + (1.0 - e) * (-b).exp());
            assert!((share - (k as f64 - 1.0) / k as f64).abs() < 1e-12);
        }
        assert_eq!(samme_reweight(0.2, 2), samme_alpha(0.2, 2));
    }

    #[test]
    fn one_round_on_stump_separable_data() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 0.0]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 12)).collect();
        let set = TrainingSet::new(&rows, &labels, 2).unwrap();
        let model = fit_adaboost(&set, &AdaBoostConfig { rounds: 1 }).unwrap();
        assert_eq!(model.rounds.len(), 1);
        assert_eq!(model.rounds[0].alpha, MAX_ALPHA);
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(model.predict_label(r).unwrap(), l);
        }
    }

    #[test]
    fn multiclass_boosting_beats_single_stump() {
        let rows: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                vec![
                    (i % 3) as f64 + (i as f64 * 0.7).sin() * 0.3,
                    ((i / 3) % 3) as f64,
                ]
            })
            .collect();
        let labels: Vec<usize> = (0..90).map(|i| i % 3).collect();
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        let model = fit_adaboost(&set, &AdaBoostConfig { rounds: 20 }).unwrap();
        let acc = rows
            .iter()
            .zip(&labels)
            .filter(|(r, &l)| model.predict_label(r).unwrap() == l)
            .count() as f64
            / 90.0;
        assert!(acc > 0.9, "accuracy {acc}");
    }

    #[test]
    fn zero_rounds_rejected() {
        let rows = vec![vec![0.0]];
        let set = TrainingSet::new(&rows, &[0], 1).unwrap();
        assert!(fit_adaboost(&set, &AdaBoostConfig { rounds: 0 }).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn exponential_loss_bound(
                data in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0usize..2), 6..40),
                rounds in 1usize..15,
            ) {
                let rows: Vec<Vec<f64>> = data.iter().map(|(a, b, _)| vec![*a, *b]).collect();
                let labels: Vec<usize> = data.iter().map(|d| d.2).collect();
                let set = TrainingSet::new(&rows, &labels, 2).unwrap();
                let model = fit_adaboost(&set, &AdaBoostConfig { rounds }).unwrap();
                prop_assume!(model.discarded == 0);
                let errors = rows.iter().zip(&labels)
                    .filter(|(r, &l)| model.predict_label(r).unwrap() != l)
                    .count() as f64 / rows.len() as f64;
                let bound: f64 = model.rounds.iter()
                    .map(|r| 2.0 * (r.error * (1.0 - r.error)).sqrt())
                    .product();
                prop_assert!(errors <= bound + 1e-12, "error {} bound {}", errors, bound);
            }
        }
    }
}
