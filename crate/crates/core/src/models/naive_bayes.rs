//! Gaussian naive Bayes. Class priors are relative training frequencies;
//! each feature is an independent Gaussian per class. Products are formed in
//! log space and normalized with log-sum-exp.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Classifier, ModelError, Posterior, TrainingSet};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub priors: Vec<f64>,
    /// `means[class][feature]`
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

pub fn fit_gaussian_nb(set: &TrainingSet<'_>) -> Result<GaussianNb, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let k = set.class_count();
    let d = set.feature_count();
    let counts = set.class_counts();
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(ModelError::MissingClass(missing));
    }
    let mut means = vec![vec![0.0; d]; k];
    for (row, &l) in set.rows().iter().zip(set.labels()) {
        for (m, v) in means[l].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c as f64);
    }
    let mut variances = vec![vec![0.0; d]; k];
    for (row, &l) in set.rows().iter().zip(set.labels()) {
        for ((s, v), m) in variances[l].iter_mut().zip(row).zip(&means[l]) {
            *s += (v - m) * (v - m);
        }
    }
    for (s, &c) in variances.iter_mut().zip(&counts) {
        s.iter_mut()
            .for_each(|v| *v = (*v / c as f64).max(VARIANCE_FLOOR));
    }
    let n = set.len() as f64;
    Ok(GaussianNb {
        priors: counts.iter().map(|&c| c as f64 / n).collect(),
        means,
        variances,
    })
}

impl GaussianNb {
    /// Unnormalized `ln P(class) + sum_i ln P(x_i | class)`.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(prior, (mu, var))| {
                prior.ln()
                    + x.iter()
                        .zip(mu.iter().zip(var))
                        .map(|(v, (m, s))| {
                            -0.5 * (2.0 * PI * s).ln() - (v - m) * (v - m) / (2.0 * s)
                        })
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.priors.len();
        let d = self.means.first().map_or(0, Vec::len);
        let shape_ok = k > 0
            && self.means.len() == k
            && self.variances.len() == k
            && self
                .means
                .iter()
                .chain(&self.variances)
                .all(|r| r.len() == d);
        let values_ok = self.priors.iter().all(|p| p.is_finite() && *p > 0.0)
            && self.means.iter().flatten().all(|m| m.is_finite())
            && self
                .variances
                .iter()
                .flatten()
                .all(|v| v.is_finite() && *v > 0.0);
        if shape_ok && values_ok {
            Ok(())
        } else {
            Err(ModelError::Corrupt(
                "naive Bayes parameters malformed".into(),
            ))
        }
    }
}

impl Classifier for GaussianNb {
    fn class_count(&self) -> usize {
        self.priors.len()
    }

    fn feature_count(&self) -> usize {
        self.means[0].len()
    }

    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        let logs = self.log_joint(x);
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Posterior::uniform(logs.len());
        }
        Posterior::normalize(logs.iter().map(|l| (l - max).exp()).collect())
    }
}
