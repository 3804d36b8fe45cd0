//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Features are z-scored with training statistics. For standardized rows
//! `z_i` and parameters `W` (one row `[bias, w_1..w_d]` per class) the loss is
//!
//! `L(W) = -(1/n) sum_i ln softmax(W z_i)[y_i] + (l2/2) sum |w|^2`
//!
//! with the biases excluded from the penalty. Weights start at zero.

use serde::{Deserialize, Serialize};

use super::{Classifier, ModelError, Posterior, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub class_count: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Row-major `class_count x (feature_count + 1)`, bias first.
    pub weights: Vec<f64>,
    pub final_loss: f64,
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    scores.iter_mut().for_each(|s| *s /= total);
}

fn class_scores(weights: &[f64], z: &[f64], class_count: usize) -> Vec<f64> {
    let stride = z.len() + 1;
    (0..class_count)
        .map(|c| {
            let w = &weights[c * stride..(c + 1) * stride];
            w[0] + w[1..].iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

/// Mean cross-entropy plus L2 penalty and its gradient with respect to
/// `weights`, on already standardized rows.
pub fn loss_and_gradient(
    weights: &[f64],
    rows: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = rows.first().map_or(0, Vec::len);
    let stride = d + 1;
    let n = rows.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    for (z, &y) in rows.iter().zip(labels) {
        let mut p = class_scores(weights, z, class_count);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + p.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss -= p[y] - lse;
        softmax_in_place(&mut p);
        for c in 0..class_count {
            let r = p[c] - if c == y { 1.0 } else { 0.0 };
            let g = &mut grad[c * stride..(c + 1) * stride];
            g[0] += r / n;
            for (gj, zj) in g[1..].iter_mut().zip(z) {
                *gj += r * zj / n;
            }
        }
    }
    loss /= n;
    for c in 0..class_count {
        for j in 1..stride {
            let w = weights[c * stride + j];
            loss += 0.5 * l2 * w * w;
            grad[c * stride + j] += l2 * w;
        }
    }
    (loss, grad)
}

/// Column means and standard deviations (1 where a column is constant).
pub fn standardization(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for r in rows {
        for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in scale.iter_mut() {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    (mean, scale)
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean.iter().zip(scale))
        .map(|(v, (m, s))| (v - m) / s)
        .collect()
}

pub fn fit_logistic_regression(
    set: &TrainingSet<'_>,
    config: &LogisticConfig,
) -> Result<LogisticRegression, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) || config.l2 < 0.0 {
        return Err(ModelError::Config(format!(
            "learning rate must be positive and l2 nonnegative, got {} and {}",
            config.learning_rate, config.l2
        )));
    }
    let (mean, scale) = standardization(set.rows());
    let z: Vec<Vec<f64>> = set
        .rows()
        .iter()
        .map(|r| standardize(r, &mean, &scale))
        .collect();
    let k = set.class_count();
    let mut weights = vec![0.0; k * (set.feature_count() + 1)];
    let mut final_loss = loss_and_gradient(&weights, &z, set.labels(), k, config.l2).0;
    for _ in 0..config.epochs {
        let (loss, grad) = loss_and_gradient(&weights, &z, set.labels(), k, config.l2);
        if !loss.is_finite() {
            return Err(ModelError::Divergence {
                learning_rate: config.learning_rate,
            });
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        final_loss = loss;
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::Divergence {
            learning_rate: config.learning_rate,
        });
    }
    Ok(LogisticRegression {
        class_count: k,
        mean,
        scale,
        weights,
        final_loss,
    })
}

impl LogisticRegression {
    pub fn validate(&self) -> Result<(), ModelError> {
        let d = self.mean.len();
        let ok = self.class_count > 0
            && self.scale.len() == d
            && self.weights.len() == self.class_count * (d + 1)
            && self.weights.iter().chain(&self.mean).all(|v| v.is_finite())
            && self.scale.iter().all(|s| s.is_finite() && *s > 0.0);
        if ok {
            Ok(())
        } else {
            Err(ModelError::Corrupt("logistic parameters malformed".into()))
        }
    }
}

impl Classifier for LogisticRegression {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn feature_count(&self) -> usize {
        self.mean.len()
    }

    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        let z = standardize(x, &self.mean, &self.scale);
        let mut p = class_scores(&self.weights, &z, self.class_count);
        softmax_in_place(&mut p);
        Posterior::normalize(p)
    }
}
