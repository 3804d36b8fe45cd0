//! k-nearest neighbours with Euclidean distance
//! `sqrt(sum_k (a_k - b_k)^2)`; distance ties go to the lower row index.

use serde::{Deserialize, Serialize};

use super::{Classifier, ModelError, Posterior, TrainingSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub class_count: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_k(k: usize, rows: usize) -> Result<(), ModelError> {
    if rows == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if k == 0 || k > rows {
        return Err(ModelError::Config(format!(
            "k must lie in 1..={rows}, got {k}"
        )));
    }
    Ok(())
}

/// Neighbour-label frequencies among the `k` closest training rows.
pub fn knn_predict(
    set: &TrainingSet<'_>,
    query: &[f64],
    k: usize,
) -> Result<Posterior, ModelError> {
    check_k(k, set.len())?;
    if query.len() != set.feature_count() {
        return Err(ModelError::DimensionMismatch {
            expected: set.feature_count(),
            found: query.len(),
        });
    }
    Ok(vote(set.rows(), set.labels(), set.class_count(), query, k))
}

fn vote(
    rows: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    query: &[f64],
    k: usize,
) -> Posterior {
    let mut dist: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (euclidean(r, query), i))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by_distance);
    }
    let mut counts = vec![0.0; class_count];
    for &(_, i) in &dist[..k] {
        counts[labels[i]] += 1.0;
    }
    Posterior::from_normalized(counts.into_iter().map(|c| c / k as f64).collect())
}

pub fn fit_knn(set: &TrainingSet<'_>, k: usize) -> Result<Knn, ModelError> {
    check_k(k, set.len())?;
    Ok(Knn {
        k,
        class_count: set.class_count(),
        rows: set.rows().to_vec(),
        labels: set.labels().to_vec(),
    })
}

impl Knn {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_k(self.k, self.rows.len()).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        TrainingSet::new(&self.rows, &self.labels, self.class_count)
            .map_err(|e| ModelError::Corrupt(e.to_string()))?;
        Ok(())
    }
}

impl Classifier for Knn {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn feature_count(&self) -> usize {
        self.rows[0].len()
    }

    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        vote(&self.rows, &self.labels, self.class_count, x, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![5.0, 5.0],
                vec![6.0, 5.0],
            ],
            vec![0, 0, 1, 1, 2],
        )
    }

    #[test]
    fn exact_match_with_k1() {
        let (rows, labels) = data();
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        let p = knn_predict(&set, &[6.0, 5.0], 1).unwrap();
        assert_eq!(p.probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn all_rows_give_class_frequencies() {
        let (rows, labels) = data();
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        let p = knn_predict(&set, &[100.0, -3.0], 5).unwrap();
        assert_eq!(p.probs(), &[0.4, 0.4, 0.2]);
    }

    #[test]
    fn three_neighbours_vote() {
        let (rows, labels) = data();
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        let p = knn_predict(&set, &[0.1, 0.1], 3).unwrap();
        assert!((p.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let rows = vec![vec![1.0], vec![-1.0]];
        let labels = vec![1, 0];
        let set = TrainingSet::new(&rows, &labels, 2).unwrap();
        assert_eq!(knn_predict(&set, &[0.0], 1).unwrap().argmax(), 1);
    }

    #[test]
    fn invalid_k_and_empty_set() {
        let (rows, labels) = data();
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        assert!(knn_predict(&set, &[0.0, 0.0], 0).is_err());
        assert!(knn_predict(&set, &[0.0, 0.0], 6).is_err());
        let empty: Vec<Vec<f64>> = vec![];
        let set = TrainingSet::new(&empty, &[], 1).unwrap();
        assert_eq!(fit_knn(&set, 1), Err(ModelError::EmptyTrainingSet));
    }

    #[test]
    fn squared_differences_inside_radical() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, -4.0]), 5.0);
    }
}
