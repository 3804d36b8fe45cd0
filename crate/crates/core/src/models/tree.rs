//! Axis-aligned classification trees.
//!
//! Two split searches share one grower:
//!
//! * [`SplitMode::Exhaustive`] evaluates every midpoint between consecutive
//!   distinct values of each candidate feature and keeps the split with the
//!   largest information gain (classic decision tree, random forest, bagging).
//! * [`SplitMode::RandomCut`] draws one cut point uniformly inside the node's
//!   range for each of `P` randomly chosen non-constant features and keeps the
//!   one with the best normalized score `2 I / (H_split + H_class)`
//!   (extremely randomized trees).
//!
//! Samples go left when `x[feature] <= threshold`. Trees are stored as a flat
//! node arena in which children always follow their parent.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, ModelError, Posterior, TrainingSet};

/// Shannon entropy in bits, with `0 * log 0 = 0`.
pub fn entropy(probabilities: &[f64]) -> Result<f64, ModelError> {
    if let Some(p) = probabilities.iter().find(|p| p.is_nan() || **p < 0.0) {
        return Err(ModelError::Domain(format!("probability {p} is negative")));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ModelError::Domain(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum())
}

/// Entropy of a (possibly weighted) class histogram.
pub(crate) fn entropy_of_counts(counts: &[f64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

fn histogram(labels: &[usize], class_count: usize) -> Vec<f64> {
    let mut counts = vec![0.0; class_count];
    for &l in labels {
        counts[l] += 1.0;
    }
    counts
}

/// `Entropy(E) - sum |E_i| / |E| * Entropy(E_i)` for label multisets.
pub fn information_gain(parent: &[usize], children: &[&[usize]]) -> Result<f64, ModelError> {
    if parent.is_empty() {
        return Err(ModelError::Contract("parent set is empty".into()));
    }
    let class_count = parent
        .iter()
        .chain(children.iter().flat_map(|c| c.iter()))
        .max()
        .map_or(0, |m| m + 1);
    let parent_counts = histogram(parent, class_count);
    let mut merged = vec![0.0; class_count];
    for child in children {
        for (m, c) in merged.iter_mut().zip(histogram(child, class_count)) {
            *m += c;
        }
    }
    if merged != parent_counts {
        return Err(ModelError::Contract(
            "children do not partition the parent set".into(),
        ));
    }
    let n = parent.len() as f64;
    let mut gain = entropy_of_counts(&parent_counts, n);
    for child in children.iter().filter(|c| !c.is_empty()) {
        let m = child.len() as f64;
        gain -= m / n * entropy_of_counts(&histogram(child, class_count), m);
    }
    Ok(gain.max(0.0))
}

/// Normalized split score `2 I / (H_split + H_class)`; 0 when the
/// denominator vanishes.
pub fn et_split_score(information_gain: f64, split_entropy: f64, class_entropy: f64) -> f64 {
    let denom = split_entropy + class_entropy;
    if denom > 0.0 {
        (2.0 * information_gain / denom).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// A binary split evaluated on one node sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub information_gain: f64,
    /// Entropy of the left/right proportions.
    pub split_entropy: f64,
    /// Class entropy of the node before splitting.
    pub class_entropy: f64,
    pub score: f64,
}

impl SplitCandidate {
    /// Scores a split from the node's class histogram and its left part.
    pub fn evaluate(feature: usize, threshold: f64, parent: &[f64], left: &[f64]) -> Self {
        let n: f64 = parent.iter().sum();
        let nl: f64 = left.iter().sum();
        let nr = n - nl;
        let right: Vec<f64> = parent.iter().zip(left).map(|(p, l)| p - l).collect();
        let class_entropy = entropy_of_counts(parent, n);
        let mut gain = class_entropy;
        if nl > 0.0 {
            gain -= nl / n * entropy_of_counts(left, nl);
        }
        if nr > 0.0 {
            gain -= nr / n * entropy_of_counts(&right, nr);
        }
        let information_gain = gain.max(0.0);
        let split_entropy = entropy_of_counts(&[nl, nr], n);
        Self {
            feature,
            threshold,
            information_gain,
            split_entropy,
            class_entropy,
            score: et_split_score(information_gain, split_entropy, class_entropy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Exhaustive,
    RandomCut,
}

/// Per-tree growth parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Features examined per node (`P`).
    pub attrs_per_node: usize,
    /// Nodes with fewer samples become leaves (`n_min`).
    pub min_split: usize,
    pub split_mode: SplitMode,
    pub max_depth: Option<usize>,
}

impl TreeParams {
    /// Classic single decision tree over all `feature_count` features.
    pub fn exhaustive(feature_count: usize) -> Self {
        Self {
            attrs_per_node: feature_count.max(1),
            min_split: 2,
            split_mode: SplitMode::Exhaustive,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        posterior: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature_count: usize,
    pub class_count: usize,
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_posterior(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { posterior } => return posterior,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Structural checks for trees that did not come from [`fit_tree`].
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Corrupt(msg));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf { posterior } => {
                    if posterior.len() != self.class_count {
                        return bad(format!("leaf {i} has {} classes", posterior.len()));
                    }
                    Posterior::new(posterior.clone())
                        .map_err(|e| ModelError::Corrupt(format!("leaf {i}: {e}")))?;
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= self.feature_count || !threshold.is_finite() {
                        return bad(format!("split {i} is malformed"));
                    }
                    let n = self.nodes.len();
                    if !(*left > i && *right > i && *left < n && *right < n) {
                        return bad(format!("split {i} has invalid children"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Classifier for Tree {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn posterior_unchecked(&self, x: &[f64]) -> Posterior {
        Posterior::from_normalized(self.leaf_posterior(x).to_vec())
    }
}

struct Grower<'a, 'r> {
    set: &'a TrainingSet<'a>,
    weights: Option<&'a [f64]>,
    params: TreeParams,
    rng: &'r mut ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_, '_> {
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn counts(&self, idx: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.set.class_count()];
        for &i in idx {
            counts[self.set.labels()[i]] += self.weight(i);
        }
        counts
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let id = self.nodes.len();
        let total: f64 = counts.iter().sum();
        let leaf = Node::Leaf {
            posterior: counts.iter().map(|c| c / total).collect(),
        };
        self.nodes.push(leaf);

        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        let too_deep = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || too_deep || idx.len() < self.params.min_split {
            return id;
        }
        let split = match self.params.split_mode {
            SplitMode::Exhaustive => self.best_exhaustive(idx, &counts),
            SplitMode::RandomCut => self.best_random_cut(idx, &counts),
        };
        let Some(split) = split else { return id };

        let rows = self.set.rows();
        let mut cut = 0;
        for k in 0..idx.len() {
            if rows[idx[k]][split.feature] <= split.threshold {
                idx.swap(k, cut);
                cut += 1;
            }
        }
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.set.feature_count();
        let p = self.params.attrs_per_node.min(d);
        if p == d {
            return (0..d).collect();
        }
        let mut chosen = sample(self.rng, d, p).into_vec();
        chosen.sort_unstable();
        chosen
    }

    fn best_exhaustive(&mut self, idx: &[usize], parent: &[f64]) -> Option<SplitCandidate> {
        let rows = self.set.rows();
        let labels = self.set.labels();
        let mut best: Option<SplitCandidate> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for f in self.candidate_features() {
            order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
            let mut left = vec![0.0; parent.len()];
            for k in 0..order.len() - 1 {
                let i = order[k];
                left[labels[i]] += self.weight(i);
                let lo = rows[i][f];
                let hi = rows[order[k + 1]][f];
                if lo == hi {
                    continue;
                }
                let threshold = midpoint(lo, hi);
                let cand = SplitCandidate::evaluate(f, threshold, parent, &left);
                if best.is_none_or(|b| cand.information_gain > b.information_gain) {
                    best = Some(cand);
                }
            }
        }
        best
    }

    fn best_random_cut(&mut self, idx: &[usize], parent: &[f64]) -> Option<SplitCandidate> {
        let rows = self.set.rows();
        let labels = self.set.labels();
        let d = self.set.feature_count();
        let mut pool: Vec<usize> = (0..d).collect();
        let mut best: Option<SplitCandidate> = None;
        let mut taken = 0;
        let mut remaining = d;
        while taken < self.params.attrs_per_node && remaining > 0 {
            let pick = self.rng.random_range(0..remaining);
            let f = pool.swap_remove(pick);
            remaining -= 1;
            let (lo, hi) = idx
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(rows[i][f]), hi.max(rows[i][f]))
                });
            if lo >= hi {
                continue;
            }
            taken += 1;
            let threshold = if (hi - lo).is_finite() {
                self.rng.random_range(lo..hi)
            } else {
                midpoint(lo, hi)
            };
            let mut left = vec![0.0; parent.len()];
            for &i in idx {
                if rows[i][f] <= threshold {
                    left[labels[i]] += self.weight(i);
                }
            }
            let cand = SplitCandidate::evaluate(f, threshold, parent, &left);
            let better = match best {
                None => true,
                Some(b) => cand.score > b.score || (cand.score == b.score && f < b.feature),
            };
            if better {
                best = Some(cand);
            }
        }
        best
    }
}

/// Midpoint that still separates `lo` from `hi` for adjacent floats.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Grows one tree on the rows listed in `indices` (duplicates allowed, as in
/// a bootstrap replica).
pub fn fit_tree_on(
    set: &TrainingSet<'_>,
    indices: &[usize],
    weights: Option<&[f64]>,
    params: TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<Tree, ModelError> {
    if indices.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if params.attrs_per_node == 0 || params.attrs_per_node > set.feature_count().max(1) {
        return Err(ModelError::Config(format!(
            "attrs_per_node must lie in 1..={}, got {}",
            set.feature_count(),
            params.attrs_per_node
        )));
    }
    if params.min_split < 2 {
        return Err(ModelError::Config(format!(
            "min_split must be at least 2, got {}",
            params.min_split
        )));
    }
    let mut idx = indices.to_vec();
    let mut grower = Grower {
        set,
        weights,
        params,
        rng,
        nodes: Vec::new(),
    };
    grower.grow(&mut idx, 0);
    Ok(Tree {
        feature_count: set.feature_count(),
        class_count: set.class_count(),
        nodes: grower.nodes,
    })
}

/// Grows one tree on the whole training set.
pub fn fit_tree(
    set: &TrainingSet<'_>,
    params: TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<Tree, ModelError> {
    let all: Vec<usize> = (0..set.len()).collect();
    fit_tree_on(set, &all, None, params, rng)
}

/// Information gain of the root split, if the root was split.
pub fn root_information_gain(tree: &Tree, set: &TrainingSet<'_>) -> Option<f64> {
    match tree.root() {
        Node::Leaf { .. } => None,
        Node::Split {
            feature, threshold, ..
        } => {
            let parent = histogram(set.labels(), set.class_count());
            let mut left = vec![0.0; set.class_count()];
            for (row, &l) in set.rows().iter().zip(set.labels()) {
                if row[*feature] <= *threshold {
                    left[l] += 1.0;
                }
            }
            Some(SplitCandidate::evaluate(*feature, *threshold, &parent, &left).information_gain)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn set<'a>(rows: &'a [Vec<f64>], labels: &'a [usize], k: usize) -> TrainingSet<'a> {
        TrainingSet::new(rows, labels, k).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy(&[1.0]).unwrap(), 0.0);
        assert_eq!(entropy(&[0.25; 4]).unwrap(), 2.0);
        assert!(matches!(entropy(&[-0.5, 1.5]), Err(ModelError::Domain(_))));
    }

    #[test]
    fn information_gain_examples() {
        let parent = [0, 0, 1, 1];
        assert_eq!(information_gain(&parent, &[&[0, 0], &[1, 1]]).unwrap(), 1.0);
        assert_eq!(information_gain(&parent, &[&[0, 1], &[0, 1]]).unwrap(), 0.0);
        let ig = information_gain(&parent, &[&[0, 0, 1], &[1]]).unwrap();
        let h = -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
        assert!((ig - (1.0 - 0.75 * h)).abs() < 1e-12);
        assert!((ig - 0.3113).abs() < 1e-3);
    }

    #[test]
    fn information_gain_rejects_non_partition() {
        assert!(matches!(
            information_gain(&[0, 0, 1, 1], &[&[0, 0], &[1]]),
            Err(ModelError::Contract(_))
        ));
    }

    #[test]
    fn split_score_examples() {
        let perfect = SplitCandidate::evaluate(0, 0.0, &[2.0, 2.0], &[2.0, 0.0]);
        assert_eq!(perfect.score, 1.0);
        let useless = SplitCandidate::evaluate(0, 0.0, &[2.0, 2.0], &[1.0, 1.0]);
        assert_eq!(useless.score, 0.0);
        let single = SplitCandidate::evaluate(0, 0.0, &[4.0, 0.0], &[2.0, 0.0]);
        assert_eq!(single.score, 0.0);
        assert_eq!(et_split_score(0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn single_class_root_is_leaf() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let labels = vec![1, 1, 1];
        let s = set(&rows, &labels, 2);
        let t = fit_tree(&s, TreeParams::exhaustive(1), &mut rng_from_seed(0)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.leaf_posterior(&[0.0]), &[0.0, 1.0]);
    }

    #[test]
    fn sign_split_is_depth_one() {
        let rows: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let labels = vec![0, 0, 0, 1, 1, 1];
        let s = set(&rows, &labels, 2);
        let t = fit_tree(&s, TreeParams::exhaustive(1), &mut rng_from_seed(0)).unwrap();
        assert_eq!(t.depth(), 1);
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(t.predict_label(r).unwrap(), l);
        }
        assert!(matches!(t.root(), Node::Split { threshold, .. } if *threshold == 0.0));
    }

    #[test]
    fn empty_training_set_rejected() {
        let rows: Vec<Vec<f64>> = vec![];
        let s = TrainingSet::new(&rows, &[], 2).unwrap();
        assert!(matches!(
            fit_tree(&s, TreeParams::exhaustive(1), &mut rng_from_seed(0)),
            Err(ModelError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn random_cut_tree_fits_training_data() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, ((i * 7) % 11) as f64])
            .collect();
        let labels: Vec<usize> = (0..40).map(|i| (i / 10) % 3).collect();
        let s = set(&rows, &labels, 3);
        let params = TreeParams {
            attrs_per_node: 1,
            min_split: 2,
            split_mode: SplitMode::RandomCut,
            max_depth: None,
        };
        let t = fit_tree(&s, params, &mut rng_from_seed(9)).unwrap();
        t.validate().unwrap();
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(t.predict_label(r).unwrap(), l);
        }
    }

    #[test]
    fn adjacent_floats_keep_valid_threshold() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
    }

    #[test]
    fn validate_rejects_cycles() {
        let t = Tree {
            feature_count: 1,
            class_count: 1,
            nodes: vec![Node::Split {
                feature: 0,
                threshold: 0.0,
                left: 0,
                right: 0,
            }],
        };
        assert!(t.validate().is_err());
    }
}
