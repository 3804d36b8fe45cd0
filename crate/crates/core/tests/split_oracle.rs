use proptest::prelude::*;
use semg_meet::models::tree::root_information_gain;
use semg_meet::models::{fit_tree, Classifier, TrainingSet, TreeParams};
use semg_meet::rng::rng_from_seed;

fn entropy(counts: &[f64], total: f64) -> f64 {
    let mut h = 0.0;
    for &c in counts {
        if c > 0.0 {
            let p = c / total;
            h += -p * p.log2();
        }
    }
    h
}

/// Best information gain over every feature and every midpoint threshold.
fn brute_force_best_gain(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Option<f64> {
    let n = rows.len() as f64;
    let mut parent = vec![0.0; k];
    for &l in labels {
        parent[l] += 1.0;
    }
    let mut best: Option<f64> = None;
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = pair[0] + (pair[1] - pair[0]) / 2.0;
            let t = if t < pair[1] { t } else { pair[0] };
            let mut left = vec![0.0; k];
            for (r, &l) in rows.iter().zip(labels) {
                if r[f] <= t {
                    left[l] += 1.0;
                }
            }
            let nl: f64 = left.iter().sum();
            let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
            let nr = n - nl;
            let mut gain = entropy(&parent, n);
            if nl > 0.0 {
                gain -= nl / n * entropy(&left, nl);
            }
            if nr > 0.0 {
                gain -= nr / n * entropy(&right, nr);
            }
            let gain = gain.max(0.0);
            if best.is_none_or(|b| gain > b) {
                best = Some(gain);
            }
        }
    }
    best
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, usize)> {
    (1usize..=3, 1usize..=3, 1usize..=30).prop_flat_map(|(d, k, n)| {
        (
            prop::collection::vec(prop::collection::vec(-4i32..=4, d), n),
            prop::collection::vec(0..k, n),
            Just(k),
        )
            .prop_map(|(rows, labels, k)| {
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|v| v as f64 * 0.5).collect())
                    .collect();
                (rows, labels, k)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exhaustive_root_matches_brute_force((rows, labels, k) in dataset()) {
        let set = TrainingSet::new(&rows, &labels, k).unwrap();
        let tree = fit_tree(&set, TreeParams::exhaustive(rows[0].len()), &mut rng_from_seed(0)).unwrap();
        match (root_information_gain(&tree, &set), brute_force_best_gain(&rows, &labels, k)) {
            (Some(got), Some(want)) => prop_assert_eq!(got, want),
            (None, None) => {}
            (None, Some(want)) => prop_assert_eq!(want, 0.0),
            (got, want) => prop_assert!(false, "tree {:?} oracle {:?}", got, want),
        }
    }

    #[test]
    fn monotone_transform_keeps_predictions(
        (rows, labels, k) in dataset(),
        feature in 0usize..3,
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let d = rows[0].len();
        let feature = feature % d;
        let warp = |v: f64| (scale * v + shift).exp();
        let warped: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[feature] = warp(r[feature]);
                r
            })
            .collect();
        let a = TrainingSet::new(&rows, &labels, k).unwrap();
        let b = TrainingSet::new(&warped, &labels, k).unwrap();
        let ta = fit_tree(&a, TreeParams::exhaustive(d), &mut rng_from_seed(1)).unwrap();
        let tb = fit_tree(&b, TreeParams::exhaustive(d), &mut rng_from_seed(1)).unwrap();
        for (r, w) in rows.iter().zip(&warped) {
            prop_assert_eq!(ta.predict_label(r).unwrap(), tb.predict_label(w).unwrap());
        }
    }
}
