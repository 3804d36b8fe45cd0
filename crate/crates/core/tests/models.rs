use proptest::prelude::*;
use rand::Rng;
use semg_meet::models::logistic::loss_and_gradient;
use semg_meet::models::{
    fit_knn, fit_model, samme_alpha, Classifier, Hyperparameters, ModelError, ModelFile, ModelKind,
    TrainingSet,
};
use semg_meet::rng::rng_from_seed;

fn blobs(
    n_per_class: usize,
    classes: usize,
    dims: usize,
    spread: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        for _ in 0..n_per_class {
            rows.push(
                (0..dims)
                    .map(|d| if d % classes == c { 3.0 } else { 0.0 } + spread * rng.random_range(-1.0..1.0))
                    .collect(),
            );
            labels.push(c);
        }
    }
    (rows, labels)
}

fn small_hyper() -> Hyperparameters {
    Hyperparameters {
        trees: 15,
        adaboost_rounds: 10,
        ..Hyperparameters::default()
    }
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut rng = rng_from_seed(5);
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let labels = vec![0, 1, 2, 0, 1, 2];
    let weights: Vec<f64> = (0..3 * 5).map(|_| rng.random_range(-0.5..0.5)).collect();
    let l2 = 0.3;
    let (_, grad) = loss_and_gradient(&weights, &rows, &labels, 3, l2);
    let h = 1e-6;
    for j in 0..weights.len() {
        let mut up = weights.clone();
        let mut down = weights.clone();
        up[j] += h;
        down[j] -= h;
        let numeric = (loss_and_gradient(&up, &rows, &labels, 3, l2).0
            - loss_and_gradient(&down, &rows, &labels, 3, l2).0)
            / (2.0 * h);
        let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(1e-8);
        assert!(
            rel < 1e-5,
            "weight {j}: analytic {} numeric {numeric}",
            grad[j]
        );
    }
}

#[test]
fn every_model_is_identical_across_thread_pools() {
    let (rows, labels) = blobs(12, 3, 4, 2.0, 11);
    let set = TrainingSet::new(&rows, &labels, 3).unwrap();
    let hyper = small_hyper();
    for kind in ModelKind::ALL {
        let fit = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit_model(kind, &hyper, &set, 99).unwrap())
        };
        let names = vec!["a".into(), "b".into(), "c".into()];
        let one = ModelFile::new(kind, names.clone(), fit(1)).to_text();
        let four = ModelFile::new(kind, names, fit(4)).to_text();
        assert_eq!(one, four, "{kind}");
    }
}

#[test]
fn model_files_round_trip_bit_for_bit() {
    let (rows, labels) = blobs(10, 4, 5, 2.5, 3);
    let set = TrainingSet::new(&rows, &labels, 4).unwrap();
    let names: Vec<String> = ["w", "x", "y", "z"].map(String::from).to_vec();
    for kind in ModelKind::ALL {
        let model = fit_model(kind, &small_hyper(), &set, 7).unwrap();
        let text = ModelFile::new(kind, names.clone(), model.clone()).to_text();
        let loaded = ModelFile::from_text(&text).unwrap();
        assert_eq!(loaded.model, model, "{kind}");
        assert_eq!(loaded.to_text(), text);
        for r in &rows {
            assert_eq!(
                loaded.model.as_classifier().predict_posterior(r).unwrap(),
                model.as_classifier().predict_posterior(r).unwrap()
            );
        }
    }
}

#[test]
fn corrupt_model_files_are_rejected() {
    let (rows, labels) = blobs(5, 2, 2, 0.5, 1);
    let set = TrainingSet::new(&rows, &labels, 2).unwrap();
    let model = fit_model(ModelKind::DecisionTree, &small_hyper(), &set, 0).unwrap();
    let text =
        ModelFile::new(ModelKind::DecisionTree, vec!["a".into(), "b".into()], model).to_text();
    for bad in [
        String::new(),
        text[..text.len() / 2].to_string(),
        text.replace("semg-meet-model", "other"),
        text.replace("\"version\": 1", "\"version\": 9"),
        text.replace("[\n    \"a\",\n    \"b\"\n  ]", "[\"a\"]"),
    ] {
        assert!(
            matches!(ModelFile::from_text(&bad), Err(ModelError::Corrupt(_))),
            "{bad}"
        );
    }
}

#[test]
fn separable_blobs_are_learned() {
    let (rows, labels) = blobs(20, 3, 3, 0.5, 21);
    let set = TrainingSet::new(&rows, &labels, 3).unwrap();
    for kind in ModelKind::ALL {
        let model = fit_model(kind, &small_hyper(), &set, 1).unwrap();
        let c = model.as_classifier();
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(r, &l)| c.predict_label(r).unwrap() == l)
            .count();
        assert_eq!(correct, rows.len(), "{kind}");
    }
}

#[test]
fn samme_vote_weight() {
    assert!((samme_alpha(0.25, 2) - 0.5 * 3f64.ln()).abs() < 1e-12);
    assert!((samme_alpha(0.5, 4) - 0.5 * 1f64.ln() - 3f64.ln()).abs() < 1e-12);
}

fn knn_oracle(
    rows: &[Vec<f64>],
    labels: &[usize],
    k_classes: usize,
    q: &[f64],
    k: usize,
) -> Vec<f64> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let d = |i: usize| -> f64 {
        rows[i]
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    order.sort_by(|&a, &b| d(a).partial_cmp(&d(b)).unwrap().then(a.cmp(&b)));
    let mut p = vec![0.0; k_classes];
    for &i in &order[..k] {
        p[labels[i]] += 1.0 / k as f64;
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_matches_sorted_oracle(
        rows in prop::collection::vec(prop::collection::vec(-3i32..3, 2), 3..25),
        seed in 0u64..1000,
        k in 1usize..5,
    ) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
        let labels: Vec<usize> = (0..rows.len()).map(|i| (i + seed as usize) % 3).collect();
        let k = k.min(rows.len());
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        let model = fit_knn(&set, k).unwrap();
        let q = vec![(seed % 7) as f64 - 3.0, (seed % 5) as f64 - 2.0];
        let got = model.predict_posterior(&q).unwrap();
        let want = knn_oracle(&rows, &labels, 3, &q, k);
        for (g, w) in got.probs().iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn posteriors_are_distributions(seed in 0u64..50, q in prop::collection::vec(-10.0f64..10.0, 3)) {
        let (rows, labels) = blobs(6, 3, 3, 1.5, seed);
        let set = TrainingSet::new(&rows, &labels, 3).unwrap();
        for kind in ModelKind::ALL {
            let model = fit_model(kind, &small_hyper(), &set, seed).unwrap();
            let p = model.as_classifier().predict_posterior(&q).unwrap();
            prop_assert_eq!(p.len(), 3);
            prop_assert!(p.probs().iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
