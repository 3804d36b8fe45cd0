//! Confusion matrices, one-vs-rest metrics and the subject x model
//! experiment runner.
//!
//! Matrices are indexed `[actual][predicted]`. Per class `c`, with `Tp`,
//! `Fp`, `Tn`, `Fn` counted one-vs-rest:
//!
//! | metric    | definition                        |
//! |-----------|-----------------------------------|
//! | accuracy  | `(Tp + Tn) / (Tp + Fp + Tn + Fn)` |
//! | precision | `Tp / (Tp + Fp)`                  |
//! | recall    | `Tp / (Tp + Fn)`                  |
//! | F1        | `2 P R / (P + R)`                 |
//!
//! A metric with a zero denominator is reported as 0 and flagged undefined.
//! Macro values are unweighted means over classes; overall accuracy is
//! `trace / total`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{stratified_split, Dataset};
use crate::models::{fit_model, Classifier, Hyperparameters, ModelKind};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{actual} actual labels but {predicted} predicted labels")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("label {label} out of range for {class_count} classes")]
    LabelOutOfRange { label: usize, class_count: usize },
    #[error("empty confusion matrix")]
    Empty,
    #[error("invalid subject id '{0}': use letters, digits, '-' or '_'")]
    InvalidSubject(String),
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

pub fn confusion_matrix(
    actual: &[usize],
    predicted: &[usize],
    class_count: usize,
) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    let mut counts = vec![vec![0u64; class_count]; class_count];
    for (&a, &p) in actual.iter().zip(predicted) {
        let label = a.max(p);
        if label >= class_count {
            return Err(EvalError::LabelOutOfRange { label, class_count });
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|r| r.len() != n) {
            return Err(EvalError::Config(
                "confusion matrix must be square and nonempty".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count()).map(|i| self.counts[i][i]).sum()
    }

    /// Row-normalized percentages; rows with no samples are all zero.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if total == 0 {
                            0.0
                        } else {
                            100.0 * c as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `(Tp, Fp, Tn, Fn)` for class `c` against the rest.
    pub fn one_vs_rest(&self, c: usize) -> (u64, u64, u64, u64) {
        let tp = self.counts[c][c];
        let fp = (0..self.class_count())
            .map(|a| self.counts[a][c])
            .sum::<u64>()
            - tp;
        let fn_ = self.counts[c].iter().sum::<u64>() - tp;
        let tn = self.total() - tp - fp - fn_;
        (tp, fp, tn, fn_)
    }

    fn to_csv(&self, names: &[String], values: impl Fn(usize, usize) -> String) -> String {
        let mut out = String::from("actual\\predicted");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, n) in names.iter().enumerate() {
            out.push_str(n);
            for j in 0..names.len() {
                out.push(',');
                out.push_str(&values(i, j));
            }
            out.push('\n');
        }
        out
    }

    pub fn counts_csv(&self, names: &[String]) -> String {
        self.to_csv(names, |i, j| self.counts[i][j].to_string())
    }

    pub fn percent_csv(&self, names: &[String]) -> String {
        let p = self.percentages();
        self.to_csv(names, |i, j| p[i][j].to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

/// Metrics for one class from its one-vs-rest counts.
pub fn class_metrics(tp: u64, fp: u64, tn: u64, fn_: u64) -> ClassMetrics {
    let (tp, fp, tn, fn_) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let (accuracy, _) = ratio(tp + tn, tp + fp + tn + fn_);
    let (precision, precision_undefined) = ratio(tp, tp + fp);
    let (recall, recall_undefined) = ratio(tp, tp + fn_);
    let (f1, f1_undefined) = ratio(2.0 * precision * recall, precision + recall);
    ClassMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
        f1_undefined,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_class: Vec<ClassMetrics>,
    /// Unweighted class means; a flag is set if any class had it undefined.
    pub macro_avg: ClassMetrics,
    pub overall_accuracy: f64,
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let per_class: Vec<ClassMetrics> = (0..cm.class_count())
        .map(|c| {
            let (tp, fp, tn, fn_) = cm.one_vs_rest(c);
            class_metrics(tp, fp, tn, fn_)
        })
        .collect();
    let n = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    let macro_avg = ClassMetrics {
        accuracy: mean(|m| m.accuracy),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        precision_undefined: per_class.iter().any(|m| m.precision_undefined),
        recall_undefined: per_class.iter().any(|m| m.recall_undefined),
        f1_undefined: per_class.iter().any(|m| m.f1_undefined),
    };
    Ok(Metrics {
        per_class,
        macro_avg,
        overall_accuracy: cm.trace() as f64 / total as f64,
    })
}

/// Metrics for one trained model on one subject's test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub subject: String,
    pub model: String,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

impl MetricsReport {
    pub fn new(
        subject: impl Into<String>,
        model: impl Into<String>,
        seed: u64,
        class_names: Vec<String>,
        confusion: ConfusionMatrix,
    ) -> Result<Self, EvalError> {
        if class_names.len() != confusion.class_count() {
            return Err(EvalError::Config(format!(
                "{} class names for a {}-class matrix",
                class_names.len(),
                confusion.class_count()
            )));
        }
        let metrics = compute_metrics(&confusion)?;
        Ok(Self {
            subject: subject.into(),
            model: model.into(),
            seed,
            class_names,
            confusion,
            metrics,
        })
    }

    /// Rows of the metrics CSV, per class then `macro`, without header.
    pub fn metrics_rows(&self) -> String {
        let mut out = String::new();
        let rows = self
            .class_names
            .iter()
            .map(String::as_str)
            .zip(&self.metrics.per_class)
            .chain(std::iter::once(("macro", &self.metrics.macro_avg)));
        for (name, m) in rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.subject, self.model, name, m.accuracy, m.precision, m.recall, m.f1
            )
            .expect("string write");
        }
        out
    }

    /// `(class, metric)` pairs whose value was undefined.
    pub fn undefined_metrics(&self) -> Vec<(String, &'static str)> {
        let mut out = Vec::new();
        for (name, m) in self.class_names.iter().zip(&self.metrics.per_class) {
            for (flag, metric) in [
                (m.precision_undefined, "precision"),
                (m.recall_undefined, "recall"),
                (m.f1_undefined, "f1"),
            ] {
                if flag {
                    out.push((name.clone(), metric));
                }
            }
        }
        out
    }
}

pub const METRICS_HEADER: &str = "subject,model,class,accuracy,precision,recall,f1";
pub const SUMMARY_HEADER: &str =
    "subject,model,seed,test_rows,overall_accuracy,macro_precision,macro_recall,macro_f1";

/// Predicts every row of `test` and reports against its labels.
pub fn evaluate_model(
    model: &dyn Classifier,
    test: &Dataset,
    subject: &str,
    model_name: &str,
    seed: u64,
) -> crate::Result<MetricsReport> {
    let predicted = test
        .rows
        .iter()
        .map(|r| model.predict_label(r))
        .collect::<Result<Vec<_>, _>>()?;
    let cm = confusion_matrix(&test.labels, &predicted, test.class_count())?;
    Ok(MetricsReport::new(
        subject,
        model_name,
        seed,
        test.classes.names().to_vec(),
        cm,
    )?)
}

/// One subject's labelled feature rows.
#[derive(Debug, Clone)]
pub struct Subject {
    pub id: String,
    pub dataset: Dataset,
}

/// Subject ids become file names: letters, digits, `-` and `_` only.
pub fn valid_subject_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Subject {
    pub fn new(id: impl Into<String>, dataset: Dataset) -> Result<Self, EvalError> {
        let id = id.into();
        if !valid_subject_id(&id) {
            return Err(EvalError::InvalidSubject(id));
        }
        Ok(Self { id, dataset })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<ModelKind>,
    pub hyper: Hyperparameters,
    pub train_fraction: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(models: Vec<ModelKind>, seed: u64) -> Self {
        Self {
            models,
            hyper: Hyperparameters::default(),
            train_fraction: 0.7,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFailure {
    pub subject: String,
    pub model: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutcome {
    /// Ordered by subject, then model, as configured.
    pub reports: Vec<MetricsReport>,
    pub failures: Vec<CellFailure>,
}

/// Split seed and model seed for subject `index`; every model of a subject
/// sees the same partition and the same training seed.
pub fn subject_seeds(seed: u64, index: usize) -> (u64, u64) {
    let s = derive_seed(seed, index as u64);
    (derive_seed(s, 0), derive_seed(s, 1))
}

fn run_cell(
    subject: &Subject,
    index: usize,
    kind: ModelKind,
    config: &ExperimentConfig,
) -> crate::Result<MetricsReport> {
    let (split_seed, model_seed) = subject_seeds(config.seed, index);
    let (train, test) = stratified_split(&subject.dataset, config.train_fraction, split_seed)?;
    let model = fit_model(kind, &config.hyper, &train.training_set()?, model_seed)?;
    evaluate_model(&model, &test, &subject.id, kind.short_name(), config.seed)
}

/// Trains and tests every subject x model cell in parallel. A failing cell
/// is recorded and the rest still run.
pub fn run_cells(
    subjects: &[Subject],
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome, EvalError> {
    if config.models.is_empty() {
        return Err(EvalError::Config("no models".into()));
    }
    for (i, s) in subjects.iter().enumerate() {
        if subjects[..i].iter().any(|t| t.id == s.id) {
            return Err(EvalError::Config(format!("duplicate subject '{}'", s.id)));
        }
    }
    let cells: Vec<(usize, ModelKind)> = (0..subjects.len())
        .flat_map(|s| config.models.iter().map(move |&m| (s, m)))
        .collect();
    let results: Vec<crate::Result<MetricsReport>> = cells
        .par_iter()
        .map(|&(s, kind)| run_cell(&subjects[s], s, kind, config))
        .collect();
    let mut outcome = ExperimentOutcome::default();
    for (&(s, kind), result) in cells.iter().zip(results) {
        match result {
            Ok(r) => outcome.reports.push(r),
            Err(e) => outcome.failures.push(CellFailure {
                subject: subjects[s].id.clone(),
                model: kind.short_name().into(),
                error: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), EvalError> {
    fs::write(&path, contents).map_err(|source| EvalError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

/// Writes `metrics.csv`, `summary.csv`, `undefined.csv`, `failures.txt` and
/// `confusion/<subject>_<model>_{counts,percent}.csv` under `dir`. Returns
/// the written paths in a fixed order.
pub fn write_reports(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let confusion_dir = dir.join("confusion");
    fs::create_dir_all(&confusion_dir).map_err(|source| EvalError::Io {
        path: confusion_dir.clone(),
        source,
    })?;
    let mut written = Vec::new();

    let mut metrics = format!("{METRICS_HEADER}\n");
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut undefined = String::from("subject,model,class,metric\n");
    for r in &outcome.reports {
        metrics.push_str(&r.metrics_rows());
        let m = &r.metrics;
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            r.subject,
            r.model,
            r.seed,
            r.confusion.total(),
            m.overall_accuracy,
            m.macro_avg.precision,
            m.macro_avg.recall,
            m.macro_avg.f1
        )
        .expect("string write");
        for (class, metric) in r.undefined_metrics() {
            writeln!(undefined, "{},{},{class},{metric}", r.subject, r.model)
                .expect("string write");
        }
    }
    write(dir.join("metrics.csv"), &metrics, &mut written)?;
    write(dir.join("summary.csv"), &summary, &mut written)?;
    write(dir.join("undefined.csv"), &undefined, &mut written)?;

    let mut failures = String::new();
    for f in &outcome.failures {
        writeln!(failures, "{} {}: {}", f.subject, f.model, f.error).expect("string write");
    }
    write(dir.join("failures.txt"), &failures, &mut written)?;

    for r in &outcome.reports {
        let stem = format!("{}_{}", r.subject, r.model);
        write(
            confusion_dir.join(format!("{stem}_counts.csv")),
            &r.confusion.counts_csv(&r.class_names),
            &mut written,
        )?;
        write(
            confusion_dir.join(format!("{stem}_percent.csv")),
            &r.confusion.percent_csv(&r.class_names),
            &mut written,
        )?;
    }
    Ok(written)
}

/// Runs every cell, then writes the reports under `out_dir`.
pub fn run_experiment(
    subjects: &[Subject],
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentOutcome, EvalError> {
    let outcome = run_cells(subjects, config)?;
    write_reports(&outcome, out_dir)?;
    Ok(outcome)
}
