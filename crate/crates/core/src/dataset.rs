//! Recording and feature-matrix files, labelled feature datasets, stratified
//! train/test splits and a seeded synthetic sEMG generator.
//!
//! # Recording CSV
//!
//! ```text
//! # sample_rate_hz=2000
//! ch1,ch2,label
//! 0.0123,-0.0040,TE
//! ```
//!
//! One column per channel in millivolts, named `ch1..chC`, followed by an
//! optional `label` column holding a gesture name (or its numeric id). Lines
//! starting with `#` are comments; the `sample_rate_hz` comment is optional
//! when the caller supplies a default rate.
//!
//! # Feature-matrix CSV
//!
//! ```text
//! # classes=TE,ME,FME,FMTE,FMRE,HC
//! ch1_MAV,ch1_VAR,...,ch2_MNP,label
//! ```
//!
//! `17 x C` feature columns in [`crate::features::FEATURE_NAMES`] order per
//! channel, then the gesture name. Values are written in shortest round-trip
//! form, so reloading a written matrix reproduces it exactly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_window_features, feature_column_names, FeatureSpec};
use crate::models::{ModelError, TrainingSet};
use crate::rng::{derive_seed, rng_from_seed};
use crate::signal::{
    preprocess, segment_windows, Biquad, Cascade, FilterSpec, Recording, WindowSpec,
};

/// Gesture names of the six-movement protocol: thumb extension, middle
/// extension, fore-middle extension, fore-middle-thumb extension,
/// fore-middle-ring extension and hand close.
pub const DEFAULT_GESTURES: [&str; 6] = ["TE", "ME", "FME", "FMTE", "FMRE", "HC"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("bad header: {0}")]
    Header(String),
    #[error("recording {recording} has no labels; training data must be labelled")]
    Unlabeled { recording: usize },
    #[error("inconsistent recordings: {0}")]
    Inconsistent(String),
    #[error("cannot split: {0}")]
    Split(String),
    #[error("invalid synthetic spec: {0}")]
    Synth(String),
    #[error("invalid class set: {0}")]
    Classes(String),
    #[error("empty dataset: {0}")]
    Empty(String),
}

fn parse_err(line: u64, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line,
        message: message.into(),
    }
}

/// Ordered, unique gesture names; a class id is its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    names: Vec<String>,
}

impl ClassSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, DatasetError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(DatasetError::Classes("no classes".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains([',', '\n', '\r', '#', '"']) || n != n.trim() {
                return Err(DatasetError::Classes(format!("invalid class name '{n}'")));
            }
            if names[..i].contains(n) {
                return Err(DatasetError::Classes(format!("duplicate class name '{n}'")));
            }
        }
        Ok(Self { names })
    }

    pub fn gestures() -> Self {
        Self::new(DEFAULT_GESTURES).expect("valid defaults")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Resolves a label cell holding either a name or a numeric id.
    pub fn resolve(&self, cell: &str) -> Option<usize> {
        self.id(cell)
            .or_else(|| cell.parse::<usize>().ok().filter(|&i| i < self.len()))
    }
}

/// How to interpret a recording CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSchema {
    pub classes: ClassSet,
    /// Used when the file has no `sample_rate_hz` comment.
    pub default_sample_rate_hz: Option<f64>,
    /// Required channel count, if known.
    pub channel_count: Option<usize>,
}

impl RecordingSchema {
    pub fn new(classes: ClassSet) -> Self {
        Self {
            classes,
            default_sample_rate_hz: None,
            channel_count: None,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| DatasetError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Value of a `# key=value` comment line, if present.
fn header_comment<'a>(text: &'a str, key: &str) -> Option<(u64, &'a str)> {
    text.lines()
        .enumerate()
        .take_while(|(_, l)| l.trim_start().starts_with('#') || l.trim().is_empty())
        .find_map(|(i, l)| {
            let body = l.trim_start().strip_prefix('#')?.trim();
            let (k, v) = body.split_once('=')?;
            (k.trim() == key).then_some((i as u64 + 1, v.trim()))
        })
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("row has {len} fields, expected {expected_len}"),
        _ => e.to_string(),
    };
    parse_err(line, message)
}

fn parse_value(cell: &str, line: u64, column: &str) -> Result<f64, DatasetError> {
    let v: f64 = cell
        .parse()
        .map_err(|_| parse_err(line, format!("column {column}: '{cell}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(
            line,
            format!("column {column}: value is not finite"),
        ));
    }
    Ok(v)
}

/// Parses the recording CSV format described in the module docs.
pub fn parse_recording_csv(
    text: &str,
    schema: &RecordingSchema,
) -> Result<Recording, DatasetError> {
    let sample_rate_hz = match header_comment(text, "sample_rate_hz") {
        Some((line, v)) => v
            .parse::<f64>()
            .ok()
            .filter(|r| r.is_finite() && *r > 0.0)
            .ok_or_else(|| parse_err(line, format!("invalid sample rate '{v}'")))?,
        None => schema.default_sample_rate_hz.ok_or_else(|| {
            DatasetError::Header("no '# sample_rate_hz=' comment and no default rate".into())
        })?,
    };

    let mut reader = csv_reader(text);
    let header = reader.headers().map_err(csv_error)?.clone();
    let mut cols: Vec<&str> = header.iter().collect();
    let has_label = cols.last() == Some(&"label");
    if has_label {
        cols.pop();
    }
    if cols.is_empty() {
        return Err(DatasetError::Header("no channel columns".into()));
    }
    for (i, c) in cols.iter().enumerate() {
        if *c != format!("ch{}", i + 1) {
            return Err(DatasetError::Header(format!(
                "column {} is '{c}', expected 'ch{}'",
                i + 1,
                i + 1
            )));
        }
    }
    let channel_count = cols.len();
    if let Some(expected) = schema.channel_count {
        if expected != channel_count {
            return Err(DatasetError::Header(format!(
                "{channel_count} channels, expected {expected}"
            )));
        }
    }

    let mut channels = vec![Vec::new(); channel_count];
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        for (ch, samples) in channels.iter_mut().enumerate() {
            samples.push(parse_value(&record[ch], line, cols[ch])?);
        }
        if has_label {
            let cell = &record[channel_count];
            let id = schema
                .classes
                .resolve(cell)
                .ok_or_else(|| parse_err(line, format!("unknown gesture label '{cell}'")))?;
            labels.push(id);
        }
    }
    if channels[0].is_empty() {
        return Err(DatasetError::Empty("recording has no samples".into()));
    }
    Recording::new(channels, sample_rate_hz, has_label.then_some(labels))
        .map_err(|e| DatasetError::Inconsistent(e.to_string()))
}

pub fn load_recording_csv(
    path: &Path,
    schema: &RecordingSchema,
) -> Result<Recording, DatasetError> {
    parse_recording_csv(&read_to_string(path)?, schema)
}

pub fn recording_to_csv(rec: &Recording, classes: &ClassSet) -> String {
    let mut out = format!("# sample_rate_hz={}\n", rec.sample_rate_hz());
    let mut header: Vec<String> = (1..=rec.channel_count())
        .map(|c| format!("ch{c}"))
        .collect();
    if rec.labels().is_some() {
        header.push("label".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..rec.len() {
        let mut first = true;
        for ch in rec.channels() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&ch[i].to_string());
        }
        if let Some(labels) = rec.labels() {
            out.push(',');
            out.push_str(classes.name(labels[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_recording_csv(
    path: &Path,
    rec: &Recording,
    classes: &ClassSet,
) -> Result<(), DatasetError> {
    write_file(path, recording_to_csv(rec, classes).as_bytes())
}

/// Labelled feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: ClassSet,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: ClassSet,
    ) -> Result<Self, DatasetError> {
        TrainingSet::new(&rows, &labels, classes.len())
            .map_err(|e| DatasetError::Inconsistent(e.to_string()))?;
        if let Some(r) = rows.first() {
            if r.len() != feature_names.len() {
                return Err(DatasetError::Inconsistent(format!(
                    "{} feature names for {}-wide rows",
                    feature_names.len(),
                    r.len()
                )));
            }
        }
        Ok(Self {
            feature_names,
            rows,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn training_set(&self) -> Result<TrainingSet<'_>, ModelError> {
        TrainingSet::new(&self.rows, &self.labels, self.class_count())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Rows whose label is in `classes`, labels unchanged.
    pub fn filter_classes(&self, classes: &[usize]) -> Dataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| classes.contains(&self.labels[i]))
            .collect();
        self.subset(&keep)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# classes={}\n", self.classes.names().join(","));
        out.push_str(&self.feature_names.join(","));
        out.push_str(",label\n");
        for (row, &l) in self.rows.iter().zip(&self.labels) {
            for v in row {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(self.classes.name(l));
            out.push('\n');
        }
        out
    }

    /// Parses the feature-matrix CSV format described in the module docs.
    /// Files without a `classes` comment use `fallback` as the class set.
    pub fn from_csv(text: &str, fallback: Option<&ClassSet>) -> Result<Self, DatasetError> {
        let classes = match header_comment(text, "classes") {
            Some((_, v)) => ClassSet::new(v.split(',').map(str::trim))?,
            None => fallback
                .cloned()
                .ok_or_else(|| DatasetError::Header("no '# classes=' comment".into()))?,
        };
        let mut reader = csv_reader(text);
        let header = reader.headers().map_err(csv_error)?.clone();
        let mut names: Vec<String> = header.iter().map(String::from).collect();
        if names.pop().as_deref() != Some("label") {
            return Err(DatasetError::Header("last column must be 'label'".into()));
        }
        if names.is_empty() {
            return Err(DatasetError::Header("no feature columns".into()));
        }
        let width = names.len();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line());
            let row = (0..width)
                .map(|j| parse_value(&record[j], line, &names[j]))
                .collect::<Result<Vec<_>, _>>()?;
            let cell = &record[width];
            let label = classes
                .resolve(cell)
                .ok_or_else(|| parse_err(line, format!("unknown gesture label '{cell}'")))?;
            rows.push(row);
            labels.push(label);
        }
        Dataset::new(names, rows, labels, classes)
    }

    pub fn load_csv(path: &Path, fallback: Option<&ClassSet>) -> Result<Self, DatasetError> {
        Self::from_csv(&read_to_string(path)?, fallback)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        write_file(path, self.to_csv().as_bytes())
    }
}

/// Filters, windows and featurizes labelled recordings, in that order.
pub fn build_dataset(
    recordings: &[Recording],
    filter: &FilterSpec,
    window: &WindowSpec,
    features: &FeatureSpec,
    classes: &ClassSet,
) -> crate::Result<Dataset> {
    let first = recordings
        .first()
        .ok_or_else(|| DatasetError::Empty("no recordings".into()))?;
    features.validate()?;
    for (i, rec) in recordings.iter().enumerate() {
        if rec.sample_rate_hz() != first.sample_rate_hz()
            || rec.channel_count() != first.channel_count()
        {
            return Err(DatasetError::Inconsistent(format!(
                "recording {i} has {} channels at {} Hz, recording 0 has {} at {} Hz",
                rec.channel_count(),
                rec.sample_rate_hz(),
                first.channel_count(),
                first.sample_rate_hz()
            ))
            .into());
        }
        let labels = rec
            .labels()
            .ok_or(DatasetError::Unlabeled { recording: i })?;
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(DatasetError::Inconsistent(format!(
                "recording {i} uses class id {bad} but only {} classes exist",
                classes.len()
            ))
            .into());
        }
    }

    type Rows = Vec<(Vec<f64>, usize)>;
    let per_recording: Vec<crate::Result<Rows>> = recordings
        .par_iter()
        .map(|rec| {
            let filtered = preprocess(rec, filter)?;
            segment_windows(&filtered, window)?
                .iter()
                .map(|w| {
                    let fv = extract_window_features(w, rec.sample_rate_hz(), features)?;
                    Ok((fv.values, fv.label.expect("labelled recording")))
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for result in per_recording {
        for (row, label) in result? {
            rows.push(row);
            labels.push(label);
        }
    }
    Ok(Dataset::new(
        feature_column_names(first.channel_count()),
        rows,
        labels,
        classes.clone(),
    )?)
}

/// Round half up.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Per-class shuffled split. Class `c` with `n_c` rows contributes
/// `round_half_up(train_fraction * n_c)` rows to training, clamped to
/// `1..=n_c - 1`; the rest go to test. Both index lists are ascending.
pub fn stratified_split_indices(
    labels: &[usize],
    class_count: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Split(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let mut by_class = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| DatasetError::Split(format!("label {l} out of range")))?
            .push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(DatasetError::Split(format!(
                "class {c} has {} rows, at least 2 required",
                idx.len()
            )));
        }
        let n = idx.len();
        let k = round_half_up(train_fraction * n as f64).clamp(1, n - 1);
        idx.shuffle(&mut rng_from_seed(derive_seed(seed, c as u64)));
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    let (train, test) =
        stratified_split_indices(&ds.labels, ds.class_count(), train_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// One synthetic gesture: band-limited noise around `centroid_hz` with a
/// slowly modulated amplitude and fixed per-channel gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub name: String,
    pub centroid_hz: f64,
    pub bandwidth_hz: f64,
    /// Mean envelope amplitude (RMS, millivolts).
    pub amplitude_mv: f64,
    /// Envelope is `amplitude * (1 + depth * sin(2 pi f t + phase))`.
    pub modulation_depth: f64,
    pub modulation_hz: f64,
    /// One gain per channel.
    pub channel_gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub repetitions: usize,
    /// Standard deviation of additive white noise, millivolts.
    pub noise_floor_mv: f64,
    /// Each recording scales each channel by `exp(jitter * z)`, `z ~ N(0, 1)`.
    #[serde(default)]
    pub amplitude_jitter: f64,
    pub classes: Vec<SynthClass>,
}

impl SynthSpec {
    /// Six two-channel gestures at 2000 Hz.
    pub fn six_gestures(seed: u64) -> Self {
        let table = [
            (100.0, 80.0, 0.40, [1.0, 0.8]),
            (112.0, 80.0, 0.40, [0.8, 1.0]),
            (124.0, 80.0, 0.40, [1.0, 0.9]),
            (136.0, 80.0, 0.40, [0.9, 1.0]),
            (148.0, 80.0, 0.40, [1.0, 0.8]),
            (160.0, 80.0, 0.40, [0.8, 1.0]),
        ];
        let classes = DEFAULT_GESTURES
            .iter()
            .zip(table)
            .enumerate()
            .map(|(i, (name, (centroid, bw, amp, gains)))| SynthClass {
                name: (*name).into(),
                centroid_hz: centroid,
                bandwidth_hz: bw,
                amplitude_mv: amp,
                modulation_depth: 0.3,
                modulation_hz: 1.0 + 0.3 * i as f64,
                channel_gains: gains.to_vec(),
            })
            .collect();
        Self {
            seed,
            sample_rate_hz: 2000.0,
            duration_s: 6.0,
            repetitions: 6,
            noise_floor_mv: 0.01,
            amplitude_jitter: 0.5,
            classes,
        }
    }

    pub fn class_set(&self) -> Result<ClassSet, DatasetError> {
        ClassSet::new(self.classes.iter().map(|c| c.name.clone()))
    }

    pub fn channel_count(&self) -> usize {
        self.classes.first().map_or(0, |c| c.channel_gains.len())
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Synth(m));
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!("sample rate {}", self.sample_rate_hz));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration {}", self.duration_s));
        }
        if (self.duration_s * self.sample_rate_hz).round() < 1.0 {
            return bad("duration shorter than one sample".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if !(self.noise_floor_mv.is_finite() && self.noise_floor_mv >= 0.0) {
            return bad(format!("noise floor {}", self.noise_floor_mv));
        }
        if !(self.amplitude_jitter.is_finite() && self.amplitude_jitter >= 0.0) {
            return bad(format!("amplitude jitter {}", self.amplitude_jitter));
        }
        self.class_set()?;
        let nyquist = self.sample_rate_hz / 2.0;
        let channels = self.channel_count();
        if channels == 0 {
            return bad("classes need at least one channel gain".into());
        }
        for c in &self.classes {
            if !(c.centroid_hz > 0.0 && c.centroid_hz < nyquist) {
                return bad(format!(
                    "class {} centroid {} Hz outside (0, {nyquist}) Hz",
                    c.name, c.centroid_hz
                ));
            }
            if !(c.bandwidth_hz.is_finite() && c.bandwidth_hz > 0.0) {
                return bad(format!("class {} bandwidth {}", c.name, c.bandwidth_hz));
            }
            if !(c.amplitude_mv.is_finite() && c.amplitude_mv >= 0.0)
                || !(0.0..1.0).contains(&c.modulation_depth)
                || !c.modulation_hz.is_finite()
            {
                return bad(format!("class {} envelope is invalid", c.name));
            }
            if c.channel_gains.len() != channels || c.channel_gains.iter().any(|g| !g.is_finite()) {
                return bad(format!(
                    "class {} needs {channels} finite channel gains",
                    c.name
                ));
            }
        }
        Ok(())
    }
}

/// A generated recording and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecording {
    pub class: usize,
    pub repetition: usize,
    pub recording: Recording,
}

fn synth_one(spec: &SynthSpec, class: usize, repetition: usize) -> SynthRecording {
    let c = &spec.classes[class];
    let fs = spec.sample_rate_hz;
    let n = (spec.duration_s * fs).round() as usize;
    let mut rng = rng_from_seed(derive_seed(
        derive_seed(spec.seed, class as u64),
        repetition as u64,
    ));
    let q = (c.centroid_hz / c.bandwidth_hz).max(0.1);
    let shaper = Cascade {
        sections: vec![Biquad::bandpass(c.centroid_hz, q, fs); 2],
    };
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    let envelope: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            c.amplitude_mv
                * (1.0
                    + c.modulation_depth
                        * (std::f64::consts::TAU * c.modulation_hz * t + phase).sin())
        })
        .collect();
    let channels = c
        .channel_gains
        .iter()
        .map(|gain| {
            let z: f64 = rng.sample(StandardNormal);
            let gain = gain * (spec.amplitude_jitter * z).exp();
            let white: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut band = shaper.filter(&white);
            let rms = (band.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            let norm = if rms > 0.0 { 1.0 / rms } else { 0.0 };
            for (i, v) in band.iter_mut().enumerate() {
                *v *= norm * envelope[i] * gain;
                if spec.noise_floor_mv > 0.0 {
                    *v += spec.noise_floor_mv * rng.sample::<f64, _>(StandardNormal);
                }
            }
            band
        })
        .collect();
    SynthRecording {
        class,
        repetition,
        recording: Recording::with_constant_label(channels, fs, class)
            .expect("valid synthetic shape"),
    }
}

/// One labelled recording per class and repetition, ordered by class then
/// repetition. Each recording draws from its own seed derived from
/// `spec.seed`, so the output does not depend on thread count.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<SynthRecording>, DatasetError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.classes.len())
        .flat_map(|c| (0..spec.repetitions).map(move |r| (c, r)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(c, r)| synth_one(spec, c, r))
        .collect())
}

/// Writes generated recordings as `<class>_rep<k>.csv` under `dir` and
/// returns the paths in generation order.
pub fn write_synthetic(
    dir: &Path,
    spec: &SynthSpec,
    recordings: &[SynthRecording],
) -> Result<Vec<PathBuf>, DatasetError> {
    let classes = spec.class_set()?;
    recordings
        .iter()
        .map(|r| {
            let path = dir.join(format!(
                "{}_rep{:02}.csv",
                classes.name(r.class),
                r.repetition + 1
            ));
            let mut buf = Vec::new();
            buf.write_all(recording_to_csv(&r.recording, &classes).as_bytes())
                .expect("in-memory write");
            write_file(&path, &buf)?;
            Ok(path)
        })
        .collect()
}
