//! Flat `key = value` pipeline configuration (TOML syntax, no tables).
//!
//! Every key is optional except `seed`, which may instead come from the
//! `--seed` flag. Unknown keys are rejected so typos do not pass silently.

use std::path::{Path, PathBuf};

use semg_meet::dataset::{ClassSet, SynthSpec, DEFAULT_GESTURES};
use semg_meet::features::{FeatureSpec, ZeroPowerPolicy};
use semg_meet::models::{Hyperparameters, LogisticConfig, ModelKind};
use semg_meet::signal::{FilterSpec, WindowSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Generate one synthetic six-gesture dataset per subject.
    Synthetic,
    /// Read `<recordings_dir>/<subject>/*.csv`.
    Recordings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub source: DataSource,
    pub subjects: Vec<String>,
    pub recordings_dir: Option<PathBuf>,
    pub classes: Vec<String>,
    pub sample_rate_hz: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub models: Vec<String>,
    pub train_fraction: f64,

    pub notch_hz: f64,
    pub notch_q: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub band_order: usize,
    pub zero_phase: bool,

    pub window_ms: f64,
    pub overlap: f64,

    pub zc_threshold: f64,
    pub wamp_threshold: f64,
    pub myop_threshold: f64,
    pub fr_low_band_hz: [f64; 2],
    pub fr_high_band_hz: [f64; 2],
    pub zero_power: ZeroPowerPolicy,

    pub trees: usize,
    /// 0 means `ceil(sqrt(feature_count))`.
    pub attrs_per_node: usize,
    pub min_split: usize,
    pub adaboost_rounds: usize,
    pub knn_k: usize,
    pub lr_learning_rate: f64,
    pub lr_epochs: usize,
    pub lr_l2: f64,

    pub synth_duration_s: f64,
    pub synth_repetitions: usize,
    pub synth_noise_floor_mv: f64,
    pub synth_amplitude_jitter: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let filter = FilterSpec::default();
        let window = WindowSpec::default();
        let features = FeatureSpec::default();
        let hyper = Hyperparameters::default();
        let synth = SynthSpec::six_gestures(0);
        Self {
            seed: None,
            source: DataSource::Synthetic,
            subjects: vec!["S1".into()],
            recordings_dir: None,
            classes: DEFAULT_GESTURES.iter().map(|s| s.to_string()).collect(),
            sample_rate_hz: None,
            output_dir: None,
            models: ModelKind::ALL
                .iter()
                .map(|k| k.short_name().into())
                .collect(),
            train_fraction: 0.7,
            notch_hz: filter.notch_hz,
            notch_q: filter.notch_q,
            band_low_hz: filter.band_low_hz,
            band_high_hz: filter.band_high_hz,
            band_order: filter.band_order,
            zero_phase: filter.zero_phase,
            window_ms: window.length_ms,
            overlap: window.overlap_fraction,
            zc_threshold: features.zc_threshold,
            wamp_threshold: features.wamp_threshold,
            myop_threshold: features.myop_threshold,
            fr_low_band_hz: [features.fr_low_band_hz.0, features.fr_low_band_hz.1],
            fr_high_band_hz: [features.fr_high_band_hz.0, features.fr_high_band_hz.1],
            zero_power: features.zero_power,
            trees: hyper.trees,
            attrs_per_node: 0,
            min_split: hyper.min_split,
            adaboost_rounds: hyper.adaboost_rounds,
            knn_k: hyper.knn_k,
            lr_learning_rate: hyper.logistic.learning_rate,
            lr_epochs: hyper.logistic.epochs,
            lr_l2: hyper.logistic.l2,
            synth_duration_s: synth.duration_s,
            synth_repetitions: synth.repetitions,
            synth_noise_floor_mv: synth.noise_floor_mv,
            synth_amplitude_jitter: synth.amplitude_jitter,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: PipelineConfig = toml::from_str(text)
            .map_err(|e| CliError::Usage(format!("config: {}", one_line(&e.to_string()))))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; a relative `recordings_dir` is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = cfg.recordings_dir.as_mut() {
            if dir.is_relative() {
                if let Some(parent) = path.parent() {
                    *dir = parent.join(&*dir);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model_kinds()?;
        self.class_set()?;
        if self.subjects.is_empty() {
            return Err(CliError::Usage("config: subjects must not be empty".into()));
        }
        if self.source == DataSource::Recordings && self.recordings_dir.is_none() {
            return Err(CliError::Usage(
                "config: source = \"recordings\" needs recordings_dir".into(),
            ));
        }
        self.feature_spec()
            .validate()
            .map_err(|e| CliError::Usage(format!("config: {e}")))?;
        Ok(())
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.seed).ok_or_else(|| {
            CliError::Usage("a seed is required: pass --seed or set seed in the config".into())
        })
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>, CliError> {
        if self.models.is_empty() {
            return Err(CliError::Usage("config: models must not be empty".into()));
        }
        self.models
            .iter()
            .map(|m| {
                m.parse()
                    .map_err(|e| CliError::Usage(format!("config: {e}")))
            })
            .collect()
    }

    pub fn class_set(&self) -> Result<ClassSet, CliError> {
        ClassSet::new(self.classes.iter().cloned())
            .map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn filter_spec(&self) -> FilterSpec {
        FilterSpec {
            notch_hz: self.notch_hz,
            notch_q: self.notch_q,
            band_low_hz: self.band_low_hz,
            band_high_hz: self.band_high_hz,
            band_order: self.band_order,
            zero_phase: self.zero_phase,
        }
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            length_ms: self.window_ms,
            overlap_fraction: self.overlap,
        }
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        FeatureSpec {
            zc_threshold: self.zc_threshold,
            wamp_threshold: self.wamp_threshold,
            myop_threshold: self.myop_threshold,
            fr_low_band_hz: (self.fr_low_band_hz[0], self.fr_low_band_hz[1]),
            fr_high_band_hz: (self.fr_high_band_hz[0], self.fr_high_band_hz[1]),
            zero_power: self.zero_power,
        }
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            trees: self.trees,
            attrs_per_node: (self.attrs_per_node > 0).then_some(self.attrs_per_node),
            min_split: self.min_split,
            adaboost_rounds: self.adaboost_rounds,
            knn_k: self.knn_k,
            logistic: LogisticConfig {
                learning_rate: self.lr_learning_rate,
                epochs: self.lr_epochs,
                l2: self.lr_l2,
            },
        }
    }

    pub fn synth_spec(&self, seed: u64) -> SynthSpec {
        let mut spec = SynthSpec::six_gestures(seed);
        spec.duration_s = self.synth_duration_s;
        spec.repetitions = self.synth_repetitions;
        spec.noise_floor_mv = self.synth_noise_floor_mv;
        spec.amplitude_jitter = self.synth_amplitude_jitter;
        spec
    }
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
