//! Handcrafted sEMG features.
//!
//! Every channel of a window yields 17 values in the fixed order of
//! [`FEATURE_NAMES`]; multichannel windows concatenate the per-channel blocks
//! in channel order. For a window `x_1..x_n` with mean `mu`:
//!
//! | name  | definition |
//! |-------|------------|
//! | MAV   | `sum |x_i| / n` |
//! | VAR   | `sum (x_i - mu)^2 / (n - 1)` |
//! | DASDV | `sqrt(sum (x_{i+1} - x_i)^2 / (n - 1))` |
//! | WL    | `sum |x_{i+1} - x_i|` |
//! | iEMG  | `sum |x_i|` |
//! | LOG   | `exp(sum ln(|x_i| + 1e-12) / n)` |
//! | RMS   | `sqrt(sum x_i^2 / n)` |
//! | AAC   | `WL / (n - 1)` |
//! | ZC    | count of `x_i * x_{i+1} < 0` with `|x_{i+1} - x_i| > zc_threshold` |
//! | WAMP  | count of `|x_{i+1} - x_i| > wamp_threshold` |
//! | MYOP  | fraction of `|x_i| > myop_threshold` |
//!
//! The spectral features use the one-sided periodogram of the mean-removed,
//! unwindowed segment. With DFT coefficients `X_k`, bin `k` at `k * fs / n`
//! holds `P_k = c_k |X_k|^2 / n` where `c_k = 1` for DC and (even `n`) the
//! Nyquist bin and `c_k = 2` otherwise. This makes `sum P_k` equal the
//! time-domain energy `sum (x_i - mu)^2` exactly.
//!
//! | name | definition |
//! |------|------------|
//! | TP   | `sum P_k` |
//! | FR   | power in `fr_low_band_hz` over power in `fr_high_band_hz`, bands half-open `[lo, hi)` |
//! | MDF  | smallest `f_k` whose cumulative power reaches `TP / 2` |
//! | PKF  | `f_k` of the largest `P_k`, ties to the lowest frequency |
//! | MNF  | `sum f_k P_k / sum P_k` |
//! | MNP  | `TP / bin_count` with `bin_count = n / 2 + 1` |

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Window;

pub const TIME_FEATURE_COUNT: usize = 11;
pub const FREQUENCY_FEATURE_COUNT: usize = 6;
pub const FEATURES_PER_CHANNEL: usize = TIME_FEATURE_COUNT + FREQUENCY_FEATURE_COUNT;

/// Column order of one channel's feature block.
pub const FEATURE_NAMES: [&str; FEATURES_PER_CHANNEL] = [
    "MAV", "VAR", "DASDV", "WL", "iEMG", "LOG", "RMS", "AAC", "ZC", "WAMP", "MYOP", "TP", "FR",
    "MDF", "PKF", "MNF", "MNP",
];

pub const LOG_EPSILON: f64 = 1e-12;

/// Minimum window length accepted by the spectral features.
pub const MIN_SPECTRAL_WINDOW: usize = 8;

/// Column names `ch<k>_<FEATURE>` for a `channel_count`-channel feature vector.
pub fn feature_column_names(channel_count: usize) -> Vec<String> {
    (1..=channel_count)
        .flat_map(|ch| FEATURE_NAMES.iter().map(move |f| format!("ch{ch}_{f}")))
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("window has {len} samples, at least {min} required")]
    WindowTooShort { len: usize, min: usize },
    #[error("spectral features undefined: {0}")]
    ZeroPower(&'static str),
    #[error("channel {channel} has {found} samples, expected {expected}")]
    MisalignedChannels {
        channel: usize,
        expected: usize,
        found: usize,
    },
    #[error("window has no channels")]
    NoChannels,
    #[error("invalid feature configuration: {0}")]
    Config(String),
    #[error("feature {name} is not finite")]
    NonFinite { name: &'static str },
}

/// What to return when a spectral ratio has a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPowerPolicy {
    #[default]
    Error,
    /// Report undefined spectral features as 0.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub zc_threshold: f64,
    pub wamp_threshold: f64,
    pub myop_threshold: f64,
    pub fr_low_band_hz: (f64, f64),
    pub fr_high_band_hz: (f64, f64),
    pub zero_power: ZeroPowerPolicy,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            zc_threshold: 0.0,
            wamp_threshold: 0.05,
            myop_threshold: 0.016,
            fr_low_band_hz: (10.0, 100.0),
            fr_high_band_hz: (100.0, 500.0),
            zero_power: ZeroPowerPolicy::Error,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<(), FeatureError> {
        for (name, t) in [
            ("zc_threshold", self.zc_threshold),
            ("wamp_threshold", self.wamp_threshold),
            ("myop_threshold", self.myop_threshold),
        ] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(FeatureError::Config(format!(
                    "{name} must be >= 0, got {t}"
                )));
            }
        }
        let (l0, l1) = self.fr_low_band_hz;
        let (h0, h1) = self.fr_high_band_hz;
        if !(0.0 <= l0 && l0 < l1 && l1 <= h0 && h0 < h1) {
            return Err(FeatureError::Config(format!(
                "frequency-ratio bands must be ordered and disjoint, got [{l0}, {l1}) and [{h0}, {h1})"
            )));
        }
        Ok(())
    }
}

/// Returns `[MAV, VAR, DASDV, WL, iEMG, LOG, RMS, AAC, ZC, WAMP, MYOP]`.
pub fn extract_time_features(
    window: &[f64],
    spec: &FeatureSpec,
) -> Result<[f64; TIME_FEATURE_COUNT], FeatureError> {
    let n = window.len();
    if n < 2 {
        return Err(FeatureError::WindowTooShort { len: n, min: 2 });
    }
    let nf = n as f64;
    let mean = window.iter().sum::<f64>() / nf;

    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut dev_sq = 0.0;
    let mut log_sum = 0.0;
    let mut myop = 0usize;
    for &x in window {
        abs_sum += x.abs();
        sq_sum += x * x;
        dev_sq += (x - mean) * (x - mean);
        log_sum += (x.abs() + LOG_EPSILON).ln();
        if x.abs() > spec.myop_threshold {
            myop += 1;
        }
    }

    let mut wl = 0.0;
    let mut diff_sq = 0.0;
    let mut zc = 0usize;
    let mut wamp = 0usize;
    for pair in window.windows(2) {
        let d = pair[1] - pair[0];
        wl += d.abs();
        diff_sq += d * d;
        if pair[0] * pair[1] < 0.0 && d.abs() > spec.zc_threshold {
            zc += 1;
        }
        if d.abs() > spec.wamp_threshold {
            wamp += 1;
        }
    }

    Ok([
        abs_sum / nf,
        dev_sq / (nf - 1.0),
        (diff_sq / (nf - 1.0)).sqrt(),
        wl,
        abs_sum,
        (log_sum / nf).exp(),
        (sq_sum / nf).sqrt(),
        wl / (nf - 1.0),
        zc as f64,
        wamp as f64,
        myop as f64 / nf,
    ])
}

/// One-sided periodogram of the mean-removed window, normalized so the bins
/// sum to the window's energy about its mean. Returns `(frequencies, power)`.
pub fn power_spectrum(window: &[f64], sample_rate_hz: f64) -> (Vec<f64>, Vec<f64>) {
    let n = window.len();
    let mean = window.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = window
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let mut freqs = Vec::with_capacity(bins);
    let mut power = Vec::with_capacity(bins);
    for (k, c) in buf.iter().take(bins).enumerate() {
        let edge = k == 0 || (n % 2 == 0 && k == n / 2);
        let scale = if edge { 1.0 } else { 2.0 };
        freqs.push(k as f64 * sample_rate_hz / n as f64);
        power.push(scale * c.norm_sqr() / n as f64);
    }
    (freqs, power)
}

/// Returns `[TP, FR, MDF, PKF, MNF, MNP]`.
pub fn extract_frequency_features(
    window: &[f64],
    sample_rate_hz: f64,
    spec: &FeatureSpec,
) -> Result<[f64; FREQUENCY_FEATURE_COUNT], FeatureError> {
    if window.len() < MIN_SPECTRAL_WINDOW {
        return Err(FeatureError::WindowTooShort {
            len: window.len(),
            min: MIN_SPECTRAL_WINDOW,
        });
    }
    let (freqs, power) = power_spectrum(window, sample_rate_hz);
    spectral_features(&freqs, &power, spec)
}

/// Spectral features from an already computed one-sided spectrum.
pub fn spectral_features(
    freqs: &[f64],
    power: &[f64],
    spec: &FeatureSpec,
) -> Result<[f64; FREQUENCY_FEATURE_COUNT], FeatureError> {
    let undefined = |what: &'static str| match spec.zero_power {
        ZeroPowerPolicy::Error => Err(FeatureError::ZeroPower(what)),
        ZeroPowerPolicy::Zero => Ok(0.0),
    };

    let tp: f64 = power.iter().sum();
    let mnp = tp / power.len() as f64;

    let band = |(lo, hi): (f64, f64)| -> f64 {
        freqs
            .iter()
            .zip(power)
            .filter(|(&f, _)| f >= lo && f < hi)
            .map(|(_, &p)| p)
            .sum()
    };
    let high = band(spec.fr_high_band_hz);
    let fr = if high > 0.0 {
        band(spec.fr_low_band_hz) / high
    } else {
        undefined("no power in the frequency-ratio high band")?
    };

    let (mdf, pkf, mnf) = if tp > 0.0 {
        let half = tp / 2.0;
        let mut acc = 0.0;
        let mut mdf = freqs[freqs.len() - 1];
        for (&f, &p) in freqs.iter().zip(power) {
            acc += p;
            if acc >= half {
                mdf = f;
                break;
            }
        }
        let mut peak = 0;
        for (k, &p) in power.iter().enumerate() {
            if p > power[peak] {
                peak = k;
            }
        }
        let mnf = freqs.iter().zip(power).map(|(f, p)| f * p).sum::<f64>() / tp;
        (mdf, freqs[peak], mnf)
    } else {
        let u = undefined("window has zero total power")?;
        (u, u, u)
    };

    Ok([tp, fr, mdf, pkf, mnf, mnp])
}

/// All 17 features of a single channel.
pub fn extract_channel_features(
    samples: &[f64],
    sample_rate_hz: f64,
    spec: &FeatureSpec,
) -> Result<[f64; FEATURES_PER_CHANNEL], FeatureError> {
    let time = extract_time_features(samples, spec)?;
    let freq = extract_frequency_features(samples, sample_rate_hz, spec)?;
    let mut out = [0.0; FEATURES_PER_CHANNEL];
    out[..TIME_FEATURE_COUNT].copy_from_slice(&time);
    out[TIME_FEATURE_COUNT..].copy_from_slice(&freq);
    for (v, name) in out.iter().zip(FEATURE_NAMES) {
        if !v.is_finite() {
            return Err(FeatureError::NonFinite { name });
        }
    }
    Ok(out)
}

/// Labelled feature row of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<usize>,
}

/// Per-channel features concatenated in channel order.
pub fn extract_window_features(
    window: &Window<'_>,
    sample_rate_hz: f64,
    spec: &FeatureSpec,
) -> Result<FeatureVector, FeatureError> {
    let expected = window
        .channels
        .first()
        .ok_or(FeatureError::NoChannels)?
        .len();
    let mut values = Vec::with_capacity(FEATURES_PER_CHANNEL * window.channels.len());
    for (channel, samples) in window.channels.iter().enumerate() {
        if samples.len() != expected {
            return Err(FeatureError::MisalignedChannels {
                channel,
                expected,
                found: samples.len(),
            });
        }
        values.extend(extract_channel_features(samples, sample_rate_hz, spec)?);
    }
    Ok(FeatureVector {
        values,
        label: window.label,
    })
}
