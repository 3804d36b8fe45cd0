//! Preprocessing of raw multichannel sEMG: power-line notch, Butterworth
//! band-pass and segmentation into overlapping analysis windows.
//!
//! All filters are cascades of second-order sections evaluated in
//! transposed direct form II. Filtering is causal by default; setting
//! [`FilterSpec::zero_phase`] runs each cascade forward and then backward.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("recording has no channels")]
    NoChannels,
    #[error("recording channels are empty")]
    EmptyChannels,
    #[error("channel {channel} has {found} samples, expected {expected}")]
    RaggedChannels {
        channel: usize,
        expected: usize,
        found: usize,
    },
    #[error("label track has {found} entries, expected {expected}")]
    LabelLength { expected: usize, found: usize },
    #[error("sample rate must be a positive finite number, got {0}")]
    InvalidSampleRate(f64),
    #[error("invalid filter configuration: {0}")]
    Config(String),
    #[error("invalid window configuration: {0}")]
    WindowConfig(String),
    #[error(
        "recording has {len} samples but one window needs {window_samples} \
         ({length_ms} ms at {sample_rate_hz} Hz)"
    )]
    TooShort {
        len: usize,
        window_samples: usize,
        length_ms: f64,
        sample_rate_hz: f64,
    },
}

/// Multichannel recording in millivolts with an optional per-sample
/// gesture label track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    channels: Vec<Vec<f64>>,
    sample_rate_hz: f64,
    labels: Option<Vec<usize>>,
}

impl Recording {
    pub fn new(
        channels: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate_hz));
        }
        let first = channels.first().ok_or(SignalError::NoChannels)?;
        let expected = first.len();
        if expected == 0 {
            return Err(SignalError::EmptyChannels);
        }
        for (channel, samples) in channels.iter().enumerate() {
            if samples.len() != expected {
                return Err(SignalError::RaggedChannels {
                    channel,
                    expected,
                    found: samples.len(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != expected {
                return Err(SignalError::LabelLength {
                    expected,
                    found: labels.len(),
                });
            }
        }
        Ok(Self {
            channels,
            sample_rate_hz,
            labels,
        })
    }

    /// Builds a recording whose every sample carries `label`.
    pub fn with_constant_label(
        channels: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        label: usize,
    ) -> Result<Self, SignalError> {
        let len = channels.first().map_or(0, Vec::len);
        Self::new(channels, sample_rate_hz, Some(vec![label; len]))
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    fn map_channels(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Recording {
        Recording {
            channels: self.channels.iter().map(|c| f(c)).collect(),
            sample_rate_hz: self.sample_rate_hz,
            labels: self.labels.clone(),
        }
    }
}

/// Notch and band-pass parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub notch_hz: f64,
    pub notch_q: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Butterworth order of each band edge. The band-pass is a high-pass of
    /// this order cascaded with a low-pass of this order, so the default of 2
    /// yields a fourth-order band-pass.
    pub band_order: usize,
    /// Run forward-backward instead of a single causal pass.
    pub zero_phase: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            notch_hz: 50.0,
            notch_q: 30.0,
            band_low_hz: 10.0,
            band_high_hz: 500.0,
            band_order: 2,
            zero_phase: false,
        }
    }
}

impl FilterSpec {
    fn check_notch(&self, sample_rate_hz: f64) -> Result<(), SignalError> {
        let nyquist = sample_rate_hz / 2.0;
        if !(self.notch_hz > 0.0 && self.notch_hz < nyquist) {
            return Err(SignalError::Config(format!(
                "notch frequency {} Hz must lie in (0, {nyquist}) Hz",
                self.notch_hz
            )));
        }
        if !(self.notch_q.is_finite() && self.notch_q > 0.0) {
            return Err(SignalError::Config(format!(
                "notch quality factor must be positive, got {}",
                self.notch_q
            )));
        }
        Ok(())
    }

    fn check_band(&self, sample_rate_hz: f64) -> Result<(), SignalError> {
        let nyquist = sample_rate_hz / 2.0;
        if !(self.band_low_hz > 0.0
            && self.band_low_hz < self.band_high_hz
            && self.band_high_hz < nyquist)
        {
            return Err(SignalError::Config(format!(
                "band edges must satisfy 0 < {} < {} < {nyquist} Hz",
                self.band_low_hz, self.band_high_hz
            )));
        }
        if self.band_order == 0 {
            return Err(SignalError::Config("band order must be at least 1".into()));
        }
        Ok(())
    }
}

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn normalized(b: [f64; 3], a: [f64; 3]) -> Self {
        Self {
            b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]],
            a: [a[1] / a[0], a[2] / a[0]],
        }
    }

    /// Second-order notch centred on `freq_hz`.
    pub fn notch(freq_hz: f64, q: f64, sample_rate_hz: f64) -> Self {
        let w0 = 2.0 * PI * freq_hz / sample_rate_hz;
        let alpha = w0.sin() / (2.0 * q);
        let c = w0.cos();
        Self::normalized([1.0, -2.0 * c, 1.0], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    pub fn lowpass(cutoff_hz: f64, q: f64, sample_rate_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate_hz;
        let alpha = w0.sin() / (2.0 * q);
        let c = w0.cos();
        let k = (1.0 - c) / 2.0;
        Self::normalized([k, 1.0 - c, k], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    pub fn highpass(cutoff_hz: f64, q: f64, sample_rate_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate_hz;
        let alpha = w0.sin() / (2.0 * q);
        let c = w0.cos();
        let k = (1.0 + c) / 2.0;
        Self::normalized([k, -(1.0 + c), k], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    /// Constant 0 dB peak gain band-pass centred on `centre_hz`.
    pub fn bandpass(centre_hz: f64, q: f64, sample_rate_hz: f64) -> Self {
        let w0 = 2.0 * PI * centre_hz / sample_rate_hz;
        let alpha = w0.sin() / (2.0 * q);
        let c = w0.cos();
        Self::normalized([alpha, 0.0, -alpha], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    /// First-order bilinear sections stored with a zero second tap.
    fn first_order_lowpass(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        Self::normalized([k, k, 0.0], [k + 1.0, k - 1.0, 0.0])
    }

    fn first_order_highpass(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        Self::normalized([1.0, -1.0, 0.0], [k + 1.0, k - 1.0, 0.0])
    }

    /// Magnitude response at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let (re_z1, im_z1) = (w.cos(), -w.sin());
        let (re_z2, im_z2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num_re = self.b[0] + self.b[1] * re_z1 + self.b[2] * re_z2;
        let num_im = self.b[1] * im_z1 + self.b[2] * im_z2;
        let den_re = 1.0 + self.a[0] * re_z1 + self.a[1] * re_z2;
        let den_im = self.a[0] * im_z1 + self.a[1] * im_z2;
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cascade {
    pub sections: Vec<Biquad>,
}

impl Cascade {
    /// Digital Butterworth low-pass of arbitrary order via bilinear transform.
    pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let sections = butterworth_qs(order)
            .into_iter()
            .map(|q| match q {
                Some(q) => Biquad::lowpass(cutoff_hz, q, sample_rate_hz),
                None => Biquad::first_order_lowpass(cutoff_hz, sample_rate_hz),
            })
            .collect();
        Self { sections }
    }

    pub fn butterworth_highpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let sections = butterworth_qs(order)
            .into_iter()
            .map(|q| match q {
                Some(q) => Biquad::highpass(cutoff_hz, q, sample_rate_hz),
                None => Biquad::first_order_highpass(cutoff_hz, sample_rate_hz),
            })
            .collect();
        Self { sections }
    }

    pub fn then(mut self, other: Cascade) -> Self {
        self.sections.extend(other.sections);
        self
    }

    pub fn gain_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        self.sections
            .iter()
            .map(|s| s.gain_at(freq_hz, sample_rate_hz))
            .product()
    }

    /// Causal filtering from zero initial state.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in out.iter_mut() {
                let xin = *x;
                let y = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[0] * y + z2;
                z2 = s.b[2] * xin - s.a[1] * y;
                *x = y;
            }
        }
        out
    }

    /// Forward pass followed by a time-reversed pass.
    pub fn filter_zero_phase(&self, input: &[f64]) -> Vec<f64> {
        let mut out = self.filter(input);
        out.reverse();
        let mut out = self.filter(&out);
        out.reverse();
        out
    }
}

/// Section quality factors for an order-`n` Butterworth prototype; `None`
/// marks the real pole of an odd order.
fn butterworth_qs(order: usize) -> Vec<Option<f64>> {
    let n = order as f64;
    let mut qs: Vec<Option<f64>> = (0..order / 2)
        .map(|k| {
            let theta = (2 * k + 1) as f64 * PI / (2.0 * n);
            Some(1.0 / (2.0 * theta.sin()))
        })
        .collect();
    if order % 2 == 1 {
        qs.push(None);
    }
    qs
}

pub fn notch_cascade(spec: &FilterSpec, sample_rate_hz: f64) -> Result<Cascade, SignalError> {
    spec.check_notch(sample_rate_hz)?;
    Ok(Cascade {
        sections: vec![Biquad::notch(spec.notch_hz, spec.notch_q, sample_rate_hz)],
    })
}

pub fn bandpass_cascade(spec: &FilterSpec, sample_rate_hz: f64) -> Result<Cascade, SignalError> {
    spec.check_band(sample_rate_hz)?;
    Ok(
        Cascade::butterworth_highpass(spec.band_order, spec.band_low_hz, sample_rate_hz).then(
            Cascade::butterworth_lowpass(spec.band_order, spec.band_high_hz, sample_rate_hz),
        ),
    )
}

fn run(cascade: &Cascade, rec: &Recording, zero_phase: bool) -> Recording {
    if zero_phase {
        rec.map_channels(|c| cascade.filter_zero_phase(c))
    } else {
        rec.map_channels(|c| cascade.filter(c))
    }
}

/// Removes power-line interference at `spec.notch_hz`.
pub fn apply_notch(rec: &Recording, spec: &FilterSpec) -> Result<Recording, SignalError> {
    let cascade = notch_cascade(spec, rec.sample_rate_hz)?;
    Ok(run(&cascade, rec, spec.zero_phase))
}

/// Restricts every channel to `[band_low_hz, band_high_hz]`.
pub fn apply_bandpass(rec: &Recording, spec: &FilterSpec) -> Result<Recording, SignalError> {
    let cascade = bandpass_cascade(spec, rec.sample_rate_hz)?;
    Ok(run(&cascade, rec, spec.zero_phase))
}

/// Notch followed by band-pass.
pub fn preprocess(rec: &Recording, spec: &FilterSpec) -> Result<Recording, SignalError> {
    let notched = apply_notch(rec, spec)?;
    apply_bandpass(&notched, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length_ms: f64,
    /// Fraction of a window shared with its successor, in `[0, 1)`.
    pub overlap_fraction: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            length_ms: 256.0,
            overlap_fraction: 0.25,
        }
    }
}

impl WindowSpec {
    pub fn window_samples(&self, sample_rate_hz: f64) -> Result<usize, SignalError> {
        if !(self.length_ms.is_finite() && self.length_ms > 0.0) {
            return Err(SignalError::WindowConfig(format!(
                "window length must be positive, got {} ms",
                self.length_ms
            )));
        }
        let n = (self.length_ms / 1000.0 * sample_rate_hz).round();
        if n < 2.0 {
            return Err(SignalError::WindowConfig(format!(
                "a {} ms window at {sample_rate_hz} Hz has fewer than 2 samples",
                self.length_ms
            )));
        }
        Ok(n as usize)
    }

    pub fn stride_samples(&self, sample_rate_hz: f64) -> Result<usize, SignalError> {
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(SignalError::WindowConfig(format!(
                "overlap fraction must lie in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        let window = self.window_samples(sample_rate_hz)?;
        let stride = (window as f64 * (1.0 - self.overlap_fraction)).round() as usize;
        Ok(stride.max(1))
    }
}

/// Borrowed view of one analysis window across all channels.
#[derive(Debug, Clone)]
pub struct Window<'a> {
    pub start: usize,
    pub channels: Vec<&'a [f64]>,
    /// Majority label of the window's samples, ties to the lowest id.
    pub label: Option<usize>,
}

impl Window<'_> {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Number of windows of `window` samples at `stride` that fit in `len`.
pub fn window_count(len: usize, window: usize, stride: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / stride + 1
    }
}

/// Cuts the recording into windows starting at `0, stride, 2*stride, ...`,
/// each fully inside the recording.
pub fn segment_windows<'a>(
    rec: &'a Recording,
    spec: &WindowSpec,
) -> Result<Vec<Window<'a>>, SignalError> {
    let window = spec.window_samples(rec.sample_rate_hz)?;
    let stride = spec.stride_samples(rec.sample_rate_hz)?;
    let len = rec.len();
    if len < window {
        return Err(SignalError::TooShort {
            len,
            window_samples: window,
            length_ms: spec.length_ms,
            sample_rate_hz: rec.sample_rate_hz,
        });
    }
    let count = window_count(len, window, stride);
    Ok((0..count)
        .map(|i| {
            let start = i * stride;
            let range = start..start + window;
            Window {
                start,
                channels: rec.channels.iter().map(|c| &c[range.clone()]).collect(),
                label: rec.labels.as_ref().map(|l| majority_label(&l[range])),
            }
        })
        .collect())
}

fn majority_label(labels: &[usize]) -> usize {
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &l in labels {
        counts[l] += 1;
    }
    // max_by_key keeps the last maximum, so scan in reverse for lowest id
    counts
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, &c)| c)
        .map(|(i, _)| i)
        .unwrap_or(0)
}
