use std::f64::consts::PI;

use proptest::prelude::*;
use semg_meet::features::{
    extract_frequency_features, extract_time_features, power_spectrum, FeatureError, FeatureSpec,
    ZeroPowerPolicy,
};

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-12)
}

/// Time-domain features straight from their definitions.
fn time_oracle(x: &[f64], spec: &FeatureSpec) -> [f64; 11] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mav = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let diffs: Vec<f64> = (1..x.len()).map(|i| x[i] - x[i - 1]).collect();
    let dasdv = (diffs.iter().map(|d| d * d).sum::<f64>() / (n - 1.0)).sqrt();
    let wl = diffs.iter().map(|d| d.abs()).sum::<f64>();
    let iemg = mav * n;
    let log = x
        .iter()
        .map(|v| (v.abs() + 1e-12).powf(1.0 / n))
        .product::<f64>();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let aac = wl / (n - 1.0);
    let zc = (1..x.len())
        .filter(|&i| {
            ((x[i - 1] > 0.0 && x[i] < 0.0) || (x[i - 1] < 0.0 && x[i] > 0.0))
                && (x[i] - x[i - 1]).abs() > spec.zc_threshold
        })
        .count() as f64;
    let wamp = diffs
        .iter()
        .filter(|d| d.abs() > spec.wamp_threshold)
        .count() as f64;
    let myop = x.iter().filter(|v| v.abs() > spec.myop_threshold).count() as f64 / n;
    [mav, var, dasdv, wl, iemg, log, rms, aac, zc, wamp, myop]
}

/// One-sided periodogram by direct DFT summation.
fn dft_power(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut freqs = Vec::new();
    let mut power = Vec::new();
    for k in 0..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in x.iter().enumerate() {
            let ang = -2.0 * PI * (k * t) as f64 / n as f64;
            re += (v - mean) * ang.cos();
            im += (v - mean) * ang.sin();
        }
        let mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
        let factor = if mirrored { 2.0 } else { 1.0 };
        freqs.push(k as f64 * fs / n as f64);
        power.push(factor * (re * re + im * im) / n as f64);
    }
    (freqs, power)
}

fn signal() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 8..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn time_features_match_definitions(x in signal()) {
        let spec = FeatureSpec::default();
        let got = extract_time_features(&x, &spec).unwrap();
        let want = time_oracle(&x, &spec);
        for i in 0..11 {
            prop_assert!(close(got[i], want[i], 1e-9), "feature {}: {} vs {}", i, got[i], want[i]);
        }
    }

    #[test]
    fn spectrum_matches_direct_dft(x in signal(), fs in 100.0f64..4000.0) {
        let (f, p) = power_spectrum(&x, fs);
        let (fo, po) = dft_power(&x, fs);
        prop_assert_eq!(f.len(), fo.len());
        let total: f64 = po.iter().sum();
        for k in 0..f.len() {
            prop_assert!(close(f[k], fo[k], 1e-12));
            prop_assert!((p[k] - po[k]).abs() <= 1e-6 * total.max(1e-12));
        }
    }

    #[test]
    fn periodogram_preserves_energy(x in signal()) {
        let (_, p) = power_spectrum(&x, 1000.0);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let energy: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        prop_assert!(close(p.iter().sum::<f64>(), energy, 1e-9));
    }

    #[test]
    fn spectral_features_match_oracle(x in signal()) {
        let fs = 2000.0;
        let spec = FeatureSpec { zero_power: ZeroPowerPolicy::Zero, ..FeatureSpec::default() };
        let got = extract_frequency_features(&x, fs, &spec).unwrap();
        let (f, p) = dft_power(&x, fs);
        let tp: f64 = p.iter().sum();
        prop_assert!(close(got[0], tp, 1e-6));
        prop_assert!(close(got[5], tp / p.len() as f64, 1e-6));
        let mnf = f.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / tp;
        prop_assert!(close(got[4], mnf, 1e-6));

        // MDF: the oracle's bin, or a neighbour when the half-power crossing is a near tie.
        let mut acc = 0.0;
        let mut k_mdf = p.len() - 1;
        for (k, v) in p.iter().enumerate() {
            acc += v;
            if acc >= tp / 2.0 {
                k_mdf = k;
                break;
            }
        }
        let bin = fs / x.len() as f64;
        let near_tie = {
            let cum: f64 = p[..k_mdf].iter().sum();
            (cum - tp / 2.0).abs() < 1e-6 * tp || (cum + p[k_mdf] - tp / 2.0).abs() < 1e-6 * tp
        };
        prop_assert!(got[2] == f[k_mdf] || (near_tie && (got[2] - f[k_mdf]).abs() <= bin + 1e-9));

        let peak = p.iter().cloned().fold(f64::MIN, f64::max);
        let k_pkf = ((got[3] / bin).round()) as usize;
        prop_assert!(p[k_pkf] >= peak * (1.0 - 1e-6));

        let band = |lo: f64, hi: f64| -> f64 {
            f.iter().zip(&p).filter(|(a, _)| **a >= lo && **a < hi).map(|(_, b)| b).sum()
        };
        let high = band(100.0, 500.0);
        if high > 1e-9 * tp {
            prop_assert!(close(got[1], band(10.0, 100.0) / high, 1e-5));
        }
    }

    #[test]
    fn amplitude_scaling(x in signal(), a in 0.1f64..10.0) {
        let spec = FeatureSpec { zero_power: ZeroPowerPolicy::Zero, ..FeatureSpec::default() };
        let scaled: Vec<f64> = x.iter().map(|v| v * a).collect();
        let t0 = extract_time_features(&x, &spec).unwrap();
        let t1 = extract_time_features(&scaled, &spec).unwrap();
        for i in [0, 2, 3, 4, 6, 7] {
            prop_assert!(close(t1[i], a * t0[i], 1e-9));
        }
        prop_assert!(close(t1[1], a * a * t0[1], 1e-9));
        let f0 = extract_frequency_features(&x, 2000.0, &spec).unwrap();
        let f1 = extract_frequency_features(&scaled, 2000.0, &spec).unwrap();
        prop_assert!(close(f1[0], a * a * f0[0], 1e-9));
        prop_assert!(close(f1[4], f0[4], 1e-6));
    }
}

#[test]
fn pure_tone_peaks_at_its_bin() {
    let fs = 1000.0;
    let x: Vec<f64> = (0..200)
        .map(|t| (2.0 * PI * 50.0 * t as f64 / fs).sin())
        .collect();
    let f = extract_frequency_features(&x, fs, &FeatureSpec::default()).unwrap();
    assert_eq!(f[3], 50.0);
    assert_eq!(f[2], 50.0);
    assert!((f[4] - 50.0).abs() < 1e-6);
}

#[test]
fn constant_window_has_no_spectral_power() {
    let x = vec![0.25; 64];
    let err = extract_frequency_features(&x, 1000.0, &FeatureSpec::default()).unwrap_err();
    assert!(matches!(err, FeatureError::ZeroPower(_)));
    let spec = FeatureSpec {
        zero_power: ZeroPowerPolicy::Zero,
        ..FeatureSpec::default()
    };
    let f = extract_frequency_features(&x, 1000.0, &spec).unwrap();
    assert_eq!(f, [0.0; 6]);
}
