//! Windowing, per-channel statistics, and degree-2 polynomial expansion.
//!
//! Base features are laid out channel-major: for each of `ax ay az gx gy gz`
//! the nine statistics `min max mean q25 q75 std skew kurt autocorr`.

use crate::error::{Error, Result};
use crate::ingest::extract_transitions;
use crate::types::{ActivityLabel, Label, SensorSample, Session, CHANNEL_NAMES};

pub const STAT_NAMES: [&str; 9] = ["min", "max", "mean", "q25", "q75", "std", "skew", "kurt", "autocorr"];
pub const STATS_PER_CHANNEL: usize = STAT_NAMES.len();
pub const BASE_FEATURE_COUNT: usize = STATS_PER_CHANNEL * CHANNEL_NAMES.len();
pub const POLY_FEATURE_COUNT: usize = poly_len(BASE_FEATURE_COUNT);
pub const DEFAULT_WINDOW_SECONDS: f64 = 0.4;

/// Number of samples in a window of `window_seconds` at `sample_rate`,
/// rounded down (0.4 s at 102.4 Hz is 40 samples).
pub fn window_len(window_seconds: f64, sample_rate: f64) -> usize {
    // 1e-9 absorbs products like 0.5 * 102.4 = 51.199999...
    (window_seconds * sample_rate + 1e-9).floor().max(0.0) as usize
}

/// A fixed-length run of samples with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowInstance {
    pub samples: Vec<SensorSample>,
    pub label: Label,
    pub participant: String,
    pub activity: ActivityLabel,
}

/// Cuts `slice` into consecutive non-overlapping windows. A trailing
/// remainder shorter than one window is dropped.
pub fn segment(
    slice: &[SensorSample],
    window_seconds: f64,
    sample_rate: f64,
    participant: &str,
    activity: ActivityLabel,
) -> Result<Vec<WindowInstance>> {
    if !(window_seconds > 0.0 && window_seconds.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "window length must be positive, got {window_seconds}"
        )));
    }
    let len = window_len(window_seconds, sample_rate);
    if len == 0 {
        return Err(Error::InvalidConfig(format!(
            "a {window_seconds}s window holds no samples at {sample_rate} Hz"
        )));
    }
    Ok(slice
        .chunks_exact(len)
        .map(|chunk| WindowInstance {
            samples: chunk.to_vec(),
            label: activity.category(),
            participant: participant.to_string(),
            activity,
        })
        .collect())
}

/// Windows cut from every transition interval of a session.
pub fn session_windows(session: &Session, window_seconds: f64) -> Result<Vec<WindowInstance>> {
    let mut out = Vec::new();
    for tr in extract_transitions(session) {
        out.extend(segment(
            tr.samples,
            window_seconds,
            session.sample_rate,
            &session.participant,
            tr.label,
        )?);
    }
    Ok(out)
}

/// The 54 base statistics of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; BASE_FEATURE_COUNT]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, channel: usize, stat: usize) -> f64 {
        self.0[channel * STATS_PER_CHANNEL + stat]
    }
}

/// `ax_min`, `ax_max`, ..., `gz_autocorr`.
pub fn base_feature_names() -> Vec<String> {
    CHANNEL_NAMES
        .iter()
        .flat_map(|c| STAT_NAMES.iter().map(move |s| format!("{c}_{s}")))
        .collect()
}

pub fn base_features(w: &WindowInstance) -> Result<FeatureVector> {
    features_from_samples(&w.samples)
}

pub fn features_from_samples(samples: &[SensorSample]) -> Result<FeatureVector> {
    if samples.len() < 2 {
        return Err(Error::WindowTooShort { len: samples.len() });
    }
    let mut out = [0.0; BASE_FEATURE_COUNT];
    let mut buf = vec![0.0; samples.len()];
    for c in 0..CHANNEL_NAMES.len() {
        for (b, s) in buf.iter_mut().zip(samples) {
            *b = s.channel(c);
        }
        let stats = channel_stats(&buf);
        out[c * STATS_PER_CHANNEL..(c + 1) * STATS_PER_CHANNEL].copy_from_slice(&stats);
    }
    Ok(FeatureVector(out))
}

/// The nine statistics of one channel, in [`STAT_NAMES`] order.
///
/// Moments are population moments; kurtosis is not excess kurtosis.
/// Skewness, kurtosis and autocorrelation are 0 for constant input, and
/// autocorrelation is also 0 when either lagged half is constant.
/// Panics if `x` has fewer than two values.
pub fn channel_stats(x: &[f64]) -> [f64; STATS_PER_CHANNEL] {
    assert!(x.len() >= 2, "need at least two values");
    let n = x.len() as f64;
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let mean = x.iter().sum::<f64>() / n;

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    let (skew, kurt) = if min == max || std == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / (m2 * std), m4 / (m2 * m2))
    };

    [
        min,
        max,
        mean,
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.75),
        if min == max { 0.0 } else { std },
        skew,
        kurt,
        lag1_autocorrelation(x),
    ]
}

/// Linear interpolation between closest ranks: position `(n-1)·p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Pearson correlation of `x[..n-1]` with `x[1..]`.
pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let a = &x[..x.len() - 1];
    let b = &x[1..];
    let constant = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if constant(a) || constant(b) {
        return 0.0;
    }
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        let (du, dv) = (u - ma, v - mb);
        sab += du * dv;
        saa += du * du;
        sbb += dv * dv;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Length of the degree-≤2 expansion of `n` features: `(n+1)(n+2)/2`.
pub const fn poly_len(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Position of the product `f[i]·f[j]` (`i ≤ j`) in the expansion of `n`
/// features.
pub fn pair_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i <= j && j < n);
    // bias + n linear terms, then rows r < i holding n - r pairs each.
    1 + n + i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Bias, the inputs in order, then `f[i]·f[j]` for `i ≤ j` in lexicographic
/// order.
pub fn poly_expand(f: &[f64]) -> Result<Vec<f64>> {
    if let Some(index) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature { index });
    }
    let n = f.len();
    let mut out = Vec::with_capacity(poly_len(n));
    out.push(1.0);
    out.extend_from_slice(f);
    for i in 0..n {
        for j in i..n {
            out.push(f[i] * f[j]);
        }
    }
    debug_assert_eq!(out.len(), poly_len(n));
    Ok(out)
}

/// Names matching [`poly_expand`]'s layout: `1`, the inputs, `a*b`, `a^2`.
pub fn poly_feature_names(names: &[String]) -> Vec<String> {
    let n = names.len();
    let mut out = Vec::with_capacity(poly_len(n));
    out.push("1".to_string());
    out.extend(names.iter().cloned());
    for i in 0..n {
        for j in i..n {
            out.push(if i == j {
                format!("{}^2", names[i])
            } else {
                format!("{}*{}", names[i], names[j])
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Activity, Stance};
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};

    fn label() -> ActivityLabel {
        ActivityLabel::new(Activity::TouchMouth, Stance::Sitting)
    }

    fn samples_from(values: &[f64]) -> Vec<SensorSample> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| SensorSample::new(i as f64 * 0.01, [v; 3], [v; 3]))
            .collect()
    }

    #[test]
    fn default_window_is_40_samples() {
        assert_eq!(window_len(0.4, 102.4), 40);
        assert_eq!(window_len(0.5, 102.4), 51);
        assert_eq!(window_len(0.2, 102.4), 20);
    }

    #[test]
    fn segment_discards_remainder() {
        let s = samples_from(&vec![0.0; 100]);
        let w = segment(&s, 0.4, 100.0, "p", label()).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|w| w.samples.len() == 40));
        assert_eq!(w[1].samples[0], s[40]);
        assert_eq!(w[0].label, Label::FaceTouch);
    }

    #[test]
    fn segment_short_slice_is_empty() {
        let s = samples_from(&vec![0.0; 39]);
        assert!(segment(&s, 0.4, 100.0, "p", label()).unwrap().is_empty());
        assert!(segment(&s, 0.0, 100.0, "p", label()).is_err());
    }

    #[test]
    fn constant_channel_is_degenerate() {
        let f = channel_stats(&[0.1; 40]);
        assert_eq!(f, [0.1, 0.1, f[2], 0.1, 0.1, 0.0, 0.0, 0.0, 0.0]);
        assert!((f[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn one_to_four() {
        let f = channel_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f[2], 2.5);
        assert!((f[5] - 1.25f64.sqrt()).abs() < 1e-15);
        assert!(f[6].abs() < 1e-15);
        assert_eq!(f[3], 1.75);
        assert_eq!(f[4], 3.25);
        // lagged halves [1,2,3] and [2,3,4] are perfectly correlated
        assert!((f[8] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_sample_window_has_zero_autocorrelation() {
        let f = channel_stats(&[1.0, 5.0]);
        assert_eq!(f[8], 0.0);
        assert_eq!(f[5], 2.0);
    }

    #[test]
    fn window_too_short() {
        assert!(matches!(
            features_from_samples(&samples_from(&[1.0])),
            Err(Error::WindowTooShort { len: 1 })
        ));
    }

    #[test]
    fn feature_names_are_channel_major() {
        let names = base_feature_names();
        assert_eq!(names.len(), 54);
        assert_eq!(names[0], "ax_min");
        assert_eq!(names[9], "ay_min");
        assert_eq!(names[53], "gz_autocorr");
    }

    #[test]
    fn expansion_of_two_inputs() {
        let (a, b) = (3.0, -2.0);
        assert_eq!(poly_expand(&[a, b]).unwrap(), vec![1.0, a, b, a * a, a * b, b * b]);
        assert_eq!(poly_len(2), 6);
    }

    #[test]
    fn expansion_of_54_inputs() {
        let out = poly_expand(&[1.0; 54]).unwrap();
        assert_eq!(out.len(), 1540);
        assert!(out.iter().all(|&v| v == 1.0));
        assert_eq!(POLY_FEATURE_COUNT, 1540);
        let names = poly_feature_names(&base_feature_names());
        assert_eq!(names.len(), 1540);
        assert_eq!(names[55], "ax_min^2");
        assert_eq!(names[56], "ax_min*ax_max");
    }

    #[test]
    fn expansion_rejects_non_finite() {
        assert!(matches!(
            poly_expand(&[1.0, f64::NAN]),
            Err(Error::NonFiniteFeature { index: 1 })
        ));
    }

    #[test]
    fn pair_index_is_exhaustive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 7, 54] {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let out = poly_expand(&f).unwrap();
            assert_eq!(out.len(), (n + 1) * (n + 2) / 2);
            for i in 0..n {
                for j in i..n {
                    assert_eq!(out[pair_index(i, j, n)], f[i] * f[j], "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn shuffle_changes_autocorrelation_only() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin() + 0.01 * i as f64).collect();
        let mut y = x.clone();
        y.reverse();
        y.swap(3, 17);
        y.swap(20, 33);
        let (fx, fy) = (channel_stats(&x), channel_stats(&y));
        for k in 0..8 {
            assert!(
                (fx[k] - fy[k]).abs() <= 1e-12 * fx[k].abs().max(1.0),
                "{}",
                STAT_NAMES[k]
            );
        }
        assert!((fx[8] - fy[8]).abs() > 1e-3);
    }

    proptest! {
        #[test]
        fn permutation_invariance(mut x in proptest::collection::vec(-100.0..100.0f64, 2..60), seed in any::<u64>()) {
            let before = channel_stats(&x);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for i in (1..x.len()).rev() {
                let j = rng.random_range(0..=i);
                x.swap(i, j);
            }
            let after = channel_stats(&x);
            for k in 0..8 {
                prop_assert!((before[k] - after[k]).abs() <= 1e-9 * before[k].abs().max(1.0));
            }
        }

        #[test]
        fn shift_invariance(x in proptest::collection::vec(-10.0..10.0f64, 3..60), c in -50.0..50.0f64) {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let (a, b) = (channel_stats(&x), channel_stats(&shifted));
            for k in 0..5 {
                prop_assert!((b[k] - (a[k] + c)).abs() <= 1e-9 * (a[k] + c).abs().max(1.0));
            }
            for k in 5..9 {
                prop_assert!((a[k] - b[k]).abs() <= 1e-6 * a[k].abs().max(1.0), "{} {} {}", STAT_NAMES[k], a[k], b[k]);
            }
        }

        #[test]
        fn ordering_invariants(x in proptest::collection::vec(-1e3..1e3f64, 2..80)) {
            let f = channel_stats(&x);
            prop_assert!(f[0] <= f[3] && f[3] <= f[4] && f[4] <= f[1]);
            prop_assert!(f[5] >= 0.0);
        }
    }
}
