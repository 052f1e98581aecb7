//! Seeded synthetic data: sensor traces for the gate and pipeline, labelled
//! sessions for window sweeps, and feature tables for classifier tests.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{base_feature_names, BASE_FEATURE_COUNT};
use crate::rng::{Rng, RngSeed};
use crate::types::{
    Activity, ActivityLabel, Label, Phase, PhaseInterval, SensorSample, Session, Stance, DEFAULT_SAMPLE_RATE,
};

/// Waveform of one trace segment. Amplitude is the resultant acceleration
/// magnitude scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// Constant acceleration with resultant `amplitude` (each axis
    /// `amplitude / sqrt 3`), gyroscope at rest.
    Rest,
    /// Three-phase sinusoid at `swing_hz` on every channel.
    Swing,
    /// Three-phase sinusoid at `burst_hz` under a `sin²` envelope spanning
    /// the segment.
    Burst,
}

impl Template {
    pub fn as_str(self) -> &'static str {
        match self {
            Template::Rest => "rest",
            Template::Swing => "swing",
            Template::Burst => "burst",
        }
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rest" => Ok(Template::Rest),
            "swing" => Ok(Template::Swing),
            "burst" => Ok(Template::Burst),
            _ => Err(Error::Parse(format!("unknown segment template `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub template: Template,
    pub amplitude: f64,
}

impl Segment {
    pub fn new(duration: f64, template: Template, amplitude: f64) -> Self {
        Self {
            duration,
            template,
            amplitude,
        }
    }
}

/// A trace description: segments played in order, `repeat` times.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub segments: Vec<Segment>,
    pub repeat: usize,
    pub sample_rate: f64,
    /// Gaussian noise standard deviation as a fraction of segment amplitude.
    pub noise: f64,
    pub swing_hz: f64,
    pub burst_hz: f64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            segments: Vec::new(),
            repeat: 1,
            sample_rate: DEFAULT_SAMPLE_RATE,
            noise: 0.05,
            swing_hz: 1.0,
            burst_hz: 5.0,
        }
    }
}

impl TraceSpec {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self {
            segments,
            ..Default::default()
        }
    }

    /// Text form: `key=value` lines for `repeat`, `sample_rate`, `noise`,
    /// `swing_hz`, `burst_hz`, and one `<template> <seconds> <amplitude>`
    /// line per segment. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = TraceSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("trace spec line {}: {what}", i + 1));
            if let Some((k, v)) = line.split_once('=') {
                let v = v.trim();
                let real = || v.parse::<f64>().map_err(|_| bad(&format!("bad number `{v}`")));
                match k.trim() {
                    "repeat" => spec.repeat = v.parse().map_err(|_| bad(&format!("bad count `{v}`")))?,
                    "sample_rate" => spec.sample_rate = real()?,
                    "noise" => spec.noise = real()?,
                    "swing_hz" => spec.swing_hz = real()?,
                    "burst_hz" => spec.burst_hz = real()?,
                    other => return Err(bad(&format!("unknown key `{other}`"))),
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("expected `<template> <seconds> <amplitude>`"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
            spec.segments
                .push(Segment::new(num(parts[1])?, parts[0].parse()?, num(parts[2])?));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "repeat={}\nsample_rate={}\nnoise={}\nswing_hz={}\nburst_hz={}\n",
            self.repeat, self.sample_rate, self.noise, self.swing_hz, self.burst_hz
        );
        for seg in &self.segments {
            s.push_str(&format!(
                "{} {} {}\n",
                seg.template.as_str(),
                seg.duration,
                seg.amplitude
            ));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidConfig("trace spec has no segments".into()));
        }
        if let Some(s) = self
            .segments
            .iter()
            .find(|s| !(s.duration > 0.0 && s.duration.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "segment durations must be positive, got {}",
                s.duration
            )));
        }
        if self
            .segments
            .iter()
            .any(|s| !s.amplitude.is_finite() || s.amplitude < 0.0)
        {
            return Err(Error::InvalidConfig(
                "segment amplitudes must be finite and non-negative".into(),
            ));
        }
        let positive = [
            ("sample_rate", self.sample_rate),
            ("swing_hz", self.swing_hz),
            ("burst_hz", self.burst_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        if self.repeat == 0 {
            return Err(Error::InvalidConfig("repeat must be at least 1".into()));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.repeat as f64 * self.segments.iter().map(|s| s.duration).sum::<f64>()
    }
}

const PHASES: [f64; 3] = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];

/// Plays `spec` into a sample sequence starting at t = 0. Deterministic in
/// `seed`.
pub fn synth_trace(spec: &TraceSpec, seed: RngSeed) -> Result<Vec<SensorSample>> {
    spec.validate()?;
    let mut rng = seed.rng();
    let dt = 1.0 / spec.sample_rate;
    let mut out = Vec::new();
    for _ in 0..spec.repeat {
        for seg in &spec.segments {
            let n = (seg.duration * spec.sample_rate).round() as usize;
            let sd = spec.noise * seg.amplitude;
            let noise = Normal::new(0.0, sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let base = out.len();
            for k in 0..n {
                let tau = k as f64 * dt;
                let (accel, gyro) = segment_value(seg, spec, tau);
                let mut s = SensorSample::new((base + k) as f64 * dt, accel, gyro);
                if sd > 0.0 {
                    for v in s.accel.iter_mut().chain(s.gyro.iter_mut()) {
                        *v += noise.sample(&mut rng);
                    }
                }
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn segment_value(seg: &Segment, spec: &TraceSpec, tau: f64) -> ([f64; 3], [f64; 3]) {
    let a = seg.amplitude;
    match seg.template {
        Template::Rest => ([a / 3f64.sqrt(); 3], [0.0; 3]),
        Template::Swing => {
            let w = 2.0 * PI * spec.swing_hz * tau;
            (
                PHASES.map(|p| a * (w + p).sin()),
                PHASES.map(|p| 0.5 * a * (w + p).cos()),
            )
        }
        Template::Burst => {
            let env = (PI * tau / seg.duration).sin().powi(2);
            let w = 2.0 * PI * spec.burst_hz * tau;
            (
                PHASES.map(|p| a * env * (w + p).sin()),
                PHASES.map(|p| 0.5 * a * env * (w + p).cos()),
            )
        }
    }
}

/// Parameters of [`synthetic_feature_dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureTableSpec {
    pub rows: usize,
    pub participants: usize,
    pub informative: usize,
    /// Distance between class means of each informative feature, in units
    /// of its within-class standard deviation.
    pub separation: f64,
}

impl Default for FeatureTableSpec {
    fn default() -> Self {
        Self {
            rows: 2000,
            participants: 10,
            informative: 5,
            separation: 3.0,
        }
    }
}

/// A base-feature table (54 columns named like real window features) in
/// which only the first `informative` columns depend on the label; the rest
/// are standard normal noise. Labels alternate, participants are assigned
/// round-robin as `p01`, `p02`, ....
pub fn synthetic_feature_dataset(spec: &FeatureTableSpec, seed: RngSeed) -> Result<Dataset> {
    if spec.informative > BASE_FEATURE_COUNT || spec.participants == 0 {
        return Err(Error::InvalidConfig(
            "informative features must fit in 54 columns and participants be positive".into(),
        ));
    }
    let mut rng = seed.rng();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut ds = Dataset::new(base_feature_names());
    let mut row = [0.0; BASE_FEATURE_COUNT];
    for i in 0..spec.rows {
        let label = Label::ALL[i % 2];
        let sign = if label == Label::FaceTouch { 0.5 } else { -0.5 };
        for (j, v) in row.iter_mut().enumerate() {
            *v = normal.sample(&mut rng);
            if j < spec.informative {
                *v += sign * spec.separation;
            }
        }
        let activity = if label == Label::FaceTouch {
            Activity::TouchNose
        } else {
            Activity::ScratchHead
        };
        ds.push(&row, label, &participant_id(i % spec.participants), activity)?;
    }
    Ok(ds)
}

pub fn participant_id(i: usize) -> String {
    format!("p{:02}", i + 1)
}

/// Parameters of [`synthetic_sessions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSetSpec {
    pub participants: usize,
    /// Sessions per participant and class.
    pub sessions_per_class: usize,
    pub transitions_per_session: usize,
    /// Length of each transition phase in seconds.
    pub transition_seconds: f64,
    /// Cycle length of the face-touch motion.
    pub period: f64,
    /// Share of each cycle spent at the high level.
    pub duty: f64,
    /// Per-channel Gaussian noise standard deviation.
    pub noise: f64,
    pub sample_rate: f64,
}

impl Default for SessionSetSpec {
    fn default() -> Self {
        Self {
            participants: 4,
            sessions_per_class: 2,
            transitions_per_session: 8,
            transition_seconds: 2.0,
            period: 0.4,
            duty: 0.75,
            noise: 0.3,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

/// Labelled sessions in which face-touch transitions hold a high level for
/// `duty · period` and then dip to the negated level for the rest of each
/// cycle (random phase), while other transitions hold the high level
/// throughout. Windows shorter than the high stretch can miss the dip and
/// look like the other class; windows of a full period always contain it.
pub fn synthetic_sessions(spec: &SessionSetSpec, seed: RngSeed) -> Result<Vec<Session>> {
    if spec.participants == 0 || spec.sessions_per_class == 0 || spec.transitions_per_session == 0 {
        return Err(Error::InvalidConfig("session set must be non-empty".into()));
    }
    if !(spec.duty > 0.0 && spec.duty < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "duty must lie in (0, 1), got {}",
            spec.duty
        )));
    }
    let mut rng = seed.rng();
    let mut out = Vec::new();
    for p in 0..spec.participants {
        for label in Label::ALL {
            for _ in 0..spec.sessions_per_class {
                out.push(one_session(spec, &participant_id(p), label, &mut rng)?);
            }
        }
    }
    Ok(out)
}

fn one_session(spec: &SessionSetSpec, participant: &str, label: Label, rng: &mut Rng) -> Result<Session> {
    let rate = spec.sample_rate;
    let dt = 1.0 / rate;
    let n_gap = rate.round() as usize;
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut samples: Vec<SensorSample> = Vec::new();
    let mut phases = Vec::new();
    let mut push = |accel: [f64; 3], rng: &mut Rng| {
        let mut s = SensorSample::new(samples.len() as f64 * dt, accel, [0.0; 3]);
        for v in s.accel.iter_mut().chain(s.gyro.iter_mut()) {
            *v += noise.sample(rng);
        }
        samples.push(s);
        samples.len()
    };
    let mut len = 0;
    for _ in 0..spec.transitions_per_session {
        for _ in 0..n_gap {
            len = push([0.0, 0.0, 1.0], rng);
        }
        let start = len as f64 * dt;
        let n = (spec.transition_seconds * rate).round() as usize;
        let phase0: f64 = rng.random_range(0.0..1.0);
        let amp: f64 = rng.random_range(1.5..2.5);
        for k in 0..n {
            let u = (k as f64 * dt / spec.period + phase0).fract();
            let v = if label == Label::FaceTouch && u >= spec.duty {
                -amp
            } else {
                amp
            };
            len = push([v, 0.5 * v, 1.0], rng);
        }
        phases.push(PhaseInterval::new(start, (len - 1) as f64 * dt, Phase::Transition));
    }
    for _ in 0..n_gap {
        push([0.0, 0.0, 1.0], rng);
    }
    let activity = match label {
        Label::FaceTouch => Activity::TouchNose,
        Label::NoFaceTouch => Activity::ScratchHead,
    };
    let session = Session {
        participant: participant.to_string(),
        label: ActivityLabel::new(activity, Stance::Standing),
        sample_rate: rate,
        samples,
        phases,
        trim_margin: 0.0,
    };
    session.check()?;
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_silent() {
        let spec = TraceSpec::new(vec![Segment::new(2.0, Template::Swing, 0.0)]);
        let t = synth_trace(&spec, RngSeed(1)).unwrap();
        assert_eq!(t.len(), 205);
        assert!(t.iter().all(|s| s.channels() == [0.0; 6]));
    }

    #[test]
    fn deterministic() {
        let spec = TraceSpec::new(vec![
            Segment::new(3.0, Template::Rest, 1.0),
            Segment::new(1.0, Template::Burst, 8.0),
        ]);
        assert_eq!(
            synth_trace(&spec, RngSeed(4)).unwrap(),
            synth_trace(&spec, RngSeed(4)).unwrap()
        );
        assert_ne!(
            synth_trace(&spec, RngSeed(4)).unwrap(),
            synth_trace(&spec, RngSeed(5)).unwrap()
        );
    }

    fn rms(xs: &[SensorSample]) -> f64 {
        (xs.iter().map(|s| s.resultant_acceleration().powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
    }

    #[test]
    fn burst_to_rest_energy_matches_closed_form() {
        // Rest resultant is A_r; burst resultant is A_b·env·sqrt(3/2), whose
        // RMS over the envelope is A_b·sqrt(3/2)·sqrt(3/8) = 0.75·A_b.
        let mut spec = TraceSpec::new(vec![
            Segment::new(5.0, Template::Rest, 1.0),
            Segment::new(2.0, Template::Burst, 6.0),
        ]);
        spec.noise = 0.01;
        let t = synth_trace(&spec, RngSeed(2)).unwrap();
        let n_rest = (5.0 * spec.sample_rate).round() as usize;
        let ratio = rms(&t[n_rest..]) / rms(&t[..n_rest]);
        let expected = 0.75 * 6.0;
        assert!((ratio / expected - 1.0).abs() < 0.05, "{ratio} vs {expected}");
    }

    #[test]
    fn spec_text_round_trip() {
        let text = "# gate check\nrepeat=3\nnoise=0.1\nrest 9 1\nburst 1 10\n";
        let spec = TraceSpec::parse(text).unwrap();
        assert_eq!(spec.repeat, 3);
        assert_eq!(spec.segments[1], Segment::new(1.0, Template::Burst, 10.0));
        assert_eq!(TraceSpec::parse(&spec.to_text()).unwrap(), spec);
        assert!(TraceSpec::parse("rest 0 1\n").is_err());
        assert!(TraceSpec::parse("wiggle 1 1\n").is_err());
    }

    #[test]
    fn feature_table_shape() {
        let ds = synthetic_feature_dataset(
            &FeatureTableSpec {
                rows: 100,
                ..Default::default()
            },
            RngSeed(3),
        )
        .unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.n_features(), 54);
        assert_eq!(ds.class_counts(), [50, 50]);
        assert_eq!(ds.participant_ids().len(), 10);
    }

    #[test]
    fn sessions_are_valid() {
        let s = synthetic_sessions(
            &SessionSetSpec {
                participants: 1,
                ..Default::default()
            },
            RngSeed(1),
        )
        .unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|s| s.phases.len() == 8 && s.check().is_ok()));
    }
}
