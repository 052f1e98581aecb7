//! Streaming replay: gate → windowing → features → forest → alerts.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::features::{base_feature_names, features_from_samples, poly_expand, poly_feature_names, window_len};
use crate::forest::Forest;
use crate::gate::{Gate, GateConfig};
use crate::kv::KeyValues;
use crate::types::{Label, SensorSample};

pub use crate::synth::{synth_trace, Segment, Template, TraceSpec};

/// A face-touch verdict on a fully gated window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlertEvent {
    /// Timestamp of the window's last sample.
    pub t: f64,
    pub verdict: Label,
    pub votes: [usize; 2],
    /// Share of samples passed by the gate up to and including this window.
    pub pass_fraction: f64,
}

/// Wall-clock cost of featurizing and classifying one window, in
/// microseconds. Varies between runs, so it is kept out of [`RunReport::to_kv`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub max_us: f64,
}

impl LatencyStats {
    fn from_micros(mut v: Vec<f64>) -> Self {
        if v.is_empty() {
            return Self::default();
        }
        v.sort_by(f64::total_cmp);
        let pick = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        Self {
            count: v.len(),
            mean_us: v.iter().sum::<f64>() / v.len() as f64,
            p50_us: pick(0.5),
            p95_us: pick(0.95),
            max_us: v[v.len() - 1],
        }
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("latency_windows", self.count)
            .push("latency_mean_us", format!("{:.3}", self.mean_us))
            .push("latency_p50_us", format!("{:.3}", self.p50_us))
            .push("latency_p95_us", format!("{:.3}", self.p95_us))
            .push("latency_max_us", format!("{:.3}", self.max_us));
        kv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub total_samples: usize,
    pub passed_samples: usize,
    pub pass_fraction: f64,
    pub activations: usize,
    pub window_len: usize,
    pub windows_classified: usize,
    /// Counted at the call site of the classifier, independently of
    /// `windows_classified`.
    pub classifier_invocations: usize,
    pub alerts: usize,
    pub latency: LatencyStats,
}

impl RunReport {
    /// Classifier invocations per input sample.
    pub fn duty_cycle(&self) -> f64 {
        if self.total_samples == 0 {
            0.0
        } else {
            self.classifier_invocations as f64 / self.total_samples as f64
        }
    }

    /// Deterministic fields only.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("total_samples", self.total_samples)
            .push("passed_samples", self.passed_samples)
            .push("pass_fraction", self.pass_fraction)
            .push("activations", self.activations)
            .push("window_len", self.window_len)
            .push("windows_classified", self.windows_classified)
            .push("classifier_invocations", self.classifier_invocations)
            .push("classifier_duty_cycle", self.duty_cycle())
            .push("alerts", self.alerts);
        kv
    }
}

pub fn alerts_csv(alerts: &[AlertEvent]) -> String {
    let mut s = String::from("t,verdict,votes_no_face_touch,votes_face_touch,pass_fraction\n");
    for a in alerts {
        s.push_str(&alert_line(a));
        s.push('\n');
    }
    s
}

pub fn alert_line(a: &AlertEvent) -> String {
    format!(
        "{},{},{},{},{}",
        a.t,
        a.verdict.as_str(),
        a.votes[0],
        a.votes[1],
        a.pass_fraction
    )
}

/// Where each model feature comes from in the 1540-term expansion of a
/// window's base features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    indices: Vec<usize>,
    needs_poly: bool,
}

impl FeatureMap {
    /// Resolves model feature names against the expansion's names. Models
    /// trained on plain base features resolve too, since the expansion
    /// contains them verbatim.
    pub fn resolve(names: &[String]) -> Result<Self> {
        let all = poly_feature_names(&base_feature_names());
        let lookup: HashMap<&str, usize> = all.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut indices = Vec::with_capacity(names.len());
        for n in names {
            let i = lookup.get(n.as_str()).ok_or_else(|| {
                Error::ModelDimensionMismatch(format!("model feature `{n}` is not produced by the extractor"))
            })?;
            indices.push(*i);
        }
        let base = 1..=base_feature_names().len();
        let needs_poly = indices.iter().any(|i| !base.contains(i));
        Ok(Self { indices, needs_poly })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn project(&self, window: &[SensorSample]) -> Result<Vec<f64>> {
        let base = features_from_samples(window)?;
        if self.needs_poly {
            let full = poly_expand(base.as_slice())?;
            Ok(self.indices.iter().map(|&i| full[i]).collect())
        } else {
            Ok(self.indices.iter().map(|&i| base.0[i - 1]).collect())
        }
    }
}

/// Replays `trace` sample by sample. A window is classified once
/// `window_seconds` worth of consecutive samples have all passed the gate;
/// a blocked sample discards the partial window. Windows never overlap.
pub fn run_stream(
    trace: &[SensorSample],
    gate_config: &GateConfig,
    model: &Forest,
    window_seconds: f64,
) -> Result<(Vec<AlertEvent>, RunReport)> {
    let map = FeatureMap::resolve(model.feature_names())?;
    let wlen = window_len(window_seconds, gate_config.sample_rate);
    if wlen < 2 {
        return Err(Error::InvalidConfig(format!(
            "window of {window_seconds}s holds {wlen} samples at {} Hz; need at least 2",
            gate_config.sample_rate
        )));
    }
    let mut gate = Gate::new(*gate_config)?;
    let mut buf: Vec<SensorSample> = Vec::with_capacity(wlen);
    let mut alerts = Vec::new();
    let mut latencies = Vec::new();
    let (mut passed, mut activations, mut windows, mut invocations) = (0usize, 0usize, 0usize, 0usize);
    let mut prev_pass = false;

    for (k, s) in trace.iter().enumerate() {
        let pass = gate.step(s).is_pass();
        if pass && !prev_pass {
            activations += 1;
        }
        prev_pass = pass;
        if !pass {
            buf.clear();
            continue;
        }
        passed += 1;
        buf.push(*s);
        if buf.len() < wlen {
            continue;
        }
        let started = Instant::now();
        let x = map.project(&buf)?;
        invocations += 1;
        let pred = model.predict(&x)?;
        latencies.push(started.elapsed().as_secs_f64() * 1e6);
        windows += 1;
        if pred.label == Label::FaceTouch {
            alerts.push(AlertEvent {
                t: s.t,
                verdict: pred.label,
                votes: pred.votes,
                pass_fraction: passed as f64 / (k + 1) as f64,
            });
        }
        buf.clear();
    }

    let report = RunReport {
        total_samples: trace.len(),
        passed_samples: passed,
        pass_fraction: if trace.is_empty() {
            0.0
        } else {
            passed as f64 / trace.len() as f64
        },
        activations,
        window_len: wlen,
        windows_classified: windows,
        classifier_invocations: invocations,
        alerts: alerts.len(),
        latency: LatencyStats::from_micros(latencies),
    };
    Ok((alerts, report))
}
