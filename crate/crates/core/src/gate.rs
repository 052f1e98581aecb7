//! STA/LTA activity gate over the resultant-acceleration stream.
//!
//! The gate keeps the last `ceil(t_lta · rate)` resultant accelerations in a
//! ring buffer together with running sums over the short and long windows.
//! A sample passes when the long buffer has filled at least once, the long
//! mean is positive, and `short_mean / long_mean > threshold`. There is no
//! hysteresis: every sample is decided on its own.

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::types::{resultant_acceleration, SensorSample, DEFAULT_SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    /// Short window, seconds.
    pub t_sta: f64,
    /// Long window, seconds.
    pub t_lta: f64,
    pub threshold: f64,
    pub sample_rate: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            t_sta: 0.5,
            t_lta: 30.0,
            // A threshold of exactly 1 fires on sensor noise.
            threshold: 1.5,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_sta, self.t_lta, self.threshold, self.sample_rate]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("gate parameters must be finite".into()));
        }
        if !(self.t_sta > 0.0 && self.t_sta < self.t_lta) {
            return Err(Error::InvalidConfig(format!(
                "t-sta ({}) must be positive and below t-lta ({})",
                self.t_sta, self.t_lta
            )));
        }
        if !(self.threshold > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must exceed 1, got {}",
                self.threshold
            )));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        Ok(())
    }

    pub fn short_len(&self) -> usize {
        ((self.t_sta * self.sample_rate - 1e-9).ceil() as usize).max(1)
    }

    pub fn long_len(&self) -> usize {
        ((self.t_lta * self.sample_rate - 1e-9).ceil() as usize).max(self.short_len())
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = GateConfig::default();
        let c = GateConfig {
            t_sta: kv.get_parsed("t_sta")?.unwrap_or(d.t_sta),
            t_lta: kv.get_parsed("t_lta")?.unwrap_or(d.t_lta),
            threshold: kv.get_parsed("threshold")?.unwrap_or(d.threshold),
            sample_rate: kv.get_parsed("sample_rate")?.unwrap_or(d.sample_rate),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("t_sta", self.t_sta)
            .push("t_lta", self.t_lta)
            .push("threshold", self.threshold)
            .push("sample_rate", self.sample_rate);
        kv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateState {
    Dormant,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateDecision {
    Blocked,
    Pass,
}

impl GateDecision {
    pub fn is_pass(self) -> bool {
        self == GateDecision::Pass
    }
}

/// Streaming STA/LTA state. One instance per stream.
#[derive(Debug, Clone)]
pub struct Gate {
    config: GateConfig,
    short_len: usize,
    long_len: usize,
    ring: Vec<f64>,
    seen: u64,
    short_sum: f64,
    long_sum: f64,
    state: GateState,
}

impl Gate {
    pub fn new(config: GateConfig) -> Result<Self> {
        config.validate()?;
        let long_len = config.long_len();
        Ok(Self {
            config,
            short_len: config.short_len(),
            long_len,
            ring: vec![0.0; long_len],
            seen: 0,
            short_sum: 0.0,
            long_sum: 0.0,
            state: GateState::Dormant,
        })
    }

    pub fn config(&self) -> &GateConfig {
        &self.config
    }

    pub fn state(&self) -> GateState {
        self.state
    }

    /// Whether the long buffer has filled at least once.
    pub fn is_warm(&self) -> bool {
        self.seen >= self.long_len as u64
    }

    pub fn short_len(&self) -> usize {
        self.short_len
    }

    pub fn long_len(&self) -> usize {
        self.long_len
    }

    /// Mean resultant acceleration over the short window (partial while
    /// warming up).
    pub fn short_mean(&self) -> f64 {
        let n = (self.seen as usize).min(self.short_len).max(1);
        self.short_sum / n as f64
    }

    pub fn long_mean(&self) -> f64 {
        let n = (self.seen as usize).min(self.long_len).max(1);
        self.long_sum / n as f64
    }

    /// `short_mean / long_mean` once warm and the long mean is positive.
    pub fn ratio(&self) -> Option<f64> {
        let la = self.long_mean();
        (self.is_warm() && la > 0.0).then(|| self.short_mean() / la)
    }

    pub fn step(&mut self, sample: &SensorSample) -> GateDecision {
        self.push(resultant_acceleration(sample));
        let pass = self.ratio().is_some_and(|r| r > self.config.threshold);
        self.state = if pass { GateState::Active } else { GateState::Dormant };
        if pass {
            GateDecision::Pass
        } else {
            GateDecision::Blocked
        }
    }

    fn push(&mut self, value: f64) {
        let l = self.long_len as u64;
        let s = self.short_len as u64;
        let slot = (self.seen % l) as usize;
        let leaving_long = if self.seen >= l { self.ring[slot] } else { 0.0 };
        let leaving_short = if self.seen >= s {
            self.ring[((self.seen - s) % l) as usize]
        } else {
            0.0
        };
        self.ring[slot] = value;
        self.long_sum += value - leaving_long;
        self.short_sum += value - leaving_short;
        self.seen += 1;
        if self.seen.is_multiple_of(l) {
            self.recompute_sums();
        }
    }

    /// Resets the running sums to exact sums of the buffer, bounding drift.
    fn recompute_sums(&mut self) {
        let l = self.long_len as u64;
        let filled = self.seen.min(l) as usize;
        self.long_sum = self.ring[..filled].iter().sum();
        let s = self.short_len.min(filled);
        self.short_sum = (1..=s).map(|k| self.ring[((self.seen - k as u64) % l) as usize]).sum();
    }
}

/// Share of the stream the gate let through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycleReport {
    pub total_samples: usize,
    pub passed_samples: usize,
    pub pass_fraction: f64,
    /// Number of Blocked→Pass switches.
    pub activations: usize,
}

impl DutyCycleReport {
    pub fn from_decisions(decisions: &[GateDecision]) -> Self {
        let passed = decisions.iter().filter(|d| d.is_pass()).count();
        let mut activations = 0;
        let mut prev = GateDecision::Blocked;
        for &d in decisions {
            if d.is_pass() && !prev.is_pass() {
                activations += 1;
            }
            prev = d;
        }
        Self {
            total_samples: decisions.len(),
            passed_samples: passed,
            pass_fraction: if decisions.is_empty() {
                0.0
            } else {
                passed as f64 / decisions.len() as f64
            },
            activations,
        }
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("total_samples", self.total_samples)
            .push("passed_samples", self.passed_samples)
            .push("pass_fraction", self.pass_fraction)
            .push("activations", self.activations);
        kv
    }
}

/// Per-sample decisions for a whole stream plus its duty cycle.
pub fn gate_stream(samples: &[SensorSample], config: &GateConfig) -> Result<(Vec<GateDecision>, DutyCycleReport)> {
    let mut gate = Gate::new(*config)?;
    let decisions: Vec<GateDecision> = samples.iter().map(|s| gate.step(s)).collect();
    let report = DutyCycleReport::from_decisions(&decisions);
    Ok((decisions, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rate: f64) -> GateConfig {
        GateConfig {
            t_sta: 0.5,
            t_lta: 5.0,
            threshold: 1.5,
            sample_rate: rate,
        }
    }

    fn sample(a: f64) -> SensorSample {
        SensorSample::new(0.0, [a, 0.0, 0.0], [0.0; 3])
    }

    #[test]
    fn config_validation() {
        assert!(GateConfig::default().validate().is_ok());
        let bad = [
            GateConfig {
                t_sta: 0.0,
                ..GateConfig::default()
            },
            GateConfig {
                t_sta: 40.0,
                ..GateConfig::default()
            },
            GateConfig {
                threshold: 1.0,
                ..GateConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert_eq!(GateConfig::default().long_len(), 3072);
        assert_eq!(GateConfig::default().short_len(), 52);
    }

    #[test]
    fn constant_signal_ratio_is_one() {
        let mut g = Gate::new(cfg(20.0)).unwrap();
        for _ in 0..500 {
            assert_eq!(g.step(&sample(0.7)), GateDecision::Blocked);
        }
        assert!((g.ratio().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_up_is_blocked() {
        let c = cfg(20.0);
        let mut g = Gate::new(c).unwrap();
        let l = c.long_len();
        for i in 0..l - 1 {
            let a = if i % 2 == 0 { 0.01 } else { 100.0 };
            assert_eq!(g.step(&sample(a)), GateDecision::Blocked, "sample {i}");
            assert_eq!(g.state(), GateState::Dormant);
        }
    }

    #[test]
    fn burst_after_quiet_history_passes() {
        // history of amplitude a, then the short window fills with 10a:
        // S = 10a, L = (90·a + 10·10a)/100 = 1.9a, ratio = 10/1.9 ≈ 5.26
        let c = cfg(20.0);
        let (s, l) = (c.short_len(), c.long_len());
        assert_eq!((s, l), (10, 100));
        let mut g = Gate::new(c).unwrap();
        for _ in 0..l {
            g.step(&sample(1.0));
        }
        let mut last = GateDecision::Blocked;
        for _ in 0..s {
            last = g.step(&sample(10.0));
        }
        assert_eq!(last, GateDecision::Pass);
        assert!((g.ratio().unwrap() - 10.0 / 1.9).abs() < 1e-9);
        assert_eq!(g.state(), GateState::Active);
    }

    #[test]
    fn all_zero_history_is_blocked() {
        let (d, r) = gate_stream(&vec![sample(0.0); 1000], &cfg(20.0)).unwrap();
        assert!(d.iter().all(|d| !d.is_pass()));
        assert_eq!(r.pass_fraction, 0.0);
    }

    #[test]
    fn short_stream_never_warms() {
        let c = cfg(20.0);
        let s: Vec<_> = (0..c.long_len() - 1).map(|i| sample(i as f64)).collect();
        let (_, r) = gate_stream(&s, &c).unwrap();
        assert_eq!(r.pass_fraction, 0.0);
    }

    #[test]
    fn duty_cycle_counts_activations() {
        use GateDecision::*;
        let r = DutyCycleReport::from_decisions(&[Blocked, Pass, Pass, Blocked, Pass]);
        assert_eq!(r.passed_samples, 3);
        assert_eq!(r.activations, 2);
        assert!((r.pass_fraction - 0.6).abs() < 1e-15);
    }
}
