//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Nominal sampling rate of the wrist sensor, in Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 102.4;

/// Channel names in storage order: accelerometer x/y/z, then gyroscope x/y/z.
pub const CHANNEL_NAMES: [&str; 6] = ["ax", "ay", "az", "gx", "gy", "gz"];

/// One timestamped reading of the tri-axial accelerometer and gyroscope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample {
    /// Seconds since session start.
    pub t: f64,
    pub accel: [f64; 3],
    /// Angular velocity as read from the device; units are never converted.
    pub gyro: [f64; 3],
}

impl SensorSample {
    pub fn new(t: f64, accel: [f64; 3], gyro: [f64; 3]) -> Self {
        Self { t, accel, gyro }
    }

    /// Channel value by storage index (0..6).
    #[inline]
    pub fn channel(&self, c: usize) -> f64 {
        if c < 3 {
            self.accel[c]
        } else {
            self.gyro[c - 3]
        }
    }

    pub fn channels(&self) -> [f64; 6] {
        [
            self.accel[0],
            self.accel[1],
            self.accel[2],
            self.gyro[0],
            self.gyro[1],
            self.gyro[2],
        ]
    }

    pub fn is_valid(&self) -> bool {
        self.t >= 0.0 && self.t.is_finite() && self.channels().iter().all(|v| v.is_finite())
    }

    /// Euclidean norm of the accelerometer axes.
    #[inline]
    pub fn resultant_acceleration(&self) -> f64 {
        resultant_acceleration(self)
    }
}

/// Euclidean norm of the three accelerometer axes.
#[inline]
pub fn resultant_acceleration(s: &SensorSample) -> f64 {
    let [x, y, z] = s.accel;
    (x * x + y * y + z * z).sqrt()
}

/// Binary target: whether the hand is moving toward the face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NoFaceTouch = 0,
    FaceTouch = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NoFaceTouch, Label::FaceTouch];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::NoFaceTouch),
            1 => Some(Label::FaceTouch),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NoFaceTouch => "no_face_touch",
            Label::FaceTouch => "face_touch",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "face_touch" | "facetouch" | "face" | "1" => Ok(Label::FaceTouch),
            "no_face_touch" | "nofacetouch" | "no_face" | "noface" | "0" => Ok(Label::NoFaceTouch),
            other => Err(Error::Parse(format!("unknown label `{other}`"))),
        }
    }
}

/// The eight recorded activities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Activity {
    ScratchHead,
    PickOverheadShelf,
    PickGround,
    Stance,
    TouchLeftEye,
    TouchRightEye,
    TouchNose,
    TouchMouth,
}

impl Activity {
    pub const ALL: [Activity; 8] = [
        Activity::ScratchHead,
        Activity::PickOverheadShelf,
        Activity::PickGround,
        Activity::Stance,
        Activity::TouchLeftEye,
        Activity::TouchRightEye,
        Activity::TouchNose,
        Activity::TouchMouth,
    ];

    pub fn label(self) -> Label {
        match self {
            Activity::TouchLeftEye | Activity::TouchRightEye | Activity::TouchNose | Activity::TouchMouth => {
                Label::FaceTouch
            }
            _ => Label::NoFaceTouch,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::ScratchHead => "scratch_head",
            Activity::PickOverheadShelf => "pick_overhead_shelf",
            Activity::PickGround => "pick_ground",
            Activity::Stance => "stance",
            Activity::TouchLeftEye => "touch_left_eye",
            Activity::TouchRightEye => "touch_right_eye",
            Activity::TouchNose => "touch_nose",
            Activity::TouchMouth => "touch_mouth",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str().replace('_', "") == key)
            .ok_or_else(|| Error::Parse(format!("unknown activity `{}`", s.trim())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stance {
    Sitting,
    Standing,
    Walking,
}

impl Stance {
    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Sitting => "sitting",
            Stance::Standing => "standing",
            Stance::Walking => "walking",
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sitting" | "sit" => Ok(Stance::Sitting),
            "standing" | "stand" => Ok(Stance::Standing),
            "walking" | "walk" => Ok(Stance::Walking),
            other => Err(Error::Parse(format!("unknown stance `{other}`"))),
        }
    }
}

/// Activity, stance, and the binary category derived from the activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActivityLabel {
    pub activity: Activity,
    pub stance: Stance,
}

impl ActivityLabel {
    pub fn new(activity: Activity, stance: Stance) -> Self {
        Self { activity, stance }
    }

    /// Face-touch iff the activity touches an eye, the nose or the mouth.
    pub fn category(&self) -> Label {
        self.activity.label()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Hand moving toward the target.
    Transition,
    /// Hand at the target.
    Contact,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Transition => "transition",
            Phase::Contact => "contact",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transition" => Ok(Phase::Transition),
            "contact" => Ok(Phase::Contact),
            other => Err(Error::Parse(format!("unknown phase `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInterval {
    pub start: f64,
    pub end: f64,
    pub phase: Phase,
}

impl PhaseInterval {
    pub fn new(start: f64, end: f64, phase: Phase) -> Self {
        Self { start, end, phase }
    }

    /// Both boundaries are inclusive.
    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// One annotated recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub participant: String,
    pub label: ActivityLabel,
    pub sample_rate: f64,
    pub samples: Vec<SensorSample>,
    pub phases: Vec<PhaseInterval>,
    /// Edge margin (seconds) already removed from each end; 0 for raw recordings.
    pub trim_margin: f64,
}

/// Outcome of [`Session::check`] when no invariant is broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionCheck {
    /// Consecutive sample gaps deviating more than 10% from the nominal period.
    pub jitter_violations: usize,
}

impl Session {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Validates every structural invariant. Sampling jitter is reported,
    /// not rejected.
    pub fn check(&self) -> Result<SessionCheck> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.is_valid() {
                return Err(Error::InvalidSample {
                    index: i,
                    reason: "non-finite channel or negative timestamp".into(),
                });
            }
            if i > 0 && s.t < self.samples[i - 1].t {
                return Err(Error::TimestampOrderViolation { row: i });
            }
        }

        let period = 1.0 / self.sample_rate;
        let jitter_violations = self
            .samples
            .windows(2)
            .filter(|w| ((w[1].t - w[0].t) - period).abs() > 0.1 * period)
            .count();

        let (first, last) = match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => (0.0, 0.0),
        };
        for p in &self.phases {
            if !(p.start < p.end) {
                return Err(Error::InvalidConfig(format!(
                    "phase interval [{}, {}] is empty",
                    p.start, p.end
                )));
            }
            if p.start < first || p.end > last {
                return Err(Error::InvalidConfig(format!(
                    "phase interval [{}, {}] lies outside the recording [{first}, {last}]",
                    p.start, p.end
                )));
            }
        }
        let mut sorted: Vec<&PhaseInterval> = self.phases.iter().collect();
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in sorted.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::InvalidConfig(format!(
                    "phase intervals [{}, {}] and [{}, {}] overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(SessionCheck { jitter_violations })
    }
}
