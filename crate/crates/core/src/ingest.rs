//! Sensor CSV parsing, annotation alignment, edge trimming, and transition
//! extraction.
//!
//! Sensor logs are device-specific, so their layout is described by a
//! [`ColumnMapping`]. Annotations use a fixed seven-column CSV:
//!
//! ```text
//! session_id,participant,activity,stance,phase,start,end
//! ```
//!
//! where `start`/`end` are on the same clock as the sensor timestamps. Stance
//! sessions carry no intervals; they appear as a single row with empty
//! `phase`, `start` and `end`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::types::{Activity, ActivityLabel, Phase, PhaseInterval, SensorSample, Session, Stance, DEFAULT_SAMPLE_RATE};

/// Default edge margin removed from each end of a session, in seconds.
pub const DEFAULT_TRIM_MARGIN: f64 = 2.5;

const SESSION_MAGIC: &str = "# facegate session v1";
const ANNOTATION_HEADER: &str = "session_id,participant,activity,stance,phase,start,end";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    fn parse(s: &str) -> ColumnRef {
        match s.trim().parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.trim().to_string()),
        }
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => f.write_str(n),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Where each channel lives in a sensor CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMapping {
    /// t, ax, ay, az, gx, gy, gz
    pub columns: [ColumnRef; 7],
    pub delimiter: char,
    pub header: bool,
    /// Multiplier taking file timestamps to seconds (0.001 for milliseconds).
    pub time_scale: f64,
    pub sample_rate: f64,
}

const MAPPING_KEYS: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            columns: MAPPING_KEYS.map(|k| ColumnRef::Name(k.to_string())),
            delimiter: ',',
            header: true,
            time_scale: 1.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl ColumnMapping {
    /// Reads a mapping from `key=value` pairs. Missing keys keep defaults.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let mut m = ColumnMapping::default();
        for (i, key) in MAPPING_KEYS.iter().enumerate() {
            if let Some(v) = kv.get(key) {
                m.columns[i] = ColumnRef::parse(v);
            }
        }
        if let Some(d) = kv.get("delimiter") {
            m.delimiter = match d {
                "tab" | "\\t" => '\t',
                "comma" => ',',
                "semicolon" => ';',
                "space" => ' ',
                s if s.chars().count() == 1 => s.chars().next().unwrap(),
                s => return Err(Error::Parse(format!("delimiter must be one character, got `{s}`"))),
            };
        }
        if let Some(h) = kv.get_parsed::<bool>("header")? {
            m.header = h;
        }
        if let Some(s) = kv.get_parsed::<f64>("time_scale")? {
            m.time_scale = s;
        }
        if let Some(r) = kv.get_parsed::<f64>("sample_rate")? {
            m.sample_rate = r;
        }
        m.validate()?;
        Ok(m)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        for (key, col) in MAPPING_KEYS.iter().zip(&self.columns) {
            kv.push(*key, col);
        }
        let delim = match self.delimiter {
            '\t' => "tab".to_string(),
            c => c.to_string(),
        };
        kv.push("delimiter", delim)
            .push("header", self.header)
            .push("time_scale", self.time_scale)
            .push("sample_rate", self.sample_rate);
        kv
    }

    #[allow(clippy::needless_range_loop)]
    pub fn validate(&self) -> Result<()> {
        for i in 0..7 {
            for j in i + 1..7 {
                if self.columns[i] == self.columns[j] {
                    return Err(Error::InvalidConfig(format!(
                        "channels `{}` and `{}` map to the same column `{}`",
                        MAPPING_KEYS[i], MAPPING_KEYS[j], self.columns[i]
                    )));
                }
            }
        }
        if !self.header && self.columns.iter().any(|c| matches!(c, ColumnRef::Name(_))) {
            return Err(Error::InvalidConfig("named columns require a header row".into()));
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(Error::InvalidConfig("time_scale must be positive".into()));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        Ok(())
    }

    fn resolve(&self, header: Option<&[&str]>) -> Result<[usize; 7]> {
        let mut out = [0usize; 7];
        for (i, col) in self.columns.iter().enumerate() {
            out[i] = match col {
                ColumnRef::Index(idx) => *idx,
                ColumnRef::Name(name) => header
                    .and_then(|h| h.iter().position(|c| c.trim() == name))
                    .ok_or_else(|| Error::MissingColumn(name.clone()))?,
            };
        }
        for i in 0..7 {
            for j in i + 1..7 {
                if out[i] == out[j] {
                    return Err(Error::InvalidConfig(format!(
                        "channels `{}` and `{}` resolve to column {}",
                        MAPPING_KEYS[i], MAPPING_KEYS[j], out[i]
                    )));
                }
            }
        }
        Ok(out)
    }
}

/// Annotation of one session: who, what, and when each phase happened.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub session_id: String,
    pub participant: String,
    pub label: ActivityLabel,
    /// On the sensor file's clock (after `time_scale`), not session-relative.
    pub phases: Vec<PhaseInterval>,
}

/// Parses the annotation CSV. Rows sharing a `session_id` are merged in
/// order of first appearance.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut records: Vec<AnnotationRecord> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.replace(' ', "") == ANNOTATION_HEADER {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 7 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected 7 cells, found {}", cells.len()),
            });
        }
        let bad = |e: Error| Error::MalformedRow {
            row,
            reason: e.to_string(),
        };
        let activity: Activity = cells[2].parse().map_err(bad)?;
        let stance: Stance = cells[3].parse().map_err(bad)?;
        let label = ActivityLabel::new(activity, stance);

        let idx = match records.iter().position(|r| r.session_id == cells[0]) {
            Some(i) => {
                if records[i].participant != cells[1] || records[i].label != label {
                    return Err(Error::MalformedRow {
                        row,
                        reason: format!("session `{}` changes participant or label", cells[0]),
                    });
                }
                i
            }
            None => {
                records.push(AnnotationRecord {
                    session_id: cells[0].to_string(),
                    participant: cells[1].to_string(),
                    label,
                    phases: Vec::new(),
                });
                records.len() - 1
            }
        };

        if cells[4].is_empty() && cells[5].is_empty() && cells[6].is_empty() {
            continue;
        }
        let phase: Phase = cells[4].parse().map_err(bad)?;
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    row,
                    reason: format!("`{s}` is not a number"),
                })
        };
        let (start, end) = (num(cells[5])?, num(cells[6])?);
        if !(start < end) {
            return Err(Error::MalformedRow {
                row,
                reason: format!("interval start {start} is not before end {end}"),
            });
        }
        records[idx].phases.push(PhaseInterval::new(start, end, phase));
    }

    for r in &records {
        if r.label.activity != Activity::Stance && r.phases.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "session `{}` ({}) has no phase intervals",
                r.session_id, r.label.activity
            )));
        }
    }
    Ok(records)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text)
}

pub fn write_annotations(records: &[AnnotationRecord]) -> String {
    let mut out = String::new();
    out.push_str(ANNOTATION_HEADER);
    out.push('\n');
    for r in records {
        let prefix = format!(
            "{},{},{},{}",
            r.session_id, r.participant, r.label.activity, r.label.stance
        );
        if r.phases.is_empty() {
            let _ = writeln!(out, "{prefix},,,");
        }
        for p in &r.phases {
            let _ = writeln!(out, "{prefix},{},{},{}", p.phase, p.start, p.end);
        }
    }
    out
}

/// Parses sensor rows into samples on the file's own clock (scaled to
/// seconds). Row numbers in errors are 1-based file line numbers.
pub fn parse_sensor_csv(text: &str, mapping: &ColumnMapping) -> Result<Vec<SensorSample>> {
    mapping.validate()?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header: Option<Vec<&str>> = if mapping.header {
        let (_, h) = lines.next().ok_or_else(|| Error::MissingColumn("header row".into()))?;
        Some(h.split(mapping.delimiter).map(str::trim).collect())
    } else {
        None
    };
    let cols = mapping.resolve(header.as_deref())?;
    let width = cols.iter().copied().max().unwrap_or(0) + 1;
    let expected_arity = header.as_ref().map(|h| h.len());

    let mut samples: Vec<SensorSample> = Vec::new();
    for (lineno, line) in lines {
        let row = lineno + 1;
        let cells: Vec<&str> = line.split(mapping.delimiter).map(str::trim).collect();
        if let Some(n) = expected_arity {
            if cells.len() != n {
                return Err(Error::MalformedRow {
                    row,
                    reason: format!("expected {n} cells, found {}", cells.len()),
                });
            }
        } else if cells.len() < width {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected at least {width} cells, found {}", cells.len()),
            });
        }
        let mut v = [0.0f64; 7];
        for (k, &c) in cols.iter().enumerate() {
            let cell = cells[c];
            v[k] = cell
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    row,
                    reason: format!("column `{}` holds non-numeric value `{cell}`", MAPPING_KEYS[k]),
                })?;
        }
        let t = v[0] * mapping.time_scale;
        if let Some(prev) = samples.last() {
            if t < prev.t {
                return Err(Error::TimestampOrderViolation { row });
            }
        }
        samples.push(SensorSample::new(t, [v[1], v[2], v[3]], [v[4], v[5], v[6]]));
    }
    Ok(samples)
}

/// Writes samples back through `mapping` with 9 significant digits.
/// Timestamps are written as given (divide by `time_scale` to restore units).
pub fn write_sensor_csv(samples: &[SensorSample], mapping: &ColumnMapping) -> Result<String> {
    mapping.validate()?;
    let names: Vec<String> = mapping
        .columns
        .iter()
        .zip(MAPPING_KEYS)
        .map(|(c, k)| match c {
            ColumnRef::Name(n) => n.clone(),
            ColumnRef::Index(_) => k.to_string(),
        })
        .collect();
    let cols: [usize; 7] = match mapping.columns.iter().all(|c| matches!(c, ColumnRef::Index(_))) {
        true => mapping.resolve(None)?,
        false => {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            mapping.resolve(Some(&refs))?
        }
    };
    let width = cols.iter().copied().max().unwrap_or(0) + 1;
    let delim = mapping.delimiter.to_string();

    let mut out = String::new();
    if mapping.header {
        let mut header = vec![String::new(); width];
        for (k, &c) in cols.iter().enumerate() {
            header[c] = names[k].clone();
        }
        for (i, h) in header.iter_mut().enumerate() {
            if h.is_empty() {
                *h = format!("unused{i}");
            }
        }
        out.push_str(&header.join(&delim));
        out.push('\n');
    }
    for s in samples {
        let mut row = vec!["0".to_string(); width];
        let values = [
            s.t / mapping.time_scale,
            s.accel[0],
            s.accel[1],
            s.accel[2],
            s.gyro[0],
            s.gyro[1],
            s.gyro[2],
        ];
        for (k, &c) in cols.iter().enumerate() {
            row[c] = format!("{:.8e}", values[k]);
        }
        out.push_str(&row.join(&delim));
        out.push('\n');
    }
    Ok(out)
}

/// Loads one sensor file and aligns its annotation to session-relative time.
pub fn load_session(sensor_file: &Path, annotation: &AnnotationRecord, mapping: &ColumnMapping) -> Result<Session> {
    let text = std::fs::read_to_string(sensor_file).map_err(|e| Error::io(sensor_file, e))?;
    session_from_csv(&text, annotation, mapping)
}

/// [`load_session`] over in-memory CSV text.
pub fn session_from_csv(text: &str, annotation: &AnnotationRecord, mapping: &ColumnMapping) -> Result<Session> {
    let mut samples = parse_sensor_csv(text, mapping)?;
    let origin = samples.first().map(|s| s.t).unwrap_or(0.0);
    for s in &mut samples {
        s.t -= origin;
    }
    let phases = annotation
        .phases
        .iter()
        .map(|p| PhaseInterval::new(p.start - origin, p.end - origin, p.phase))
        .collect();
    let session = Session {
        participant: annotation.participant.clone(),
        label: annotation.label,
        sample_rate: mapping.sample_rate,
        samples,
        phases,
        trim_margin: 0.0,
    };
    let check = session.check()?;
    if check.jitter_violations > 0 {
        log::warn!(
            "session `{}`: {} sample gaps deviate more than 10% from the nominal period",
            annotation.session_id,
            check.jitter_violations
        );
    }
    Ok(session)
}

/// Removes `margin` seconds from both ends and clips phase intervals to what
/// remains.
///
/// A session remembers the margin it was trimmed with; trimming again with a
/// margin no larger than that is a no-op, and a larger margin only removes the
/// difference.
pub fn trim_session(s: &Session, margin: f64) -> Result<Session> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "trim margin must be non-negative, got {margin}"
        )));
    }
    if margin <= s.trim_margin {
        return Ok(s.clone());
    }
    let cut = margin - s.trim_margin;
    let duration = s.duration();
    if duration <= 2.0 * cut {
        return Err(Error::SessionTooShort { duration, margin: cut });
    }
    let first = s.samples[0].t;
    let last = s.samples[s.samples.len() - 1].t;
    let (lo, hi) = (first + cut, last - cut);
    let samples: Vec<SensorSample> = s.samples.iter().filter(|x| x.t >= lo && x.t <= hi).copied().collect();
    let (kept_lo, kept_hi) = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::SessionTooShort { duration, margin: cut }),
    };
    let phases = s
        .phases
        .iter()
        .filter_map(|p| {
            let start = p.start.max(kept_lo);
            let end = p.end.min(kept_hi);
            (start < end).then(|| PhaseInterval::new(start, end, p.phase))
        })
        .collect();
    Ok(Session {
        participant: s.participant.clone(),
        label: s.label,
        sample_rate: s.sample_rate,
        samples,
        phases,
        trim_margin: margin,
    })
}

/// Samples recorded during one transition interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<'a> {
    pub samples: &'a [SensorSample],
    pub label: ActivityLabel,
    pub interval: PhaseInterval,
}

/// One slice per transition interval, boundaries inclusive. Contact phases
/// are skipped.
pub fn extract_transitions(s: &Session) -> Vec<Transition<'_>> {
    let mut intervals: Vec<PhaseInterval> = s
        .phases
        .iter()
        .filter(|p| p.phase == Phase::Transition)
        .copied()
        .collect();
    intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
    intervals
        .into_iter()
        .map(|iv| {
            let lo = s.samples.partition_point(|x| x.t < iv.start);
            let hi = s.samples.partition_point(|x| x.t <= iv.end);
            Transition {
                samples: &s.samples[lo..hi.max(lo)],
                label: s.label,
                interval: iv,
            }
        })
        .collect()
}

/// Serializes a session as a self-describing text document. Values use
/// shortest round-trip formatting, so reading it back is exact.
pub fn write_session(s: &Session) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SESSION_MAGIC}");
    let _ = writeln!(out, "participant={}", s.participant);
    let _ = writeln!(out, "activity={}", s.label.activity);
    let _ = writeln!(out, "stance={}", s.label.stance);
    let _ = writeln!(out, "sample_rate={}", s.sample_rate);
    let _ = writeln!(out, "trim_margin={}", s.trim_margin);
    for p in &s.phases {
        let _ = writeln!(out, "phase={},{},{}", p.phase, p.start, p.end);
    }
    let _ = writeln!(out, "samples={}", s.samples.len());
    out.push_str("t,ax,ay,az,gx,gy,gz\n");
    for x in &s.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            x.t, x.accel[0], x.accel[1], x.accel[2], x.gyro[0], x.gyro[1], x.gyro[2]
        );
    }
    out
}

pub fn parse_session(text: &str) -> Result<Session> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == SESSION_MAGIC => {}
        _ => return Err(Error::Parse("missing session file header".into())),
    }
    let mut meta = KeyValues::new();
    let mut phases = Vec::new();
    let mut count: Option<usize> = None;
    for (lineno, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::MalformedRow {
            row: lineno + 1,
            reason: format!("expected key=value, got `{line}`"),
        })?;
        match k {
            "phase" => {
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::MalformedRow {
                        row: lineno + 1,
                        reason: "phase needs kind,start,end".into(),
                    });
                }
                let p: Phase = parts[0].parse()?;
                let num = |s: &str| {
                    s.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                        row: lineno + 1,
                        reason: format!("`{s}` is not a number"),
                    })
                };
                phases.push(PhaseInterval::new(num(parts[1])?, num(parts[2])?, p));
            }
            "samples" => {
                count = Some(v.trim().parse().map_err(|_| Error::MalformedRow {
                    row: lineno + 1,
                    reason: "bad sample count".into(),
                })?);
                break;
            }
            _ => {
                meta.push(k.trim(), v.trim());
            }
        }
    }
    let count = count.ok_or_else(|| Error::Parse("missing `samples=` line".into()))?;
    match lines.next() {
        Some((_, h)) if h.trim() == "t,ax,ay,az,gx,gy,gz" => {}
        _ => return Err(Error::MissingColumn("t,ax,ay,az,gx,gy,gz".into())),
    }
    let mut samples = Vec::with_capacity(count);
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut v = [0.0; 7];
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::MalformedRow {
                row: lineno + 1,
                reason: format!("expected 7 cells, found {}", cells.len()),
            });
        }
        for (k, c) in cells.iter().enumerate() {
            v[k] = c.trim().parse().map_err(|_| Error::MalformedRow {
                row: lineno + 1,
                reason: format!("`{c}` is not a number"),
            })?;
        }
        samples.push(SensorSample::new(v[0], [v[1], v[2], v[3]], [v[4], v[5], v[6]]));
    }
    if samples.len() != count {
        return Err(Error::Parse(format!(
            "expected {count} samples, found {}",
            samples.len()
        )));
    }
    let need = |k: &str| meta.get(k).ok_or_else(|| Error::MissingColumn(k.to_string()));
    let session = Session {
        participant: need("participant")?.to_string(),
        label: ActivityLabel::new(need("activity")?.parse()?, need("stance")?.parse()?),
        sample_rate: need("sample_rate")?
            .parse()
            .map_err(|_| Error::Parse("bad sample_rate".into()))?,
        samples,
        phases,
        trim_margin: meta.get_parsed("trim_margin")?.unwrap_or(0.0),
    };
    session.check()?;
    Ok(session)
}

pub fn read_session(path: &Path) -> Result<Session> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_session(&text)
}

/// Reads every `*.session` file in `dir`, sorted by file name.
pub fn read_session_dir(dir: &Path) -> Result<Vec<Session>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "session"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_session(p)).collect()
}
