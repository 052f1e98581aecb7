//! Labelled feature matrices and the splits used to train and evaluate on
//! them.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::{base_feature_names, base_features, poly_expand, poly_feature_names, WindowInstance};
use crate::rng::RngSeed;
use crate::types::{Activity, Label};

/// Row-major feature matrix with one label and participant per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    labels: Vec<Label>,
    participants: Vec<String>,
    activities: Vec<Activity>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            values: Vec::new(),
            labels: Vec::new(),
            participants: Vec::new(),
            activities: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64], label: Label, participant: &str, activity: Activity) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.participants.push(participant.to_string());
        self.activities.push(activity);
        Ok(())
    }

    /// Base features of each window, optionally expanded to degree 2.
    pub fn from_windows(windows: &[WindowInstance], poly: bool) -> Result<Self> {
        let base = base_feature_names();
        let names = if poly { poly_feature_names(&base) } else { base };
        let mut ds = Dataset::new(names);
        for w in windows {
            let f = base_features(w)?;
            if poly {
                ds.push(
                    &poly_expand(f.as_slice())?,
                    w.label,
                    &w.participant,
                    w.activity.activity,
                )?;
            } else {
                ds.push(f.as_slice(), w.label, &w.participant, w.activity.activity)?;
            }
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features() + feature]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn participant(&self, i: usize) -> &str {
        &self.participants[i]
    }

    pub fn activity(&self, i: usize) -> Activity {
        self.activities[i]
    }

    /// Distinct participant ids in sorted order.
    pub fn participant_ids(&self) -> Vec<String> {
        self.participants
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    /// Rows in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let p = self.n_features();
        let mut values = Vec::with_capacity(rows.len() * p);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            participants: rows.iter().map(|&r| self.participants[r].clone()).collect(),
            activities: rows.iter().map(|&r| self.activities[r]).collect(),
        }
    }

    /// Columns in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = features.iter().find(|&&f| f >= self.n_features()) {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: bad + 1,
            });
        }
        let mut values = Vec::with_capacity(self.len() * features.len());
        for i in 0..self.len() {
            let row = self.row(i);
            values.extend(features.iter().map(|&f| row[f]));
        }
        Ok(Dataset {
            feature_names: features.iter().map(|&f| self.feature_names[f].clone()).collect(),
            values,
            labels: self.labels.clone(),
            participants: self.participants.clone(),
            activities: self.activities.clone(),
        })
    }

    /// Degree-2 expansion of every row.
    pub fn poly_expanded(&self) -> Result<Dataset> {
        let mut out = Dataset::new(poly_feature_names(&self.feature_names));
        for i in 0..self.len() {
            out.push(
                &poly_expand(self.row(i))?,
                self.labels[i],
                &self.participants[i],
                self.activities[i],
            )?;
        }
        Ok(out)
    }

    /// `participant,activity,label,<features...>`; values use shortest
    /// round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("participant,activity,label");
        for n in &self.feature_names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(
                out,
                "{},{},{}",
                self.participants[i], self.activities[i], self.labels[i]
            );
            for v in self.row(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::MissingColumn("header row".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 4 || cols[..3] != ["participant", "activity", "label"] {
            return Err(Error::MissingColumn(
                "participant,activity,label followed by features".into(),
            ));
        }
        let mut ds = Dataset::new(cols[3..].iter().map(|s| s.to_string()).collect());
        let mut row = Vec::with_capacity(ds.n_features());
        for (lineno, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |reason: String| Error::MalformedRow {
                row: lineno + 1,
                reason,
            };
            if cells.len() != cols.len() {
                return Err(bad(format!("expected {} cells, found {}", cols.len(), cells.len())));
            }
            let activity: Activity = cells[1].parse().map_err(|e: Error| bad(e.to_string()))?;
            let label: Label = cells[2].parse().map_err(|e: Error| bad(e.to_string()))?;
            row.clear();
            for c in &cells[3..] {
                let v: f64 = c
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| bad(format!("`{c}` is not a finite number")))?;
                row.push(v);
            }
            ds.push(&row, label, cells[0], activity)?;
        }
        Ok(ds)
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_csv(&text)
    }
}

/// Stratified shuffle split. The test set has `ceil(n · test_fraction)`
/// rows, shared between classes by largest remainder. Both index lists are
/// sorted.
pub fn stratified_split(labels: &[Label], test_fraction: f64, seed: RngSeed) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InsufficientData(format!(
            "test fraction {test_fraction} leaves an empty train or test set"
        )));
    }
    let n = labels.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "a train/test split needs at least 5 rows, got {n}"
        )));
    }
    let n_test = ((n as f64 * test_fraction) - 1e-9).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InsufficientData(format!(
            "{n} rows at fraction {test_fraction} leave an empty train or test set"
        )));
    }

    let by_class = class_indices(labels);
    let quotas: Vec<f64> = by_class
        .iter()
        .map(|c| n_test as f64 * c.len() as f64 / n as f64)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = n_test - take.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..by_class.len()).collect();
    // largest fractional part first; ties to the lower class index
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(by_class.len() * 2) {
        if remaining == 0 {
            break;
        }
        if take[c] < by_class[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }

    let mut rng = seed.rng();
    let mut test = Vec::with_capacity(n_test);
    let mut train = Vec::with_capacity(n - n_test);
    for (c, mut idx) in by_class.into_iter().enumerate() {
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..take[c]]);
        train.extend_from_slice(&idx[take[c]..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Stratified k-fold assignment; returns the held-out rows of each fold,
/// sorted.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: RngSeed) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut rng = seed.rng();
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0usize;
    for mut idx in class_indices(labels) {
        idx.shuffle(&mut rng);
        for i in idx {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Rows not in `held_out` (which must be sorted).
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - held_out.len());
    let mut j = 0;
    for i in 0..n {
        if j < held_out.len() && held_out[j] == i {
            j += 1;
        } else {
            out.push(i);
        }
    }
    out
}

fn class_indices(labels: &[Label]) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); 2];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    by_class
}
