//! Evaluation protocols: held-out split, leave-one-participant-out, window
//! and feature-count sweeps, and the participant-variance PCA study.
//!
//! Face-touch is the positive class throughout.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{stratified_split, Dataset};
use crate::error::{Error, Result};
use crate::features::DEFAULT_WINDOW_SECONDS;
use crate::forest::{train_forest, Classifier, Forest, ForestConfig};
use crate::kv::KeyValues;
use crate::rng::RngSeed;
use crate::types::{Label, Session};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
/// Accuracy slack of the elbow rule: smallest k within half a point of the
/// best.
pub const ELBOW_TOLERANCE: f64 = 0.005;
pub const WINDOW_SWEEP_SIZES: [f64; 7] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(predictions: &[Label], truths: &[Label]) -> Result<Self> {
        if predictions.len() != truths.len() {
            return Err(Error::LengthMismatch {
                predictions: predictions.len(),
                truths: truths.len(),
            });
        }
        let mut m = ConfusionMatrix::default();
        for (&p, &t) in predictions.iter().zip(truths) {
            m.record(p, t);
        }
        Ok(m)
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::FaceTouch, Label::FaceTouch) => self.tp += 1,
            (Label::FaceTouch, Label::NoFaceTouch) => self.fp += 1,
            (Label::NoFaceTouch, Label::NoFaceTouch) => self.tn += 1,
            (Label::NoFaceTouch, Label::FaceTouch) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// fp / (fp + tn); 0 when there are no negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    /// fn / (fn + tp); 0 when there are no positives.
    pub fn fnr(&self) -> f64 {
        ratio(self.fn_, self.fn_ + self.tp)
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `model` on the given rows.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, data: &Dataset, rows: &[usize]) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::default();
    for &i in rows {
        m.record(model.predict(data.row(i))?.label, data.label(i));
    }
    Ok(m)
}

fn all_rows(data: &Dataset) -> Vec<usize> {
    (0..data.len()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Split,
    LeaveOneOut,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Split => "split",
            EvalMode::LeaveOneOut => "loo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantScore {
    pub participant: String,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub confusion: ConfusionMatrix,
    /// Split: pooled accuracy. Leave-one-out: unweighted mean over
    /// participants.
    pub accuracy: f64,
    /// Always `(tp + tn) / total` of `confusion`.
    pub pooled_accuracy: f64,
    pub fpr: f64,
    pub fnr: f64,
    /// Leave-one-out folds in participant order; empty for a split.
    pub per_participant: Vec<ParticipantScore>,
    pub config: ForestConfig,
    pub features: Vec<String>,
}

impl EvalReport {
    fn new(
        mode: EvalMode,
        confusion: ConfusionMatrix,
        accuracy: f64,
        per_participant: Vec<ParticipantScore>,
        config: ForestConfig,
        features: Vec<String>,
    ) -> Self {
        Self {
            mode,
            confusion,
            accuracy,
            pooled_accuracy: confusion.accuracy(),
            fpr: confusion.fpr(),
            fnr: confusion.fnr(),
            per_participant,
            config,
            features,
        }
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        let c = &self.confusion;
        kv.push("mode", self.mode.as_str())
            .push("accuracy", self.accuracy)
            .push("pooled_accuracy", self.pooled_accuracy)
            .push("fpr", self.fpr)
            .push("fnr", self.fnr)
            .push("tp", c.tp)
            .push("fp", c.fp)
            .push("tn", c.tn)
            .push("fn", c.fn_)
            .push("test_rows", c.total())
            .push("feature_count", self.features.len());
        for p in &self.per_participant {
            kv.push(format!("participant.{}.accuracy", p.participant), p.accuracy);
            kv.push(format!("participant.{}.rows", p.participant), p.confusion.total());
        }
        for (k, v) in self.config.to_kv().iter() {
            kv.push(format!("config.{k}"), v);
        }
        kv
    }

    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        let mut s = format!(
            "evaluation: {}\n\
             accuracy: {:.4}\n\
             fpr: {:.4}\n\
             fnr: {:.4}\n\
             features: {}\n\n\
             confusion (rows = truth, cols = predicted)\n\
             \x20               no_face  face\n\
             no_face_touch   {:>7}  {:>4}\n\
             face_touch      {:>7}  {:>4}\n",
            match self.mode {
                EvalMode::Split => "train-test split",
                EvalMode::LeaveOneOut => "leave one participant out",
            },
            self.accuracy,
            self.fpr,
            self.fnr,
            self.features.len(),
            c.tn,
            c.fp,
            c.fn_,
            c.tp
        );
        if !self.per_participant.is_empty() {
            s.push_str("\nper participant\n");
            for p in &self.per_participant {
                s.push_str(&format!(
                    "  {:<12} {:.4}  ({} rows)\n",
                    p.participant,
                    p.accuracy,
                    p.confusion.total()
                ));
            }
        }
        s
    }

    /// `participant,accuracy` rows (leave-one-out).
    pub fn participants_csv(&self) -> String {
        let mut s = String::from("participant,accuracy\n");
        for p in &self.per_participant {
            s.push_str(&format!("{},{}\n", p.participant, p.accuracy));
        }
        s
    }
}

/// Stratified split into train and test datasets.
pub fn split_train_test(data: &Dataset, test_fraction: f64, seed: RngSeed) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split(data.labels(), test_fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}

fn names(data: &Dataset) -> Vec<String> {
    data.feature_names().to_vec()
}

/// Trains on the split's training part, tests on the rest. With `top_k`,
/// features are first ranked by a forest trained on the training part and
/// the model is retrained on the `top_k` best.
pub fn train_test_eval(
    data: &Dataset,
    config: &ForestConfig,
    test_fraction: f64,
    seed: RngSeed,
    top_k: Option<usize>,
) -> Result<(EvalReport, Forest)> {
    let (mut train, mut test) = split_train_test(data, test_fraction, seed)?;
    let mut forest = train_forest(&train, config)?;
    if let Some(k) = top_k.filter(|&k| k < data.n_features()) {
        let keep: Vec<usize> = forest.ranked_features().into_iter().take(k.max(1)).collect();
        train = train.select_features(&keep)?;
        test = test.select_features(&keep)?;
        forest = train_forest(&train, config)?;
    }
    let m = evaluate(&forest, &test, &all_rows(&test))?;
    let report = EvalReport::new(EvalMode::Split, m, m.accuracy(), vec![], *config, names(&train));
    Ok((report, forest))
}

/// One fold per participant (sorted by id): train on everyone else, test on
/// that participant.
pub fn leave_one_out(data: &Dataset, config: &ForestConfig, features: Option<&[usize]>) -> Result<EvalReport> {
    let selected;
    let data = match features {
        Some(f) => {
            selected = data.select_features(f)?;
            &selected
        }
        None => data,
    };
    let ids = data.participant_ids();
    if ids.len() < 2 {
        return Err(Error::SingleParticipant);
    }
    let mut total = ConfusionMatrix::default();
    let mut per = Vec::with_capacity(ids.len());
    for id in &ids {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| data.participant(i) == id);
        let forest = train_forest(&data.subset(&train), config)?;
        let m = evaluate(&forest, data, &test)?;
        total.merge(&m);
        per.push(ParticipantScore {
            participant: id.clone(),
            confusion: m,
            accuracy: m.accuracy(),
        });
    }
    let mean = per.iter().map(|p| p.accuracy).sum::<f64>() / per.len() as f64;
    Ok(EvalReport::new(
        EvalMode::LeaveOneOut,
        total,
        mean,
        per,
        *config,
        names(data),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSweepRow {
    pub window_seconds: f64,
    pub windows: usize,
    pub accuracy: f64,
}

/// Re-segments, re-featurizes, retrains and scores a held-out split for
/// each window length. Every size uses the same `seed`.
pub fn sweep_window_size(
    sessions: &[Session],
    sizes: &[f64],
    config: &ForestConfig,
    test_fraction: f64,
    seed: RngSeed,
    poly: bool,
) -> Result<Vec<WindowSweepRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut windows = Vec::new();
        for s in sessions {
            windows.extend(crate::features::session_windows(s, size)?);
        }
        let data = Dataset::from_windows(&windows, poly)?;
        let (report, _) = train_test_eval(&data, config, test_fraction, seed, None)?;
        rows.push(WindowSweepRow {
            window_seconds: size,
            windows: data.len(),
            accuracy: report.accuracy,
        });
    }
    Ok(rows)
}

pub fn window_sweep_csv(rows: &[WindowSweepRow]) -> String {
    let mut s = String::from("window_seconds,accuracy\n");
    for r in rows {
        s.push_str(&format!("{},{}\n", r.window_seconds, r.accuracy));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSweep {
    /// `(k, accuracy)` in increasing k.
    pub rows: Vec<(usize, f64)>,
    pub elbow_k: usize,
    /// Feature indices by decreasing importance.
    pub ranking: Vec<usize>,
}

impl FeatureSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,accuracy\n");
        for (k, a) in &self.rows {
            s.push_str(&format!("{k},{a}\n"));
        }
        s
    }
}

/// Feature indices by decreasing importance; ties keep the lower index.
pub fn rank_by_importance(importances: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importances.len()).collect();
    idx.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    idx
}

/// Smallest k whose accuracy is within [`ELBOW_TOLERANCE`] of the best.
pub fn elbow(rows: &[(usize, f64)]) -> Option<usize> {
    let best = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    rows.iter().filter(|r| r.1 >= best - ELBOW_TOLERANCE).map(|r| r.0).min()
}

/// Retrains on the top `step, 2·step, ...` features (always ending at every
/// feature) and scores each on the same held-out split.
pub fn sweep_feature_count(
    data: &Dataset,
    importances: &[f64],
    step: usize,
    config: &ForestConfig,
    test_fraction: f64,
    seed: RngSeed,
) -> Result<FeatureSweep> {
    if importances.len() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            found: importances.len(),
        });
    }
    if step == 0 {
        return Err(Error::InvalidConfig("feature step must be positive".into()));
    }
    let ranking = rank_by_importance(importances);
    let (train, test) = split_train_test(data, test_fraction, seed)?;
    let p = data.n_features();
    let mut ks: Vec<usize> = (1..).map(|i| i * step).take_while(|&k| k < p).collect();
    ks.push(p);

    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let (tr, te) = if k == p {
            (train.clone(), test.clone())
        } else {
            let keep = &ranking[..k];
            (train.select_features(keep)?, test.select_features(keep)?)
        };
        let forest = train_forest(&tr, config)?;
        let acc = evaluate(&forest, &te, &all_rows(&te))?.accuracy();
        rows.push((k, acc));
    }
    let elbow_k = elbow(&rows).unwrap_or(p);
    Ok(FeatureSweep { rows, elbow_k, ranking })
}

/// Every principal component's share of total variance after standardizing
/// each column to zero mean and unit (population) variance, largest first.
/// Constant columns are dropped.
pub fn variance_shares(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    if n < 2 || p == 0 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 rows and 1 column, got {n}x{p}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var <= 0.0 || col.iter().all(|&v| v == col[0]) {
            log::warn!("PCA: dropping constant column {j}");
            continue;
        }
        let sd = var.sqrt();
        cols.push(col.iter().map(|v| (v - mean) / sd).collect());
    }
    if cols.is_empty() {
        return Err(Error::InsufficientData("every PCA column is constant".into()));
    }
    let q = cols.len();
    let mut cov = DMatrix::<f64>::zeros(q, q);
    for a in 0..q {
        for b in a..q {
            let s = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = vals.iter().sum();
    Ok(vals.into_iter().map(|v| v / total).collect())
}

/// First-component variance percentage for the first 1, 2, ..., P
/// participants (sorted by id).
pub fn pca_first_component_variance(data: &Dataset) -> Result<Vec<(usize, f64)>> {
    let ids = data.participant_ids();
    if ids.is_empty() {
        return Err(Error::InsufficientData("no participants".into()));
    }
    let mut out = Vec::with_capacity(ids.len());
    for k in 1..=ids.len() {
        let included = &ids[..k];
        let rows: Vec<&[f64]> = (0..data.len())
            .filter(|&i| included.iter().any(|id| id == data.participant(i)))
            .map(|i| data.row(i))
            .collect();
        let shares = variance_shares(&rows)?;
        out.push((k, 100.0 * shares[0]));
    }
    Ok(out)
}

pub fn pca_csv(rows: &[(usize, f64)]) -> String {
    let mut s = String::from("participants,first_component_variance_pct\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

/// Default window length used when none is configured.
pub fn default_window() -> f64 {
    DEFAULT_WINDOW_SECONDS
}
