use rand::seq::IndexedRandom;

use super::{train_forest, ForestConfig, MaxFeatures, UNBOUNDED_DEPTH};
use crate::dataset::{complement, stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::rng::RngSeed;

const MAX_REDRAWS: usize = 10_000;

/// Candidate values per hyperparameter for randomized search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub bootstrap: Vec<bool>,
    pub max_features: Vec<MaxFeatures>,
    pub n_draws: usize,
    pub folds: usize,
    pub seed: RngSeed,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 150, 200],
            max_depth: vec![5, 10, 15, UNBOUNDED_DEPTH],
            min_samples_leaf: vec![1, 5, 10],
            min_samples_split: vec![2, 10, 20, 40],
            bootstrap: vec![true, false],
            max_features: vec![MaxFeatures::Sqrt, MaxFeatures::Log2],
            n_draws: 25,
            folds: 5,
            seed: RngSeed(42),
        }
    }
}

fn parse_list<T>(v: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split([',', ' '])
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(s.trim()))
        .collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws < 1 {
            return Err(Error::InvalidConfig("draws must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be at least 2".into()));
        }
        let empty = [
            ("n_trees", self.n_trees.is_empty()),
            ("max_depth", self.max_depth.is_empty()),
            ("min_samples_leaf", self.min_samples_leaf.is_empty()),
            ("min_samples_split", self.min_samples_split.is_empty()),
            ("bootstrap", self.bootstrap.is_empty()),
            ("max_features", self.max_features.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("search space for {name} is empty")));
        }
        let any_valid = self
            .min_samples_leaf
            .iter()
            .any(|&l| self.min_samples_split.iter().any(|&s| l >= 1 && s >= 2 * l));
        if !any_valid {
            return Err(Error::InvalidConfig(
                "no min_samples_split candidate is at least twice a min_samples_leaf candidate".into(),
            ));
        }
        Ok(())
    }

    /// Lists are comma-separated (`n_trees=50,100`); `max_depth` accepts
    /// `none`.
    pub fn overlay(mut self, kv: &KeyValues) -> Result<Self> {
        let usize_list = |v: &str| {
            parse_list(v, |s| {
                s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
            })
        };
        if let Some(v) = kv.get("n_trees") {
            self.n_trees = usize_list(v)?;
        }
        if let Some(v) = kv.get("max_depth") {
            self.max_depth = parse_list(v, super::parse_depth)?;
        }
        if let Some(v) = kv.get("min_samples_leaf") {
            self.min_samples_leaf = usize_list(v)?;
        }
        if let Some(v) = kv.get("min_samples_split") {
            self.min_samples_split = usize_list(v)?;
        }
        if let Some(v) = kv.get("bootstrap") {
            self.bootstrap = parse_list(v, |s| {
                s.parse::<bool>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
            })?;
        }
        if let Some(v) = kv.get("max_features") {
            self.max_features = parse_list(v, |s| s.parse())?;
        }
        if let Some(v) = kv.get_parsed("draws")? {
            self.n_draws = v;
        }
        if let Some(v) = kv.get_parsed("folds")? {
            self.folds = v;
        }
        if let Some(v) = kv.get_parsed::<u64>("seed")? {
            self.seed = RngSeed(v);
        }
        Ok(self)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("n_trees", join(&self.n_trees))
            .push("max_depth", join(&self.max_depth))
            .push("min_samples_leaf", join(&self.min_samples_leaf))
            .push("min_samples_split", join(&self.min_samples_split))
            .push("bootstrap", join(&self.bootstrap))
            .push("max_features", join(&self.max_features))
            .push("draws", self.n_draws)
            .push("folds", self.folds)
            .push("seed", self.seed.0);
        kv
    }

    /// `n_draws` configurations, each hyperparameter drawn uniformly and
    /// independently; combinations violating the config invariants are
    /// redrawn.
    pub fn draw(&self) -> Result<Vec<ForestConfig>> {
        self.validate()?;
        let mut rng = self.seed.child(1).rng();
        let mut out = Vec::with_capacity(self.n_draws);
        for _ in 0..self.n_draws {
            let mut drawn = None;
            for _ in 0..MAX_REDRAWS {
                let c = ForestConfig {
                    n_trees: *self.n_trees.choose(&mut rng).unwrap(),
                    max_depth: *self.max_depth.choose(&mut rng).unwrap(),
                    min_samples_leaf: *self.min_samples_leaf.choose(&mut rng).unwrap(),
                    min_samples_split: *self.min_samples_split.choose(&mut rng).unwrap(),
                    bootstrap: *self.bootstrap.choose(&mut rng).unwrap(),
                    max_features: *self.max_features.choose(&mut rng).unwrap(),
                    seed: self.seed,
                };
                if c.validate().is_ok() {
                    drawn = Some(c);
                    break;
                }
            }
            out.push(
                drawn.ok_or_else(|| Error::InvalidConfig("search space rarely yields a valid configuration".into()))?,
            );
        }
        Ok(out)
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub config: ForestConfig,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: ForestConfig,
    /// In draw order.
    pub table: Vec<CvRow>,
}

impl SearchResult {
    pub fn best_row(&self) -> &CvRow {
        self.table
            .iter()
            .find(|r| r.config == self.best)
            .expect("best config comes from the table")
    }

    /// `draw,n_trees,...,mean_accuracy,std_accuracy` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "draw,n_trees,max_depth,min_samples_leaf,min_samples_split,bootstrap,max_features,mean_accuracy,std_accuracy\n",
        );
        for (i, r) in self.table.iter().enumerate() {
            let c = &r.config;
            out.push_str(&format!(
                "{i},{},{},{},{},{},{},{},{}\n",
                c.n_trees,
                c.max_depth,
                c.min_samples_leaf,
                c.min_samples_split,
                c.bootstrap,
                c.max_features,
                r.mean_accuracy,
                r.std_accuracy
            ));
        }
        out
    }
}

/// Stratified k-fold accuracy of `config` on `data`.
pub fn cross_validate(data: &Dataset, config: &ForestConfig, folds: usize, seed: RngSeed) -> Result<CvRow> {
    let held_out = stratified_kfold(data.labels(), folds, seed)?;
    let mut scores = Vec::with_capacity(folds);
    for test in &held_out {
        let train = data.subset(&complement(data.len(), test));
        let forest = train_forest(&train, config)?;
        let mut correct = 0usize;
        for &i in test {
            if forest.predict(data.row(i))?.label == data.label(i) {
                correct += 1;
            }
        }
        scores.push(correct as f64 / test.len() as f64);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
    Ok(CvRow {
        config: *config,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        fold_accuracies: scores,
    })
}

/// Randomized search: every drawn configuration is scored on the same
/// stratified folds; the highest mean wins, ties going to the earlier draw.
pub fn randomized_search(data: &Dataset, space: &SearchSpace) -> Result<SearchResult> {
    let configs = space.draw()?;
    if data.len() < space.folds {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill {} folds",
            data.len(),
            space.folds
        )));
    }
    let fold_seed = space.seed.child(2);
    let mut table = Vec::with_capacity(configs.len());
    for c in &configs {
        table.push(cross_validate(data, c, space.folds, fold_seed)?);
    }
    let mut best = 0;
    for (i, r) in table.iter().enumerate() {
        if r.mean_accuracy > table[best].mean_accuracy {
            best = i;
        }
    }
    Ok(SearchResult {
        best: table[best].config,
        table,
    })
}
