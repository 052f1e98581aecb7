//! CART decision trees and random forests for the binary face-touch target.

mod ensemble;
mod model_io;
mod search;
mod tree;

use std::fmt;
use std::str::FromStr;

pub use ensemble::{train_forest, Forest};
pub use model_io::{load_model, read_model, save_model, write_model, MODEL_FORMAT_VERSION};
pub use search::{cross_validate, randomized_search, CvRow, SearchResult, SearchSpace};
pub use tree::{train_tree, DecisionTree, Node};

use crate::error::{Error, Result};
use crate::features::POLY_FEATURE_COUNT;
use crate::kv::KeyValues;
use crate::rng::RngSeed;
use crate::types::Label;

/// `max_depth = none` is stored as this cap.
pub const UNBOUNDED_DEPTH: usize = POLY_FEATURE_COUNT;

/// How many candidate features each split examines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    /// Number of features to draw out of `p`, at least 1.
    pub fn resolve(&self, p: usize) -> usize {
        let k = match *self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (p as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (p as f64).log2().floor() as usize,
            MaxFeatures::Count(k) => k,
            MaxFeatures::Fraction(f) => (f * p as f64).floor() as usize,
        };
        k.clamp(1, p.max(1))
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::Log2 => f.write_str("log2"),
            MaxFeatures::Count(k) => write!(f, "{k}"),
            MaxFeatures::Fraction(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "all" | "none" => return Ok(MaxFeatures::All),
            "sqrt" | "auto" => return Ok(MaxFeatures::Sqrt),
            "log2" => return Ok(MaxFeatures::Log2),
            _ => {}
        }
        if let Ok(k) = s.parse::<usize>() {
            return if k == 0 {
                Err(Error::InvalidConfig("max_features count must be at least 1".into()))
            } else {
                Ok(MaxFeatures::Count(k))
            };
        }
        match s.parse::<f64>() {
            Ok(x) if x > 0.0 && x <= 1.0 => Ok(MaxFeatures::Fraction(x)),
            _ => Err(Error::InvalidConfig(format!(
                "max_features must be all, sqrt, log2, a count, or a fraction in (0, 1]; got `{s}`"
            ))),
        }
    }
}

/// Forest hyperparameters. Defaults are the tuned values for the 1540-term
/// feature set; `max_features` defaults to `sqrt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub seed: RngSeed,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 150,
            max_depth: 10,
            min_samples_leaf: 5,
            min_samples_split: 20,
            bootstrap: false,
            max_features: MaxFeatures::Sqrt,
            seed: RngSeed(42),
        }
    }
}

pub const CONFIG_KEYS: [&str; 7] = [
    "n_trees",
    "max_depth",
    "min_samples_leaf",
    "min_samples_split",
    "bootstrap",
    "max_features",
    "seed",
];

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig("min_samples_leaf must be at least 1".into()));
        }
        if self.min_samples_split < 2 * self.min_samples_leaf {
            return Err(Error::InvalidConfig(format!(
                "min_samples_split ({}) must be at least twice min_samples_leaf ({})",
                self.min_samples_split, self.min_samples_leaf
            )));
        }
        match self.max_features {
            MaxFeatures::Count(0) => return Err(Error::InvalidConfig("max_features count must be at least 1".into())),
            MaxFeatures::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::InvalidConfig("max_features fraction must be in (0, 1]".into()))
            }
            _ => {}
        }
        Ok(())
    }

    /// Applies any [`CONFIG_KEYS`] present in `kv` on top of `self`.
    pub fn overlay(mut self, kv: &KeyValues) -> Result<Self> {
        if let Some(v) = kv.get_parsed("n_trees")? {
            self.n_trees = v;
        }
        if let Some(v) = kv.get("max_depth") {
            self.max_depth = parse_depth(v)?;
        }
        if let Some(v) = kv.get_parsed("min_samples_leaf")? {
            self.min_samples_leaf = v;
        }
        if let Some(v) = kv.get_parsed("min_samples_split")? {
            self.min_samples_split = v;
        }
        if let Some(v) = kv.get_parsed("bootstrap")? {
            self.bootstrap = v;
        }
        if let Some(v) = kv.get("max_features") {
            self.max_features = v.parse()?;
        }
        if let Some(v) = kv.get_parsed::<u64>("seed")? {
            self.seed = RngSeed(v);
        }
        Ok(self)
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let c = ForestConfig::default().overlay(kv)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("n_trees", self.n_trees)
            .push("max_depth", self.max_depth)
            .push("min_samples_leaf", self.min_samples_leaf)
            .push("min_samples_split", self.min_samples_split)
            .push("bootstrap", self.bootstrap)
            .push("max_features", self.max_features)
            .push("seed", self.seed.0);
        kv
    }
}

/// Parses a depth; `none` maps to [`UNBOUNDED_DEPTH`].
pub fn parse_depth(s: &str) -> Result<usize> {
    match s.trim().to_ascii_lowercase().as_str() {
        "none" | "unbounded" => Ok(UNBOUNDED_DEPTH),
        v => v
            .parse()
            .map_err(|_| Error::Parse(format!("max_depth must be an integer or `none`, got `{s}`"))),
    }
}

/// A forest or tree verdict with per-class vote counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub label: Label,
    /// Indexed by [`Label::index`].
    pub votes: [usize; 2],
}

impl Prediction {
    /// Plurality; a tie goes to the lower class index.
    pub fn from_votes(votes: [usize; 2]) -> Self {
        let label = if votes[1] > votes[0] {
            Label::FaceTouch
        } else {
            Label::NoFaceTouch
        };
        Prediction { label, votes }
    }
}

/// Anything the evaluation harness can score.
pub trait Classifier: Sync {
    fn n_features(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<Prediction>;
}
