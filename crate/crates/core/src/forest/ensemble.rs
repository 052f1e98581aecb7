use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{check_trainable, grow, label_codes, Columns};
use super::{Classifier, DecisionTree, ForestConfig, Prediction};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A trained ensemble. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<DecisionTree>,
    importances: Vec<f64>,
    config: ForestConfig,
    feature_names: Vec<String>,
}

impl Forest {
    pub fn from_parts(
        trees: Vec<DecisionTree>,
        importances: Vec<f64>,
        config: ForestConfig,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::EmptyForest);
        }
        let p = feature_names.len();
        if importances.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: importances.len(),
            });
        }
        if let Some(t) = trees.iter().find(|t| t.n_features() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: t.n_features(),
            });
        }
        Ok(Self {
            trees,
            importances,
            config,
            feature_names,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Mean decrease in Gini impurity per feature, summing to 1 whenever any
    /// split reduced impurity.
    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Feature indices by decreasing importance; ties keep the lower index.
    pub fn ranked_features(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.importances.len()).collect();
        idx.sort_by(|&a, &b| self.importances[b].total_cmp(&self.importances[a]).then(a.cmp(&b)));
        idx
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                found: x.len(),
            });
        }
        let mut votes = [0usize; 2];
        for t in &self.trees {
            votes[t.predict_label(x).index()] += 1;
        }
        Ok(Prediction::from_votes(votes))
    }
}

impl Classifier for Forest {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        Forest::predict(self, x)
    }
}

/// Trains `config.n_trees` trees in parallel, tree `i` drawing from stream
/// `i` of the config seed. Without bootstrap every tree sees every row.
pub fn train_forest(data: &Dataset, config: &ForestConfig) -> Result<Forest> {
    check_trainable(data, config)?;
    let cols = Columns::new(data);
    let labels = label_codes(data);
    let (n, p) = (data.len(), data.n_features());

    let grown: Vec<(DecisionTree, Vec<f64>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = config.seed.stream(i as u64);
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&cols, &labels, p, rows, config, &mut rng)
        })
        .collect();

    // per-tree normalization, mean over trees, then renormalize
    let mut importances = vec![0.0; p];
    for (_, imp) in &grown {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(imp) {
                *acc += v / total;
            }
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in &mut importances {
            *v /= total;
        }
    }

    Forest::from_parts(
        grown.into_iter().map(|(t, _)| t).collect(),
        importances,
        *config,
        data.feature_names().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{MaxFeatures, Node};
    use crate::rng::RngSeed;
    use crate::types::{Activity, Label};

    fn leaf(c0: usize, c1: usize) -> DecisionTree {
        DecisionTree::from_nodes(vec![Node::Leaf { counts: [c0, c1] }], 1).unwrap()
    }

    #[test]
    fn single_pure_tree() {
        let f = Forest::from_parts(vec![leaf(4, 0)], vec![0.0], ForestConfig::default(), vec!["x".into()]).unwrap();
        let p = f.predict(&[0.0]).unwrap();
        assert_eq!(p.label, Label::NoFaceTouch);
        assert_eq!(p.votes, [1, 0]);
    }

    #[test]
    fn plurality_of_three() {
        let f = Forest::from_parts(
            vec![leaf(0, 3), leaf(0, 1), leaf(2, 0)],
            vec![0.0],
            ForestConfig::default(),
            vec!["x".into()],
        )
        .unwrap();
        let p = f.predict(&[0.0]).unwrap();
        assert_eq!(p.label, Label::FaceTouch);
        assert_eq!(p.votes, [1, 2]);
        assert!(matches!(
            f.predict(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn empty_forest_is_rejected() {
        assert!(matches!(
            Forest::from_parts(vec![], vec![0.0], ForestConfig::default(), vec!["x".into()]),
            Err(Error::EmptyForest)
        ));
    }

    #[test]
    fn constant_feature_has_zero_importance() {
        let mut ds = Dataset::new(vec!["signal".into(), "constant".into()]);
        for i in 0..60 {
            let l = if i % 2 == 0 {
                Label::FaceTouch
            } else {
                Label::NoFaceTouch
            };
            let x = if l == Label::FaceTouch { 1.0 } else { -1.0 } + (i as f64) * 0.01;
            ds.push(&[x, 5.0], l, "p", Activity::TouchNose).unwrap();
        }
        let cfg = ForestConfig {
            n_trees: 5,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let f = train_forest(&ds, &cfg).unwrap();
        assert_eq!(f.importances()[1], 0.0);
        assert!((f.importances()[0] - 1.0).abs() < 1e-12);
        assert_eq!(f.ranked_features(), vec![0, 1]);
    }

    #[test]
    fn same_seed_same_forest() {
        let mut ds = Dataset::new(vec!["a".into(), "b".into(), "c".into()]);
        let mut rng = RngSeed(5).rng();
        for _ in 0..200 {
            let x: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let l = if x[0] + x[1] * x[2] > 0.7 {
                Label::FaceTouch
            } else {
                Label::NoFaceTouch
            };
            ds.push(&x, l, "p", Activity::TouchNose).unwrap();
        }
        let cfg = ForestConfig {
            n_trees: 12,
            bootstrap: true,
            ..Default::default()
        };
        assert_eq!(train_forest(&ds, &cfg).unwrap(), train_forest(&ds, &cfg).unwrap());
        let other = ForestConfig {
            seed: RngSeed(6),
            ..cfg
        };
        assert_ne!(train_forest(&ds, &cfg).unwrap(), train_forest(&ds, &other).unwrap());
    }
}
