use rand::seq::index;

use super::{ForestConfig, Prediction};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::Label;

/// Flat tree node; children are indices into the owning tree's node list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training rows per class that reached this leaf.
    Leaf { counts: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl DecisionTree {
    /// Builds a tree from a pre-order node list rooted at index 0.
    pub fn from_nodes(nodes: Vec<Node>, n_features: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::CorruptModel("tree has no nodes".into()));
        }
        let mut referenced = vec![0u8; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            match n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return Err(Error::CorruptModel(format!("node {i}: bad split")));
                    }
                    for &c in [left, right] {
                        if c <= i || c >= nodes.len() {
                            return Err(Error::CorruptModel(format!("node {i}: child {c} out of order")));
                        }
                        referenced[c] += 1;
                    }
                }
                Node::Leaf { counts } => {
                    if counts[0] + counts[1] == 0 {
                        return Err(Error::CorruptModel(format!("node {i}: empty leaf")));
                    }
                }
            }
        }
        if referenced[0] != 0 || referenced[1..].iter().any(|&r| r != 1) {
            return Err(Error::CorruptModel("node list is not a tree".into()));
        }
        Ok(Self { nodes, n_features })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Class counts of the leaf `x` lands in. `x` must have `n_features`
    /// values.
    pub fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    /// Majority class of the leaf `x` lands in.
    pub fn predict_label(&self, x: &[f64]) -> Label {
        Prediction::from_votes(self.leaf_counts(x)).label
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    pub fn node_depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for i in 0..self.nodes.len() {
            if let Node::Split { left, right, .. } = self.nodes[i] {
                depth[left] = depth[i] + 1;
                depth[right] = depth[i] + 1;
            }
        }
        depth
    }

    /// Training rows that reached each node.
    pub fn node_samples(&self) -> Vec<usize> {
        let mut n = vec![0; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            n[i] = match self.nodes[i] {
                Node::Leaf { counts } => counts[0] + counts[1],
                Node::Split { left, right, .. } => n[left] + n[right],
            };
        }
        n
    }
}

/// Feature-major dense ranks of a dataset for split search. Sorting small
/// integer keys is several times faster than sorting floats.
pub(crate) struct Columns {
    n_rows: usize,
    /// `ranks[f * n_rows + r]`: index of row r's value among the sorted
    /// distinct values of feature f.
    ranks: Vec<u32>,
    distinct: Vec<Vec<f64>>,
}

impl Columns {
    pub(crate) fn new(ds: &Dataset) -> Self {
        let (n, p) = (ds.len(), ds.n_features());
        let mut ranks = vec![0u32; n * p];
        let mut distinct = Vec::with_capacity(p);
        let mut order: Vec<usize> = (0..n).collect();
        let mut col = vec![0.0; n];
        for f in 0..p {
            for (r, c) in col.iter_mut().enumerate() {
                *c = ds.value(r, f);
            }
            order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut uniq: Vec<f64> = Vec::new();
            for &r in &order {
                let v = col[r];
                if uniq.last() != Some(&v) {
                    uniq.push(v);
                }
                ranks[f * n + r] = (uniq.len() - 1) as u32;
            }
            distinct.push(uniq);
        }
        Columns {
            n_rows: n,
            ranks,
            distinct,
        }
    }

    #[inline]
    fn col(&self, f: usize) -> &[u32] {
        &self.ranks[f * self.n_rows..(f + 1) * self.n_rows]
    }
}

struct Split {
    feature: usize,
    /// Rows ranked at or below this go left.
    rank: u32,
    threshold: f64,
    /// Weighted child impurity is `n - purity.0 / purity.1`; larger purity
    /// is better. Kept as an exact fraction so ties are exact.
    purity: (u64, u64),
    /// Summed weighted Gini of both children.
    score: f64,
}

/// Row limit keeping [`purity`] within `u64` (n³ < 2⁶⁴).
pub(crate) const MAX_TRAINING_ROWS: usize = 1 << 20;

/// `(a² + b²)/nl + (c² + d²)/nr` as a numerator and denominator.
#[inline]
fn purity(left: [usize; 2], right: [usize; 2]) -> (u64, u64) {
    let sq = |c: [usize; 2]| (c[0] * c[0] + c[1] * c[1]) as u64;
    let (nl, nr) = ((left[0] + left[1]) as u64, (right[0] + right[1]) as u64);
    (sq(left) * nr + sq(right) * nl, nl * nr)
}

struct Builder<'a> {
    cols: &'a Columns,
    labels: &'a [u8],
    n_features: usize,
    config: &'a ForestConfig,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    keys: Vec<u32>,
    /// Per-rank label counts, all zero between uses.
    hist: Vec<[u32; 2]>,
}

#[inline]
fn weighted_gini(c: [usize; 2]) -> f64 {
    // n · gini = n - (c0² + c1²) / n
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (a, b) = (c[0] as f64, c[1] as f64);
    n - (a * a + b * b) / n
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let mut counts = [0usize; 2];
        for &r in rows.iter() {
            counts[self.labels[r] as usize] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });

        let n = rows.len();
        let cfg = self.config;
        if depth >= cfg.max_depth
            || n < cfg.min_samples_split
            || n < 2 * cfg.min_samples_leaf
            || counts[0] == 0
            || counts[1] == 0
        {
            return id;
        }
        let Some(split) = self.best_split(rows, counts) else {
            return id;
        };

        let mut mid = 0;
        {
            let col = self.cols.col(split.feature);
            for i in 0..n {
                if col[rows[i]] <= split.rank {
                    rows.swap(i, mid);
                    mid += 1;
                }
            }
        }
        self.importance[split.feature] += (weighted_gini(counts) - split.score).max(0.0);

        let (l, r) = rows.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.n_features;
        let m = self.config.max_features.resolve(p);
        if m >= p {
            return (0..p).collect();
        }
        let mut f = index::sample(self.rng, p, m).into_vec();
        f.sort_unstable();
        f
    }

    /// Lowest weighted Gini over midpoints of consecutive distinct values.
    /// Ties keep the lower feature index, then the lower threshold.
    fn best_split(&mut self, rows: &[usize], total: [usize; 2]) -> Option<Split> {
        let n = rows.len();
        let mut best: Option<Split> = None;
        for feature in self.candidate_features() {
            let col = self.cols.col(feature);
            let (mut lo, mut hi) = (u32::MAX, 0);
            for &r in rows {
                lo = lo.min(col[r]);
                hi = hi.max(col[r]);
            }
            if lo == hi {
                continue;
            }
            let mut scan = Scan::new(feature, n, total, self.config.min_samples_leaf);
            if ((hi - lo) as usize) <= 8 * n {
                self.scan_histogram(&mut scan, rows, lo, hi, &mut best);
            } else {
                self.scan_sorted(&mut scan, rows, &mut best);
            }
        }
        best
    }

    #[inline(always)]
    fn consider(&self, scan: &Scan, v: u32, next: u32, best: &mut Option<Split>) {
        let left = scan.left;
        let right = [scan.total[0] - left[0], scan.total[1] - left[1]];
        let p = purity(left, right);
        if best
            .as_ref()
            .is_none_or(|b| p.0 as u128 * b.purity.1 as u128 > b.purity.0 as u128 * p.1 as u128)
        {
            self.record(scan.feature, left, right, p, v, next, best);
        }
    }

    #[cold]
    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        feature: usize,
        left: [usize; 2],
        right: [usize; 2],
        purity: (u64, u64),
        v: u32,
        next: u32,
        best: &mut Option<Split>,
    ) {
        let values = &self.cols.distinct[feature];
        let (lo, hi) = (values[v as usize], values[next as usize]);
        let mut threshold = lo * 0.5 + hi * 0.5;
        if threshold >= hi {
            threshold = lo;
        }
        *best = Some(Split {
            feature,
            rank: v,
            threshold,
            purity,
            score: weighted_gini(left) + weighted_gini(right),
        });
    }

    /// Feeds the next distinct value (in increasing rank order) and its
    /// label counts, first considering the threshold just below it.
    #[inline(always)]
    fn feed(&self, scan: &mut Scan, rank: u32, c: [usize; 2], best: &mut Option<Split>) {
        if let Some(prev) = scan.prev {
            let nl = scan.left[0] + scan.left[1];
            if nl >= scan.msl && scan.n - nl >= scan.msl {
                self.consider(scan, prev, rank, best);
            }
        }
        scan.left[0] += c[0];
        scan.left[1] += c[1];
        scan.prev = Some(rank);
    }

    /// Groups the node's rows by distinct value through a sort.
    fn scan_sorted(&mut self, scan: &mut Scan, rows: &[usize], best: &mut Option<Split>) {
        let col = self.cols.col(scan.feature);
        // rank in the high bits, label in the lowest
        let mut keys = std::mem::take(&mut self.keys);
        keys.clear();
        keys.extend(rows.iter().map(|&r| (col[r] << 1) | self.labels[r] as u32));
        keys.sort_unstable();
        let mut i = 0;
        while i < keys.len() {
            let rank = keys[i] >> 1;
            let mut c = [0; 2];
            while i < keys.len() && keys[i] >> 1 == rank {
                c[(keys[i] & 1) as usize] += 1;
                i += 1;
            }
            self.feed(scan, rank, c, best);
        }
        self.keys = keys;
    }

    /// Groups the node's rows by distinct value through a histogram over
    /// the rank range `lo..=hi`.
    fn scan_histogram(&mut self, scan: &mut Scan, rows: &[usize], lo: u32, hi: u32, best: &mut Option<Split>) {
        let col = self.cols.col(scan.feature);
        let mut hist = std::mem::take(&mut self.hist);
        for &r in rows {
            hist[col[r] as usize][self.labels[r] as usize] += 1;
        }
        for rank in lo..=hi {
            let c = hist[rank as usize];
            if c != [0, 0] {
                hist[rank as usize] = [0, 0];
                self.feed(scan, rank, [c[0] as usize, c[1] as usize], best);
            }
        }
        self.hist = hist;
    }
}

/// Running state of one feature's threshold scan.
struct Scan {
    feature: usize,
    n: usize,
    total: [usize; 2],
    msl: usize,
    /// Label counts of the rows at or below `prev`.
    left: [usize; 2],
    prev: Option<u32>,
}

impl Scan {
    fn new(feature: usize, n: usize, total: [usize; 2], msl: usize) -> Self {
        Scan {
            feature,
            n,
            total,
            msl,
            left: [0; 2],
            prev: None,
        }
    }
}

/// Grows one tree on `rows` (duplicates allowed) and returns it with the
/// unnormalized Gini decrease per feature.
pub(crate) fn grow(
    cols: &Columns,
    labels: &[u8],
    n_features: usize,
    mut rows: Vec<usize>,
    config: &ForestConfig,
    rng: &mut Rng,
) -> (DecisionTree, Vec<f64>) {
    let mut b = Builder {
        cols,
        labels,
        n_features,
        config,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; n_features],
        keys: Vec::with_capacity(rows.len()),
        hist: vec![[0; 2]; cols.distinct.iter().map(Vec::len).max().unwrap_or(0)],
    };
    b.build(&mut rows, 0);
    let tree = DecisionTree {
        nodes: b.nodes,
        n_features,
    };
    (tree, b.importance)
}

pub(crate) fn check_trainable(data: &Dataset, config: &ForestConfig) -> Result<()> {
    config.validate()?;
    if data.n_features() == 0 {
        return Err(Error::InsufficientData("dataset has no features".into()));
    }
    if data.is_empty() || data.len() < config.min_samples_split {
        return Err(Error::InsufficientData(format!(
            "{} rows, need at least min_samples_split = {}",
            data.len(),
            config.min_samples_split
        )));
    }
    if data.len() > MAX_TRAINING_ROWS {
        return Err(Error::InvalidConfig(format!(
            "{} rows exceed the training limit of {MAX_TRAINING_ROWS}",
            data.len()
        )));
    }
    Ok(())
}

pub(crate) fn label_codes(data: &Dataset) -> Vec<u8> {
    data.labels().iter().map(|l| l.index() as u8).collect()
}

/// Trains a single CART tree on every row of `data`.
pub fn train_tree(data: &Dataset, config: &ForestConfig, rng: &mut Rng) -> Result<DecisionTree> {
    check_trainable(data, config)?;
    let cols = Columns::new(data);
    let labels = label_codes(data);
    let (tree, _) = grow(
        &cols,
        &labels,
        data.n_features(),
        (0..data.len()).collect(),
        config,
        rng,
    );
    Ok(tree)
}
