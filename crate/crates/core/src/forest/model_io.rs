//! Versioned text format for trained forests.
//!
//! ```text
//! facegate-model 1
//! config n_trees=150 max_depth=10 ... seed=42
//! features <p>
//! f <index> <name>
//! importance <index> <value>
//! trees <count>
//! tree <index> <node count>
//! s <feature> <threshold> <left> <right>
//! l <count no_face_touch> <count face_touch>
//! checksum sha256 <hex of every preceding byte>
//! ```
//!
//! Reals are written in scientific notation with 17 significant digits, so
//! they read back bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{DecisionTree, Forest, ForestConfig, Node};
use crate::error::{Error, Result};
use crate::kv::KeyValues;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "facegate-model";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model(forest: &Forest) -> Result<String> {
    if forest.trees().is_empty() {
        return Err(Error::EmptyForest);
    }
    let mut body = String::new();
    let _ = writeln!(body, "{MAGIC} {MODEL_FORMAT_VERSION}");
    let cfg: Vec<String> = forest
        .config()
        .to_kv()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let _ = writeln!(body, "config {}", cfg.join(" "));
    let _ = writeln!(body, "features {}", forest.feature_names().len());
    for (i, n) in forest.feature_names().iter().enumerate() {
        let _ = writeln!(body, "f {i} {n}");
    }
    for (i, v) in forest.importances().iter().enumerate() {
        let _ = writeln!(body, "importance {i} {}", real(*v));
    }
    let _ = writeln!(body, "trees {}", forest.trees().len());
    for (i, t) in forest.trees().iter().enumerate() {
        let _ = writeln!(body, "tree {i} {}", t.nodes().len());
        for n in t.nodes() {
            match n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(body, "s {feature} {} {left} {right}", real(*threshold));
                }
                Node::Leaf { counts } => {
                    let _ = writeln!(body, "l {} {}", counts[0], counts[1]);
                }
            }
        }
    }
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    let _ = writeln!(body, "checksum sha256 {digest}");
    Ok(body)
}

pub fn save_model(forest: &Forest, path: &Path) -> Result<()> {
    let text = write_model(forest)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Forest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, l) = self
            .inner
            .next()
            .ok_or_else(|| Error::CorruptModel(format!("unexpected end of file, wanted {what}")))?;
        Ok((i + 1, l.split(' ').collect()))
    }
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::CorruptModel(format!("line {line}: cannot parse `{s}`")))
}

fn expect(parts: &[&str], key: &str, arity: usize, line: usize) -> Result<()> {
    if parts.first() != Some(&key) || parts.len() != arity {
        return Err(Error::CorruptModel(format!(
            "line {line}: expected `{key}` with {} fields",
            arity - 1
        )));
    }
    Ok(())
}

pub fn read_model(text: &str) -> Result<Forest> {
    let first = text.lines().next().unwrap_or("");
    let mut head = first.split(' ');
    if head.next() != Some(MAGIC) {
        return Err(Error::CorruptModel("not a facegate model file".into()));
    }
    let version = head.next().unwrap_or("");
    if version != MODEL_FORMAT_VERSION.to_string() {
        return Err(Error::UnsupportedVersion(version.to_string()));
    }

    let trimmed = text.strip_suffix('\n').unwrap_or(text);
    let (body_end, last) = match trimmed.rfind('\n') {
        Some(i) => (i + 1, &trimmed[i + 1..]),
        None => return Err(Error::CorruptModel("missing checksum".into())),
    };
    let digest = last
        .strip_prefix("checksum sha256 ")
        .ok_or_else(|| Error::CorruptModel("missing checksum".into()))?;
    let body = &text[..body_end];
    if hex::encode(Sha256::digest(body.as_bytes())) != digest {
        return Err(Error::CorruptModel("checksum mismatch".into()));
    }

    let mut lines = Lines {
        inner: body.lines().enumerate(),
    };
    lines.next("header")?;

    let (ln, parts) = lines.next("config")?;
    if parts.first() != Some(&"config") {
        return Err(Error::CorruptModel(format!("line {ln}: expected config")));
    }
    let mut kv = KeyValues::new();
    for p in &parts[1..] {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::CorruptModel(format!("line {ln}: bad config entry `{p}`")))?;
        kv.push(k, v);
    }
    let config = ForestConfig::from_kv(&kv).map_err(|e| Error::CorruptModel(format!("line {ln}: {e}")))?;

    let (ln, parts) = lines.next("features")?;
    expect(&parts, "features", 2, ln)?;
    let p: usize = num(parts[1], ln)?;
    let mut names = Vec::with_capacity(p);
    for i in 0..p {
        let (ln, parts) = lines.next("feature name")?;
        if parts.len() < 3 || parts[0] != "f" || num::<usize>(parts[1], ln)? != i {
            return Err(Error::CorruptModel(format!("line {ln}: expected feature {i}")));
        }
        names.push(parts[2..].join(" "));
    }
    let mut importances = Vec::with_capacity(p);
    for i in 0..p {
        let (ln, parts) = lines.next("importance")?;
        expect(&parts, "importance", 3, ln)?;
        if num::<usize>(parts[1], ln)? != i {
            return Err(Error::CorruptModel(format!("line {ln}: expected importance {i}")));
        }
        importances.push(num(parts[2], ln)?);
    }

    let (ln, parts) = lines.next("trees")?;
    expect(&parts, "trees", 2, ln)?;
    let n_trees: usize = num(parts[1], ln)?;
    if n_trees == 0 {
        return Err(Error::EmptyForest);
    }
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let (ln, parts) = lines.next("tree")?;
        expect(&parts, "tree", 3, ln)?;
        if num::<usize>(parts[1], ln)? != t {
            return Err(Error::CorruptModel(format!("line {ln}: expected tree {t}")));
        }
        let count: usize = num(parts[2], ln)?;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, parts) = lines.next("node")?;
            let node = match parts.first() {
                Some(&"s") if parts.len() == 5 => Node::Split {
                    feature: num(parts[1], ln)?,
                    threshold: num(parts[2], ln)?,
                    left: num(parts[3], ln)?,
                    right: num(parts[4], ln)?,
                },
                Some(&"l") if parts.len() == 3 => Node::Leaf {
                    counts: [num(parts[1], ln)?, num(parts[2], ln)?],
                },
                _ => return Err(Error::CorruptModel(format!("line {ln}: bad node"))),
            };
            nodes.push(node);
        }
        trees.push(DecisionTree::from_nodes(nodes, p)?);
    }
    if let Ok((ln, _)) = lines.next("end") {
        return Err(Error::CorruptModel(format!("line {ln}: trailing content")));
    }
    Forest::from_parts(trees, importances, config, names)
}
