//! Layered parameters: built-in defaults, then `--config`, then flags.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;
use facegate_core::KeyValues;

use crate::app::Sub;

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value or combination. Exit code 1.
    Invalid(String),
    /// Unreadable input or unwritable output. Exit code 2.
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<facegate_core::Error> for CliError {
    fn from(e: facegate_core::Error) -> Self {
        match e {
            facegate_core::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Invalid(msg.into()))
}

/// Effective parameters of one run, in declaration order.
#[derive(Debug, Clone)]
pub struct Params {
    kv: KeyValues,
    /// `(key, flag)` pairs for diagnostics.
    flags: Vec<(String, String)>,
}

impl Params {
    pub fn resolve(sub: &Sub, m: &ArgMatches) -> CliResult<Self> {
        let config = match m.get_one::<String>("config") {
            Some(path) => {
                let kv = KeyValues::read(path.as_ref()).map_err(|e| match e {
                    facegate_core::Error::Io { .. } => CliError::Io(format!("--config: {e}")),
                    other => CliError::Invalid(format!("--config: {other}")),
                })?;
                let mut normalized = KeyValues::new();
                for (k, v) in kv.iter() {
                    let key = k.replace('-', "_");
                    if key.contains('.') {
                        continue;
                    }
                    if sub.params.iter().any(|p| p.key() == key) {
                        normalized.push(key, v);
                    } else {
                        log::warn!("config key `{k}` is not used by `{}`", sub.name);
                    }
                }
                normalized
            }
            None => KeyValues::new(),
        };

        let mut kv = KeyValues::new();
        let mut flags = Vec::new();
        for p in &sub.params {
            let key = p.key();
            let from_flag = m.value_source(p.name) == Some(ValueSource::CommandLine);
            let value = if from_flag {
                m.get_one::<String>(p.name).cloned()
            } else {
                config
                    .get(&key)
                    .map(str::to_string)
                    .or_else(|| m.get_one::<String>(p.name).cloned())
            };
            if let Some(v) = value {
                kv.push(key.clone(), v);
            }
            flags.push((key, format!("--{}", p.name)));
        }
        Ok(Self { kv, flags })
    }

    pub fn kv(&self) -> &KeyValues {
        &self.kv
    }

    pub fn flag(&self, key: &str) -> String {
        self.flags
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, f)| f.clone())
            .unwrap_or_else(|| format!("--{}", key.replace('_', "-")))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.kv.get(key).filter(|v| !v.is_empty() && *v != "none")
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Invalid(format!("invalid value `{v}` for {}: {e}", self.flag(key)))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        self.opt(key)?
            .ok_or_else(|| CliError::Invalid(format!("missing required flag {}", self.flag(key))))
    }

    pub fn path(&self, key: &str) -> CliResult<PathBuf> {
        self.get::<PathBuf>(key)
    }

    pub fn opt_path(&self, key: &str) -> CliResult<Option<PathBuf>> {
        self.opt::<PathBuf>(key)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>>
    where
        T::Err: Display,
    {
        let raw = self.kv.get(key).unwrap_or("");
        let items: CliResult<Vec<T>> = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Invalid(format!("invalid value `{s}` in {}: {e}", self.flag(key))))
            })
            .collect();
        let items = items?;
        if items.is_empty() {
            return invalid(format!("{} needs at least one value", self.flag(key)));
        }
        Ok(items)
    }

    /// Rewrites parameter names in a library diagnostic as flags, so
    /// `min_samples_split` reads `--min-samples-split`.
    pub fn flagify(&self, msg: &str) -> String {
        let mut keys: Vec<&(String, String)> = self.flags.iter().collect();
        keys.sort_by_key(|(k, _)| std::cmp::Reverse(k.len()));
        let mut out = msg.to_string();
        for (key, flag) in keys {
            let dashed = key.replace('_', "-");
            for form in [key.as_str(), dashed.as_str()] {
                out = replace_word(&out, form, flag);
            }
        }
        out
    }

    /// Converts a library error, naming flags in configuration errors.
    pub fn check<T>(&self, r: facegate_core::Result<T>) -> CliResult<T> {
        r.map_err(|e| match e {
            facegate_core::Error::InvalidConfig(m) => CliError::Invalid(self.flagify(&m)),
            other => other.into(),
        })
    }
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Replaces whole-word occurrences of `word`.
fn replace_word(text: &str, word: &str, with: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(word) {
        let before = rest[..pos].chars().next_back();
        let after = rest[pos + word.len()..].chars().next();
        let whole = !before.is_some_and(is_word) && !after.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
        out.push_str(&rest[..pos]);
        out.push_str(if whole { with } else { word });
        rest = &rest[pos + word.len()..];
    }
    out.push_str(rest);
    out
}
