//! Output directory bookkeeping and the per-run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use facegate_core::KeyValues;
use sha2::{Digest, Sha256};

use crate::params::{CliError, CliResult, Params};

pub const MANIFEST: &str = "manifest.kv";

pub struct Run {
    command: &'static str,
    out: PathBuf,
    threads: usize,
    inputs: Vec<(String, PathBuf)>,
    outputs: Vec<String>,
    volatile: Vec<String>,
    notes: KeyValues,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Run {
    pub fn new(command: &'static str, params: &Params, threads: usize) -> CliResult<Self> {
        let out = params.path("out")?;
        fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
        Ok(Self {
            command,
            out,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            volatile: Vec::new(),
            notes: KeyValues::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Records an input file (or every file directly inside an input
    /// directory) for hashing in the manifest.
    pub fn input(&mut self, label: &str, path: &Path) {
        self.inputs.push((label.to_string(), path.to_path_buf()));
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.notes.push(key, value);
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Like [`Run::write`] for contents that legitimately differ between
    /// runs (timings). The manifest lists them without a hash.
    pub fn write_volatile(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.write(name, contents)?;
        self.outputs.pop();
        self.volatile.push(name.to_string());
        Ok(path)
    }

    /// Writes the manifest: status, effective parameters, input and output
    /// hashes. Called on failure too, so partial outputs are flagged.
    pub fn finish(self, params: &Params, status: &CliResult<()>) -> CliResult<()> {
        let mut m = KeyValues::new();
        m.push("run.tool", concat!("facegate ", env!("CARGO_PKG_VERSION")))
            .push("run.command", self.command)
            .push(
                "run.status",
                match status {
                    Ok(()) => "ok",
                    Err(_) => "failed",
                },
            );
        if let Err(e) = status {
            m.push("run.error", e.to_string().replace('\n', " "));
        }
        m.push("run.threads", self.threads);
        m.extend(params.kv());
        for (k, v) in self.notes.iter() {
            m.push(format!("note.{k}"), v);
        }
        for (label, path) in &self.inputs {
            for (name, file) in expand_dir(path) {
                let key = match name {
                    Some(n) => format!("input.{label}.{n}.sha256"),
                    None => format!("input.{label}.sha256"),
                };
                match sha256_file(&file) {
                    Ok(h) => m.push(key, h),
                    Err(_) => m.push(key, "unreadable"),
                };
            }
        }
        let mut outputs = self.outputs.clone();
        outputs.sort();
        outputs.dedup();
        for name in outputs {
            m.push(format!("output.{name}.sha256"), sha256_file(&self.out.join(&name))?);
        }
        for name in &self.volatile {
            m.push(format!("output.{name}.sha256"), "volatile");
        }
        let path = self.out.join(MANIFEST);
        m.write(&path).map_err(CliError::from)
    }
}

fn expand_dir(path: &Path) -> Vec<(Option<String>, PathBuf)> {
    if !path.is_dir() {
        return vec![(None, path.to_path_buf())];
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map(|rd| {
            rd.filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().map(|n| n.to_string_lossy().into_owned()), p))
        .collect()
}
