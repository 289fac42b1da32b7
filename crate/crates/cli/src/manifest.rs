//! Run manifest: flat `key=value` lines with file digests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub struct Manifest {
    command: String,
    args: Vec<String>,
    seed: Option<u64>,
    start: SystemTime,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    extra: Vec<(String, String)>,
}

fn unix_secs(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl Manifest {
    pub fn new(command: &str, args: Vec<String>, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            args,
            seed,
            start: SystemTime::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.extra.push((key.into(), value.to_string()));
    }

    /// Renders the manifest; digests are taken from the files as they are
    /// on disk now.
    pub fn render(&self, status: &str) -> String {
        let end = SystemTime::now();
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "args={}", self.args.join(" "));
        let _ = writeln!(
            s,
            "seed={}",
            self.seed.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
        );
        let _ = writeln!(s, "version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "start_unix={:.3}", unix_secs(self.start));
        let _ = writeln!(s, "end_unix={:.3}", unix_secs(end));
        let _ = writeln!(s, "status={status}");
        for (kind, paths) in [("input", &self.inputs), ("output", &self.outputs)] {
            for p in paths {
                let digest = sha256_file(p).unwrap_or_else(|e| format!("unreadable ({e})"));
                let _ = writeln!(s, "{kind}.{}.sha256={digest}", p.display());
            }
        }
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
