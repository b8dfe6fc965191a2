use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Reads input files and folds their contents, together with the command
/// configuration, into the config hash.
pub struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub fn new<C: Serialize>(config: &C) -> Result<Self> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(config)?);
        Ok(Self { hasher })
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.hasher.update(path.to_string_lossy().as_bytes());
        self.hasher.update([0]);
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    pub fn hash(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }
}

/// Human-readable lines for stdout plus the JSON and CSV artifacts.
pub struct Report {
    command: &'static str,
    hash: String,
    lines: Vec<String>,
    result: Value,
    tables: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &'static str, inputs: &Inputs) -> Self {
        Self {
            command,
            hash: inputs.hash(),
            lines: Vec::new(),
            result: Value::Null,
            tables: Vec::new(),
        }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn result<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.result = serde_json::to_value(value)?;
        Ok(())
    }

    /// A CSV table written as `<name>.csv` in the output directory.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        self.tables.push((format!("{name}.csv"), text));
    }

    pub fn json(&self) -> Value {
        json!({
            "command": self.command,
            "version": thermoflow::VERSION,
            "config_hash": self.hash,
            "result": self.result,
        })
    }

    pub fn emit(&self, out: Option<&PathBuf>) -> Result<()> {
        println!("thermoflow {} {} (config {})", thermoflow::VERSION, self.command, &self.hash[..16]);
        for l in &self.lines {
            println!("{l}");
        }
        if let Some(dir) = out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{}.json", self.command));
            fs::write(&path, serde_json::to_string_pretty(&self.json())? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            for (name, text) in &self.tables {
                let path = dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Ok(())
    }
}

/// `value ± error` with the error in scientific notation.
pub fn pm(value: f64, error: f64) -> String {
    format!("{value:.6} ± {error:.1e}")
}
