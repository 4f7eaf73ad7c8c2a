//! Run configuration: defaults, an optional `key=value` file and command
//! line flags, resolved in that order of increasing precedence.
//!
//! The resolved values are written to `manifest.txt` in the output
//! directory. A manifest is itself a valid config file, so passing it back
//! through `--config` reproduces the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct RunConfig {
    subcommand: String,
    values: BTreeMap<String, String>,
    explicit: BTreeSet<String>,
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str, source: &str) -> CliResult<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{source}:{}: expected key=value, got {line:?}",
                idx + 1
            )));
        };
        let key = key.trim().to_string();
        if out.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Usage(format!(
                "{source}:{}: duplicate key '{key}'",
                idx + 1
            )));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Layers `file` and then `flags` over `defaults`. Keys absent from
    /// `defaults` are rejected wherever they appear.
    pub fn resolve(
        subcommand: &str,
        defaults: Vec<(&str, String)>,
        file: Option<&Path>,
        flags: Vec<(&str, Option<String>)>,
    ) -> CliResult<Self> {
        let mut values: BTreeMap<String, String> = defaults
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let mut explicit = BTreeSet::new();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (key, value) in parse_config_text(&text, &path.display().to_string())? {
                let Some(slot) = values.get_mut(&key) else {
                    return Err(CliError::Usage(format!(
                        "unknown key '{key}' in {} for `{subcommand}`",
                        path.display()
                    )));
                };
                *slot = value;
                explicit.insert(key);
            }
        }
        for (key, value) in flags {
            let Some(value) = value else { continue };
            let Some(slot) = values.get_mut(key) else {
                return Err(CliError::Usage(format!(
                    "unknown key '{key}' for `{subcommand}`"
                )));
            };
            *slot = value;
            explicit.insert(key.to_string());
        }
        Ok(Self {
            subcommand: subcommand.to_string(),
            values,
            explicit,
        })
    }

    pub fn subcommand(&self) -> &str {
        &self.subcommand
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Whether `key` was set by the config file or a flag.
    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn get_str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("'{key}' is not a declared key of `{}`", self.subcommand))
    }

    pub fn get<V: FromStr>(&self, key: &str) -> CliResult<V>
    where
        V::Err: Display,
    {
        let raw = self.get_str(key);
        raw.parse()
            .map_err(|e| CliError::Usage(format!("bad value for {key} ({raw:?}): {e}")))
    }

    /// Comma-separated list; empty string gives an empty list.
    pub fn get_list<V: FromStr>(&self, key: &str) -> CliResult<Vec<V>>
    where
        V::Err: Display,
    {
        let raw = self.get_str(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|e| CliError::Usage(format!("bad entry {v:?} in {key}: {e}")))
            })
            .collect()
    }

    /// Optional path: empty string means unset.
    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.get_str(key).trim();
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    pub fn manifest(&self) -> String {
        let mut text = format!("# s2gnn {TOOL_VERSION}\n# subcommand={}\n", self.subcommand);
        for (k, v) in &self.values {
            text.push_str(&format!("{k}={v}\n"));
        }
        text
    }

    /// First 16 hex digits of the manifest's SHA-256.
    pub fn manifest_hash(&self) -> String {
        let digest = Sha256::digest(self.manifest().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// First line of every CSV the run writes.
    pub fn csv_comment(&self) -> String {
        format!("# s2gnn {TOOL_VERSION} manifest={}", self.manifest_hash())
    }

    pub fn write_manifest(&self, dir: &Path) -> CliResult<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.manifest())?;
        Ok(path)
    }

    /// Creates `dir/name`, writes the comment line and hands a CSV writer
    /// to `body`.
    pub fn write_csv(
        &self,
        dir: &Path,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    ) -> CliResult<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "{}", self.csv_comment())?;
        body(&mut out)?;
        out.flush()?;
        Ok(path)
    }
}
