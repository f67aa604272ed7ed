//! Output files and the provenance manifest that lists them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SceneConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to check and reproduce a run. Deliberately free of
/// timestamps, host names and thread counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Preset name, or the config file stem for `run`.
    pub label: String,
    pub kind: String,
    pub config: SceneConfig,
    pub outputs: Vec<OutputRecord>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects outputs of one scene run in a directory.
#[derive(Debug)]
pub struct OutputSink {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
    metrics: BTreeMap<String, f64>,
    warnings: Vec<String>,
    /// CSV outputs and their column names, for the gnuplot script.
    tables: Vec<(String, Vec<String>)>,
}

impl OutputSink {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSink {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
            tables: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.retain(|o| o.path != name);
        if name.ends_with(".csv") {
            let head = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
            let cols = String::from_utf8_lossy(head).split(',').map(str::to_string).collect();
            self.tables.retain(|t| t.0 != name);
            self.tables.push((name.to_string(), cols));
        }
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        if value.is_finite() {
            self.metrics.insert(name, value);
        } else {
            self.warn(format!("metric {name} is not finite and was dropped"));
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    /// One plot per CSV table: first column against every other column.
    pub fn write_gnuplot(&mut self, label: &str) -> Result<(), CliError> {
        let mut s = format!("# {label}: run `gnuplot -p plot.gp` in this directory\n");
        s.push_str("set datafile separator ','\nset key autotitle columnhead\nset grid\n");
        for (name, cols) in self.tables.clone() {
            if cols.len() < 2 {
                continue;
            }
            s.push_str(&format!(
                "\nset title '{name}' noenhanced\nset xlabel '{}' noenhanced\n",
                cols[0]
            ));
            let curves: Vec<String> = (2..=cols.len())
                .map(|c| {
                    let file = if c == 2 { format!("'{name}'") } else { "''".into() };
                    format!("{file} using 1:{c} with lines")
                })
                .collect();
            s.push_str(&format!(
                "plot {}\npause -1 'press return for the next plot'\n",
                curves.join(", ")
            ));
        }
        self.write("plot.gp", s.as_bytes())
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }

    pub fn metrics(&self) -> &BTreeMap<String, f64> {
        &self.metrics
    }

    /// Write `manifest.json` and return the manifest.
    pub fn finish(self, label: &str, config: &SceneConfig) -> Result<Manifest, CliError> {
        let m = Manifest {
            tool: "lgtweezer".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            label: label.into(),
            kind: config.scene.kind().into(),
            config: config.clone(),
            outputs: self.outputs,
            metrics: self.metrics,
            warnings: self.warnings,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(m)
    }
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::config(&e.path().to_string(), &e.inner().to_string()))
    }

    /// Outputs whose file is missing or whose content no longer matches the
    /// recorded hash.
    pub fn hash_mismatches(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter_map(|o| match std::fs::read(dir.join(&o.path)) {
                Ok(b) if sha256_hex(&b) == o.sha256 => None,
                Ok(_) => Some(format!("{}: content hash mismatch", o.path)),
                Err(e) => Some(format!("{}: {e}", o.path)),
            })
            .collect()
    }
}

/// Comma-separated table with a header row; `{:e}` formatting of f64 is the
/// exponent representation and therefore deterministic.
pub fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
