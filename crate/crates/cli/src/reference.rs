//! Comparison of manifest metrics against the shipped reference table.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;
use crate::manifest::Manifest;

/// The reference table shipped with the crate.
pub const BUNDLED: &str = include_str!("../reference.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTable {
    pub entry: Vec<ReferenceEntry>,
}

/// One expected value. Either `expected` with exactly one of `rel_tol` or
/// `abs_tol`, or a one- or two-sided bound via `lower` / `upper`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEntry {
    /// Preset (figure) the entry applies to.
    pub figure: String,
    pub metric: String,
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Relative { expected: f64, tol: f64 },
    Absolute { expected: f64, tol: f64 },
    Bounds { lower: Option<f64>, upper: Option<f64> },
}

impl Criterion {
    pub fn check(&self, v: f64) -> bool {
        match *self {
            Criterion::Relative { expected, tol } => (v - expected).abs() <= tol * expected.abs(),
            Criterion::Absolute { expected, tol } => (v - expected).abs() <= tol,
            Criterion::Bounds { lower, upper } => lower.is_none_or(|l| v >= l) && upper.is_none_or(|u| v <= u),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Criterion::Relative { expected, tol } => write!(f, "{expected} ± {}%", tol * 100.0),
            Criterion::Absolute { expected, tol } => write!(f, "{expected} ± {tol}"),
            Criterion::Bounds { lower, upper } => match (lower, upper) {
                (Some(l), Some(u)) => write!(f, "in [{l}, {u}]"),
                (Some(l), None) => write!(f, ">= {l}"),
                (None, Some(u)) => write!(f, "<= {u}"),
                (None, None) => write!(f, "any"),
            },
        }
    }
}

impl ReferenceEntry {
    pub fn criterion(&self) -> Result<Criterion, CliError> {
        let bad = |m: &str| CliError::Reference(format!("{} / {}: {m}", self.figure, self.metric));
        match (self.expected, self.rel_tol, self.abs_tol) {
            (Some(e), Some(t), None) if t >= 0.0 => Ok(Criterion::Relative { expected: e, tol: t }),
            (Some(e), None, Some(t)) if t >= 0.0 => Ok(Criterion::Absolute { expected: e, tol: t }),
            (None, None, None) if self.lower.is_some() || self.upper.is_some() => Ok(Criterion::Bounds {
                lower: self.lower,
                upper: self.upper,
            }),
            _ => Err(bad("give expected with one non-negative tolerance, or bounds")),
        }
    }
}

impl ReferenceTable {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        let t: ReferenceTable = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Reference(format!("at `{}`: {}", e.path(), e.inner().message().trim())))?;
        for e in &t.entry {
            e.criterion()?;
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled reference table is valid")
    }

    pub fn entries_for<'a>(&'a self, figure: &'a str) -> impl Iterator<Item = &'a ReferenceEntry> + 'a {
        self.entry.iter().filter(move |e| e.figure == figure)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub metric: String,
    /// `None` when the manifest lacks the metric.
    pub measured: Option<f64>,
    pub criterion: Criterion,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub label: String,
    pub hash_failures: Vec<String>,
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.hash_failures.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reference check for {}", self.label)?;
        for h in &self.hash_failures {
            writeln!(f, "FAIL  hash      {h}")?;
        }
        for r in &self.rows {
            let status = if r.pass { "PASS" } else { "FAIL" };
            let measured = match r.measured {
                Some(v) => format!("{v:.6}"),
                None => "missing metric".to_string(),
            };
            write!(f, "{status}  {:<40} {measured:>16}  expected {}", r.metric, r.criterion)?;
            if !r.note.is_empty() {
                write!(f, "  ({})", r.note)?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "{}",
            if self.passed() {
                "all checks passed"
            } else {
                "some checks failed"
            }
        )
    }
}

/// Checks output hashes, then every reference entry tagged with the
/// manifest's label. A label without entries is an error, not a pass.
pub fn verify(manifest: &Manifest, dir: &Path, table: &ReferenceTable) -> Result<VerifyReport, CliError> {
    let hash_failures = manifest.hash_mismatches(dir);
    let mut rows = Vec::new();
    for e in table.entries_for(&manifest.label) {
        let criterion = e.criterion()?;
        let measured = manifest.metrics.get(&e.metric).copied();
        rows.push(CheckRow {
            metric: e.metric.clone(),
            measured,
            criterion,
            pass: measured.is_some_and(|v| criterion.check(v)),
            note: e.note.clone(),
        });
    }
    if rows.is_empty() {
        return Err(CliError::Reference(format!("no entries for {:?}", manifest.label)));
    }
    Ok(VerifyReport {
        label: manifest.label.clone(),
        hash_failures,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_parses() {
        let t = ReferenceTable::bundled();
        assert!(t.entries_for("fig3").any(|e| e.metric == "ESigma.dx_um"));
        assert!(t.entries_for("fig11-r08-1d").any(|e| e.metric == "ESigma.P1"));
    }

    #[test]
    fn criteria() {
        let r = Criterion::Relative {
            expected: 0.84,
            tol: 0.05,
        };
        assert!(r.check(0.85) && !r.check(0.9));
        let a = Criterion::Absolute {
            expected: 0.55,
            tol: 0.1,
        };
        assert!(a.check(0.64) && !a.check(0.66));
        let b = Criterion::Bounds {
            lower: None,
            upper: Some(0.25),
        };
        assert!(b.check(0.1) && !b.check(0.3));
    }

    #[test]
    fn malformed_entries_are_rejected() {
        let both = "[[entry]]\nfigure = \"x\"\nmetric = \"m\"\nexpected = 1.0\nrel_tol = 0.1\nabs_tol = 0.1\n";
        assert!(ReferenceTable::parse(both).is_err());
        let none = "[[entry]]\nfigure = \"x\"\nmetric = \"m\"\n";
        assert!(ReferenceTable::parse(none).is_err());
    }
}
