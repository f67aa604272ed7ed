//! Command-line harness for lgtweezer: scene configs with unit-checked
//! quantities, figure presets, deterministic outputs with a hashed manifest,
//! and verification against a reference table.

pub mod config;
pub mod error;
pub mod manifest;
pub mod presets;
pub mod reference;
pub mod scenes;
pub mod units;

use std::path::{Path, PathBuf};

pub use config::SceneConfig;
pub use error::CliError;
pub use manifest::Manifest;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "LGTWEEZER_OUT";

/// `explicit`, else the config's own `output`, else `$LGTWEEZER_OUT/<label>`,
/// else `lgtweezer-out/<label>`.
pub fn output_dir(explicit: Option<&Path>, config: &SceneConfig, label: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &config.output {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("lgtweezer-out"));
    root.join(label)
}

/// Runs `f` on a pool capped at `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::config("--threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config("--threads", &e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs a preset into `out` (or the default directory).
pub fn run_preset(
    name: &str,
    seed: u64,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<(Manifest, PathBuf), CliError> {
    let cfg = presets::find(name)?.config(seed);
    let dir = output_dir(out, &cfg, name);
    let m = with_threads(threads, || scenes::run_scene(&cfg, name, &dir))??;
    Ok((m, dir))
}
