use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lgtweezer_cli::manifest::Manifest;
use lgtweezer_cli::reference::{verify, ReferenceTable};
use lgtweezer_cli::{output_dir, presets, run_preset, scenes, with_threads, CliError, SceneConfig};

#[derive(Parser)]
#[command(name = "lgtweezer", version, about = "Laguerre-Gauss superposition tweezer scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scene from a TOML config (or from the config inside a manifest.json).
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a named preset.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = presets::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        /// Print the resolved config instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// List presets.
    Presets,
    /// Check a manifest's output hashes and metrics against a reference table.
    Verify { manifest: PathBuf, reference: PathBuf },
}

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;

fn exit_for(e: &CliError) -> ExitCode {
    match e {
        CliError::Core(lgtweezer::Error::InvalidParameter { .. }) => ExitCode::from(EXIT_USAGE),
        CliError::Core(_) => ExitCode::from(EXIT_NUMERIC),
        _ => ExitCode::from(EXIT_USAGE),
    }
}

fn summary(m: &Manifest, dir: &std::path::Path) {
    println!("wrote {} files to {}", m.outputs.len() + 1, dir.display());
    for (k, v) in &m.metrics {
        println!("  {k:<44} {v:.6}");
    }
    for w in &m.warnings {
        println!("  warning: {w}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run { config, out, threads } => (|| {
            let cfg = SceneConfig::load(&config)?;
            // A manifest keeps its label so the re-run verifies against the same entries.
            let label = if config.extension().is_some_and(|e| e == "json") {
                Manifest::load(&config)?.label
            } else {
                config
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| cfg.scene.kind().to_string())
            };
            let dir = output_dir(out.as_deref(), &cfg, &label);
            let m = with_threads(threads, || scenes::run_scene(&cfg, &label, &dir))??;
            summary(&m, &dir);
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Preset {
            name,
            out,
            seed,
            threads,
            print_config,
        } => (|| {
            if print_config {
                print!("{}", presets::find(&name)?.config(seed).to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let (m, dir) = run_preset(&name, seed, out.as_deref(), threads)?;
            summary(&m, &dir);
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Presets => {
            for p in presets::PRESETS {
                println!("{:<14} {}", p.name, p.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { manifest, reference } => (|| {
            let m = Manifest::load(&manifest)?;
            let table = ReferenceTable::load(&reference)?;
            let dir = manifest.parent().map(PathBuf::from).unwrap_or_default();
            let report = verify(&m, &dir, &table)?;
            println!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NUMERIC)
            })
        })(),
    };
    result.unwrap_or_else(|e: CliError| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}
