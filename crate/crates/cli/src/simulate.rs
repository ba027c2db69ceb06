use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;
use transport_core::simulate::{run_experiment, SimConfig, SimError, WorkerCount};

use crate::Outcome;

pub const WORKERS_ENV: &str = "TRANSPORT_WORKERS";

/// Run the variable-selection simulation described by a TOML config.
///
/// The config has a `[simulation]` table with the experiment settings and an
/// `[output]` table naming the CSV and text report files. Relative output
/// paths are resolved against the config file's directory. Worker count
/// precedence: `--workers`, then `simulation.workers`, then the
/// TRANSPORT_WORKERS environment variable, then one per core.
#[derive(Debug, clap::Args)]
pub struct Args {
    /// TOML run config.
    pub config: PathBuf,
    /// Worker threads, or "auto".
    #[arg(long)]
    pub workers: Option<WorkerCount>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Stdout {
    #[default]
    Table,
    Csv,
    None,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: PathBuf,
    pub table: PathBuf,
    /// What to print once the run finishes.
    #[serde(default)]
    pub stdout: Stdout,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub simulation: SimConfig,
    pub output: OutputConfig,
}

fn parse_config(text: &str) -> anyhow::Result<(RunConfig, bool)> {
    let de = toml::Deserializer::new(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let message = inner.message().to_string();
        match inner.span() {
            Some(span) => {
                let line = text[..span.start].matches('\n').count() + 1;
                anyhow::anyhow!("config `{path}` (line {line}): {message}")
            }
            None => anyhow::anyhow!("config `{path}`: {message}"),
        }
    })?;
    let table: toml::Table = text.parse()?;
    let has_workers = table.get("simulation").and_then(|s| s.get("workers")).is_some();
    Ok((config, has_workers))
}

fn resolve_workers(flag: Option<WorkerCount>, config: Option<WorkerCount>, env: Option<String>) -> anyhow::Result<WorkerCount> {
    if let Some(w) = flag.or(config) {
        return Ok(w);
    }
    match env {
        Some(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|e| anyhow::anyhow!("{WORKERS_ENV}: {e}"))
        }
        _ => Ok(WorkerCount::Auto),
    }
}

fn create(base: &Path, path: &Path) -> anyhow::Result<(PathBuf, File)> {
    let path = base.join(path);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok((path, file))
}

pub fn run(args: &Args, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read {}", args.config.display()))?;
    let (mut config, has_workers) =
        parse_config(&text).with_context(|| format!("{}", args.config.display()))?;
    let from_config = has_workers.then_some(config.simulation.workers);
    config.simulation.workers = resolve_workers(args.workers, from_config, std::env::var(WORKERS_ENV).ok())?;
    if let Err(SimError::InvalidConfig { key, message }) = config.simulation.validate() {
        bail!("{}: config `simulation.{key}`: {message}", args.config.display());
    }

    // open both outputs before the run so an unwritable path fails fast
    let base = args.config.parent().unwrap_or(Path::new(""));
    let (csv_path, mut csv_file) = create(base, &config.output.csv)?;
    let (table_path, mut table_file) = create(base, &config.output.table)?;

    let report = run_experiment(&config.simulation)?;
    let (csv, table) = (report.to_csv(), report.to_table());
    csv_file.write_all(csv.as_bytes()).with_context(|| format!("cannot write {}", csv_path.display()))?;
    table_file.write_all(table.as_bytes()).with_context(|| format!("cannot write {}", table_path.display()))?;
    match config.output.stdout {
        Stdout::Table => write!(out, "{table}")?,
        Stdout::Csv => write!(out, "{csv}")?,
        Stdout::None => {}
    }
    Ok(Outcome::Success)
}
