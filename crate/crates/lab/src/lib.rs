//! Experiment orchestration for the cross-situational learners: runs the
//! learning-curve, uncertainty, frequency, homonym, synonym and oracle
//! protocols from a JSON configuration and writes tables and SVG figures.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod plot;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
pub use experiments::Exec;
pub use manifest::RunManifest;
pub use table::{OutputFormat, Table};

/// Writes `table` as `<out>/<name>.<ext>`; returns the path.
pub fn write_table(
    table: &Table,
    out: &Path,
    name: &str,
    format: OutputFormat,
) -> LabResult<PathBuf> {
    fs::create_dir_all(out).map_err(|e| file_err(out, e))?;
    let path = out.join(format!("{name}.{}", format.extension()));
    fs::write(&path, table.to_bytes(format)?).map_err(|e| file_err(&path, e))?;
    Ok(path)
}

/// Writes the table and its figure, rendering the figure from the bytes
/// just written.
pub fn write_with_figure(
    table: &Table,
    out: &Path,
    name: &str,
    format: OutputFormat,
) -> LabResult<Vec<PathBuf>> {
    let data = write_table(table, out, name, format)?;
    let svg = render_file(&data, format)?;
    let path = out.join(format!("{name}.svg"));
    fs::write(&path, svg).map_err(|e| file_err(&path, e))?;
    Ok(vec![data, path])
}

/// Renders the SVG for a table file.
pub fn render_file(path: &Path, format: OutputFormat) -> LabResult<String> {
    let bytes = fs::read(path).map_err(|e| file_err(path, e))?;
    let table = Table::read(bytes.as_slice(), format)?;
    plot::render(&table)
}

pub(crate) fn file_err(path: &Path, source: std::io::Error) -> LabError {
    LabError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Every experiment, with outputs under `out`. The oracle check's verdict is
/// returned rather than raised so that all files are written first.
pub fn run_battery(
    config: &ExperimentConfig,
    exec: Exec,
    out: &Path,
    format: OutputFormat,
) -> LabResult<(RunManifest, experiments::OracleReport)> {
    config.validate()?;
    let start = Instant::now();
    let mut manifest = RunManifest::new(config.hash());
    type Runner = fn(&ExperimentConfig, Exec) -> LabResult<Table>;
    let runs: [(&str, Runner); 5] = [
        ("curve", experiments::run_curve),
        ("uncertainty", experiments::run_uncertainty),
        ("frequency", experiments::run_frequency),
        ("homonym", experiments::run_homonym),
        ("synonym", experiments::run_synonym),
    ];
    for (name, run) in runs {
        let table = run(config, exec)?;
        manifest
            .outputs
            .extend(write_with_figure(&table, out, name, format)?);
    }
    let oracle = experiments::run_oracle_check(config, exec)?;
    manifest
        .outputs
        .push(write_table(&oracle.agreement, out, "oracle", format)?);
    manifest.outputs.push(write_table(
        &oracle.likelihood,
        out,
        "oracle_loglik",
        format,
    )?);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_manifest(&manifest, out)?;
    Ok((manifest, oracle))
}

pub fn write_manifest(manifest: &RunManifest, out: &Path) -> LabResult<PathBuf> {
    fs::create_dir_all(out).map_err(|e| file_err(out, e))?;
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n")
        .map_err(|e| file_err(&path, e))?;
    Ok(path)
}
