//! Config-driven experiment runner over `genfn-core`.
//!
//! A run reads an [`ExperimentConfig`], executes it, and writes into one
//! directory: `results.csv`, `plot.csv` (first column independent, the rest
//! named series), kind-specific extras, and `manifest.json` last. The
//! manifest echoes the fully resolved config and can be fed back to `run`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod registry;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

pub use config::{apply_override, Experiment, ExperimentConfig};
pub use error::{CliError, CliResult, ErrorRecord};
pub use output::{Artifacts, Table, OUT_ENV};
pub use registry::{Kind, KINDS};

use output::{to_json, write_atomic, MANIFEST_VERSION};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// Files written, manifest last.
    pub files: Vec<String>,
    pub manifest: Value,
}

/// `--out`, then the config's `output_dir`, then `$GENFN_LAB_OUT/<kind>`,
/// then `genfn-out/<kind>`.
pub fn resolve_out_dir(config: &ExperimentConfig, cli_out: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = &config.output_dir {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("genfn-out"));
    root.join(config.experiment.kind().name())
}

/// Executes the experiment and writes its artifacts. On failure an
/// `error.json` record is left in the output directory when it can be
/// created.
pub fn run(config: &ExperimentConfig, cli_out: Option<&Path>) -> CliResult<RunReport> {
    let out_dir = resolve_out_dir(config, cli_out);
    let result = run_into(config, &out_dir);
    if let Err(e) = &result {
        if fs::create_dir_all(&out_dir).is_ok() {
            let _ = write_atomic(&out_dir.join("error.json"), to_json(&e.record()).as_bytes());
        }
    }
    result
}

fn run_into(config: &ExperimentConfig, out_dir: &Path) -> CliResult<RunReport> {
    let start = Instant::now();
    let artifacts = experiments::execute(&config.experiment)?;
    let elapsed = start.elapsed().as_secs_f64();

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let stale = out_dir.join("error.json");
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
    }
    let mut files: Vec<(String, String)> = vec![
        ("results.csv".into(), artifacts.results.to_csv()),
        ("plot.csv".into(), artifacts.plot.to_csv()),
        ("plot.gp".into(), gnuplot_script(&artifacts.plot)),
    ];
    files.extend(artifacts.extras.iter().cloned());
    for (name, contents) in &files {
        write_atomic(&out_dir.join(name), contents.as_bytes())?;
    }

    let mut resolved = config.clone();
    resolved.output_dir = Some(out_dir.to_path_buf());
    let mut manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "generator": concat!("genfn ", env!("CARGO_PKG_VERSION")),
        "config": resolved.resolved(),
        "artifacts": files.iter().map(|(n, c)| json!({"file": n, "bytes": c.len()})).collect::<Vec<_>>(),
        "summary": artifacts.summary,
    });
    if !config.deterministic {
        manifest["elapsed_seconds"] = json!(elapsed);
    }
    write_atomic(&out_dir.join("manifest.json"), to_json(&manifest).as_bytes())?;

    let mut names: Vec<String> = files.into_iter().map(|(n, _)| n).collect();
    names.push("manifest.json".into());
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        files: names,
        manifest,
    })
}

/// Script for an external plotter: every series of `plot.csv` against the
/// first column.
fn gnuplot_script(plot: &Table) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    if plot.header.len() < 2 {
        return s;
    }
    let series: Vec<String> = (2..=plot.header.len())
        .map(|j| format!("'plot.csv' using 1:{j} with linespoints"))
        .collect();
    s.push_str("plot ");
    s.push_str(&series.join(", \\\n     "));
    s.push('\n');
    s
}

pub fn list() -> Vec<(&'static str, &'static str)> {
    KINDS.iter().map(|k| (k.name(), k.summary())).collect()
}

pub fn describe(name: &str) -> CliResult<Value> {
    Ok(name.parse::<Kind>()?.describe())
}
