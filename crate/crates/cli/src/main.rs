mod cli;
mod config;
mod run;

use clap::Parser;
use cli::{to_config, Cli};
use config::ExperimentConfig;
use run::{csv_string, execute, Outcome, Status};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
struct Versions {
    growthgap_core: &'static str,
    growthgap_cli: &'static str,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    operation: &'static str,
    versions: Versions,
    seed: u64,
    config: &'a ExperimentConfig,
    status: &'static str,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncated: Option<&'a str>,
    artifacts: Vec<&'a Path>,
    result: &'a serde_json::Value,
}

#[derive(Serialize)]
struct Timings {
    operation: &'static str,
    started_unix_seconds: f64,
    wall_seconds: f64,
    threads: usize,
}

/// `out.json` → `out.timings.json`.
fn timings_path(json: &Path) -> PathBuf {
    let stem = json.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    json.with_file_name(format!("{stem}.timings.json"))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}

fn emit(cfg: &ExperimentConfig, outcome: &Outcome, timings: &Timings) -> anyhow::Result<()> {
    for (path, contents) in &outcome.artifacts {
        write_file(path, contents)?;
    }
    let csv = outcome.csv.as_ref().map(|t| csv_string(&t.header, &t.rows)).transpose()?;
    if let (Some(path), Some(csv)) = (&cfg.outputs.csv, &csv) {
        write_file(path, csv)?;
    }
    let summary = Summary {
        schema: growthgap::SCHEMA_VERSION,
        operation: cfg.run.name(),
        versions: Versions { growthgap_core: growthgap::VERSION, growthgap_cli: env!("CARGO_PKG_VERSION") },
        seed: cfg.rng_seed,
        config: cfg,
        status: outcome.status.label(),
        exit_code: outcome.status.exit_code(),
        error: outcome.error.as_deref(),
        truncated: outcome.truncated.as_deref(),
        artifacts: outcome.artifacts.iter().map(|(p, _)| p.as_path()).chain(cfg.outputs.csv.as_deref().filter(|_| csv.is_some())).collect(),
        result: &outcome.result,
    };
    let text = growthgap::format::to_json_string(&summary)? + "\n";
    let timing_text = growthgap::format::to_json_string(timings)? + "\n";
    match &cfg.outputs.json {
        Some(path) => {
            write_file(path, &text)?;
            write_file(&timings_path(path), &timing_text)?;
            // the summary went to a file, so stdout carries the series
            if let (None, Some(csv)) = (&cfg.outputs.csv, &csv) {
                std::io::stdout().write_all(csv.as_bytes())?;
            }
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            eprint!("{timing_text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let threads = cli.threads.unwrap_or(0);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(1);
    }
    let cfg = match to_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if cli.print_config {
        return match cfg.to_toml() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        };
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let outcome = execute(&cfg).unwrap_or_else(|e| Outcome {
        status: Status::Error,
        result: serde_json::Value::Null,
        error: Some(format!("{e:#}")),
        truncated: None,
        csv: None,
        artifacts: Vec::new(),
    });
    let timings = Timings {
        operation: cfg.run.name(),
        started_unix_seconds: started,
        wall_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    if let Some(msg) = &outcome.error {
        eprintln!("{}: {msg}", outcome.status.label());
    }
    if let Some(msg) = &outcome.truncated {
        eprintln!("truncated: {msg}");
    }
    if let Err(e) = emit(&cfg, &outcome, &timings) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(outcome.status.exit_code() as u8)
}
