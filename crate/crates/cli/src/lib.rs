//! Configuration-driven runner behind the `tempered-actrw` binary.

pub mod config;
pub mod run;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use config::{Experiment, ExperimentConfig};
use run::{run_experiment, Outcome, COLUMNS};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
    #[error("output error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerics(_) => 3,
            RunError::Tolerance(_) => 4,
            RunError::Io(_) => 1,
        }
    }
}

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Writes `results.csv` as RFC 4180 (CRLF line ends, frozen column order).
pub fn write_results(path: &Path, outcome: &Outcome) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(io)?;
    w.write_record(COLUMNS).map_err(io)?;
    for r in &outcome.rows {
        w.write_record(r.record()).map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn axis_labels(cfg: &ExperimentConfig, quantity: &str) -> (&'static str, String) {
    let x = match (cfg.experiment, quantity) {
        (Experiment::Sample, _) => "k",
        (_, "density") => "x",
        (Experiment::Response, _) => "t_b",
        _ => "t",
    };
    (x, quantity.replace('_', " "))
}

pub fn run_config(cfg: &mut ExperimentConfig, ov: &Overrides) -> Result<PathBuf, RunError> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    let out = ov
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| RunError::Io(format!("{}: {e}", out.display())))?;

    let start = Instant::now();
    let outcome = run_experiment(cfg)?;
    let wall = start.elapsed().as_secs_f64();

    write_results(&out.join("results.csv"), &outcome)?;
    let write = |name: &str, bytes: &[u8]| {
        std::fs::write(out.join(name), bytes).map_err(|e| RunError::Io(format!("{name}: {e}")))
    };
    let (xl, yl) = axis_labels(cfg, &outcome.plot_quantity);
    let series = svg::series_of(&outcome.rows, &outcome.plot_quantity);
    write("plot.svg", svg::render(&cfg.title, xl, &yl, &series, cfg.plot_x, cfg.plot_y).as_bytes())?;
    for a in &outcome.artifacts {
        write(&a.name, &a.contents)?;
    }

    let passed = outcome.checks.iter().all(|c| c.passed);
    let summary = json!({
        "experiment": cfg.experiment,
        "title": cfg.title,
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "wall_time_s": wall,
        "rows": outcome.rows.len(),
        "config": cfg.raw,
        "resolved": cfg,
        "checks": outcome.checks,
        "status": if passed { "pass" } else { "fail" },
        "artifacts": std::iter::once("results.csv".to_string())
            .chain(std::iter::once("plot.svg".to_string()))
            .chain(outcome.artifacts.iter().map(|a| a.name.clone()))
            .collect::<Vec<_>>(),
        "extras": outcome.extras,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| RunError::Io(e.to_string()))?;
    write("summary.json", text.as_bytes())?;

    if !passed {
        let failed: Vec<String> = outcome
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        return Err(RunError::Tolerance(failed.join("; ")));
    }
    Ok(out)
}
