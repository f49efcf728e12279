//! `canopy-plan <subcommand> --config <path> [overrides]`
//!
//! Prints one JSON document on stdout: `{"status": "ok", ...}` with the
//! stage result and artifact names, or `{"status": "error", ...}`. Exit
//! status is 0 on success, 1 on a module error and 2 on a config error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use canopy_core::scenario::{run_from_config, Overrides, Stage};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "canopy-plan",
    version,
    about = "Reforestation planning and emissions offset pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the emissions table and write canonical per-sector series.
    Ingest(Common),
    /// Hold out the last years of each sector (or `--sector`) and score the forecast.
    Backtest(Common),
    /// Fit the configured sector on its full history and forecast ahead.
    Forecast(Common),
    /// Sum detected planting area from label files.
    DetectArea(Common),
    /// Recommend species for the configured humidity / soil key.
    Recommend(Common),
    /// Tree counts, labor and growth timelines for the recommended species.
    Plan(Common),
    /// Net emissions after sequestration by the planted trees.
    Offset(Common),
    /// Run every stage and write summary.json.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    grid_steps: Option<usize>,
    #[arg(long)]
    seasonal_period: Option<usize>,
    #[arg(long)]
    sector: Option<String>,
    /// Count overlapping boxes once.
    #[arg(long)]
    merge_overlaps: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    plant_year: Option<i32>,
}

impl Command {
    fn split(self) -> (Stage, Common) {
        match self {
            Command::Ingest(c) => (Stage::Ingest, c),
            Command::Backtest(c) => (Stage::Backtest, c),
            Command::Forecast(c) => (Stage::Forecast, c),
            Command::DetectArea(c) => (Stage::DetectArea, c),
            Command::Recommend(c) => (Stage::Recommend, c),
            Command::Plan(c) => (Stage::Plan, c),
            Command::Offset(c) => (Stage::Offset, c),
            Command::Report(c) => (Stage::Report, c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (stage, c) = Cli::parse().command.split();
    let overrides = Overrides {
        holdout: c.holdout,
        horizon: c.horizon,
        grid_steps: c.grid_steps,
        seasonal_period: c.seasonal_period,
        sector: c.sector,
        merge_overlaps: c.merge_overlaps.then_some(true),
        output_dir: c.output_dir,
        plant_year: c.plant_year,
    };
    let (doc, code) = match run_from_config(stage, &c.config, &overrides) {
        Ok(out) => (
            json!({
                "status": "ok",
                "command": stage.as_str(),
                "artifacts": out.artifacts,
                "result": out.result,
            }),
            0,
        ),
        Err(e) => {
            let mut doc = e.to_json();
            doc["command"] = json!(stage.as_str());
            (doc, e.exit_code())
        }
    };
    let text = serde_json::to_string_pretty(&doc).expect("JSON value serializes");
    // A closed pipe on stdout is not worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    ExitCode::from(code as u8)
}
