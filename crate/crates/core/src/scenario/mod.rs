//! Declarative scenario runs: configuration, pipeline stages and artifacts.
//!
//! A scenario file names the inputs (emissions table, detection labels,
//! knowledge base, species profiles) and the output directory. Each stage
//! writes CSV/JSON artifacts there; `report` runs every stage and adds a
//! single JSON summary built from the same per-stage values.

mod config;
mod stages;

pub use config::{
    AllocationSection, ForecastSection, KeySection, Overrides, Scenario, ScenarioConfig, DEFAULT_HOLDOUT,
    DEFAULT_HORIZON, DEFAULT_PLANT_YEAR, DEFAULT_TIMELINE_YEARS,
};
pub use stages::{
    build_summary, run_stage, AreaReport, BacktestOutcome, IngestSummary, OffsetReport, PlanReport, RecommendReport,
    RunOutcome, ScenarioEcho, SeriesInfo, Summary,
};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::detection::DetectionError;
use crate::emissions::EmissionsError;
use crate::forecast::ForecastError;
use crate::numeric::round_json_floats;
use crate::offset::OffsetError;
use crate::planner::PlanError;
use crate::species::SpeciesError;

/// Significant digits kept for every float in JSON artifacts.
pub const JSON_SIGNIFICANT_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Backtest,
    Forecast,
    DetectArea,
    Recommend,
    Plan,
    Offset,
    Report,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Needs {
    pub emissions: bool,
    pub sector: bool,
    pub labels: bool,
    pub area: bool,
    pub key: bool,
    pub profiles: bool,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Backtest,
        Stage::Forecast,
        Stage::DetectArea,
        Stage::Recommend,
        Stage::Plan,
        Stage::Offset,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Backtest => "backtest",
            Stage::Forecast => "forecast",
            Stage::DetectArea => "detect-area",
            Stage::Recommend => "recommend",
            Stage::Plan => "plan",
            Stage::Offset => "offset",
            Stage::Report => "report",
        }
    }

    pub(crate) fn needs(self) -> Needs {
        let n = Needs::default();
        match self {
            Stage::Ingest | Stage::Backtest => Needs { emissions: true, ..n },
            Stage::Forecast => Needs {
                emissions: true,
                sector: true,
                ..n
            },
            Stage::DetectArea => Needs { labels: true, ..n },
            Stage::Recommend => Needs { key: true, ..n },
            Stage::Plan => Needs {
                area: true,
                key: true,
                profiles: true,
                ..n
            },
            Stage::Offset => Needs {
                emissions: true,
                sector: true,
                area: true,
                key: true,
                profiles: true,
                ..n
            },
            Stage::Report => Needs {
                emissions: true,
                sector: true,
                labels: true,
                area: true,
                key: true,
                profiles: true,
            },
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| ConfigError::Invalid {
                field: "subcommand",
                message: format!("unknown subcommand {s:?}"),
            })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing required field `{field}`")]
    Missing { field: &'static str },
    #[error("`{field}` points to a missing path: {path}")]
    PathNotFound { field: &'static str, path: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

impl ConfigError {
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Missing { field }
            | ConfigError::PathNotFound { field, .. }
            | ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Read { .. } => Some("config"),
            ConfigError::Parse(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Emissions(#[from] EmissionsError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Offset(#[from] OffsetError),
    #[error("io error: {0}")]
    Io(String),
}

impl PipelineError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Emissions(_) => "emissions",
            PipelineError::Forecast(_) => "forecast",
            PipelineError::Detection(_) => "detection",
            PipelineError::Species(_) => "species",
            PipelineError::Plan(_) => "plan",
            PipelineError::Offset(_) => "offset",
            PipelineError::Io(_) => "io",
        }
    }

    /// Machine-readable error document.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let PipelineError::Config(c) = self {
            if let Some(f) = c.field() {
                v["field"] = json!(f);
            }
        }
        v
    }
}

/// Serialize to pretty JSON with floats rounded to six significant digits.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String, PipelineError> {
    let mut v = serde_json::to_value(value).map_err(|e| PipelineError::Io(e.to_string()))?;
    round_json_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| PipelineError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes artifacts into one directory and removes them again on rollback.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        if !self.written.contains(&path) {
            self.written.push(path);
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        let text = to_stable_json(value)?;
        self.write_text(name, &text)
    }

    /// File names written so far, in write order.
    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_string))
            .collect()
    }

    pub fn rollback(&mut self) {
        for p in self.written.drain(..) {
            if let Err(e) = fs::remove_file(&p) {
                log::warn!("could not remove partial artifact {}: {e}", p.display());
            }
        }
    }
}

/// Load, override, validate and run one stage.
pub fn run_from_config(stage: Stage, config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, PipelineError> {
    let mut cfg = ScenarioConfig::load(config_path)?;
    cfg.apply(overrides);
    let scenario = cfg.validate(stage)?;
    run_stage(stage, &scenario)
}
