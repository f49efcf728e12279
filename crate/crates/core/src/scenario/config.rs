use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{ConfigError, Stage};
use crate::detection::OverlapMode;
use crate::emissions::{ColumnMap, Sector};
use crate::forecast::FitConfig;
use crate::planner::{Allocation, LaborPolicy, DEFAULT_TREES_PER_WORKER};
use crate::species::SoilClimateKey;

pub const DEFAULT_PLANT_YEAR: i32 = 2025;
pub const DEFAULT_HOLDOUT: usize = 6;
pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_TIMELINE_YEARS: u32 = 10;

/// Scenario file as written. Every field is optional here; each subcommand
/// checks for the fields it needs so errors can name them.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub emissions_path: Option<PathBuf>,
    pub sector: Option<String>,
    pub holdout: Option<usize>,
    pub horizon: Option<usize>,
    pub labels_dir: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub kb_dir: Option<PathBuf>,
    pub species_csv: Option<PathBuf>,
    pub key: Option<KeySection>,
    pub plant_year: Option<i32>,
    pub allocation: Option<AllocationSection>,
    pub output_dir: Option<PathBuf>,
    /// Overrides the detected area.
    pub area_km2: Option<f64>,
    pub merge_overlaps: Option<bool>,
    pub class_label: Option<String>,
    pub trees_per_worker: Option<u32>,
    pub timeline_years: Option<u32>,
    /// Plan entries whose timelines feed the offset projection.
    pub offset_species: Option<Vec<String>>,
    /// Header -> sector mapping for emissions tables with unusual headers.
    pub columns: Option<BTreeMap<String, String>>,
    pub use_gateway: Option<bool>,
    pub forecast: Option<ForecastSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeySection {
    pub humidity_mm: f64,
    pub soil_type: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSection {
    /// `whole_area` or `fractions`.
    pub mode: String,
    pub fractions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    pub grid_steps: Option<usize>,
    pub seasonal_period: Option<usize>,
    pub refine: Option<bool>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub holdout: Option<usize>,
    pub horizon: Option<usize>,
    pub grid_steps: Option<usize>,
    pub seasonal_period: Option<usize>,
    pub sector: Option<String>,
    pub merge_overlaps: Option<bool>,
    pub output_dir: Option<PathBuf>,
    pub plant_year: Option<i32>,
}

impl ScenarioConfig {
    /// Read a TOML scenario. Relative paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.holdout.is_some() {
            self.holdout = o.holdout;
        }
        if o.horizon.is_some() {
            self.horizon = o.horizon;
        }
        if o.sector.is_some() {
            self.sector = o.sector.clone();
        }
        if o.merge_overlaps.is_some() {
            self.merge_overlaps = o.merge_overlaps;
        }
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir.clone();
        }
        if o.plant_year.is_some() {
            self.plant_year = o.plant_year;
        }
        if o.grid_steps.is_some() || o.seasonal_period.is_some() {
            let f = self.forecast.get_or_insert_with(Default::default);
            if o.grid_steps.is_some() {
                f.grid_steps = o.grid_steps;
            }
            if o.seasonal_period.is_some() {
                f.seasonal_period = o.seasonal_period;
            }
        }
    }

    /// Check and resolve the fields `stage` needs.
    pub fn validate(&self, stage: Stage) -> Result<Scenario, ConfigError> {
        let needs = stage.needs();
        let path_field =
            |field: &'static str, value: &Option<PathBuf>, dir: bool| -> Result<Option<PathBuf>, ConfigError> {
                let Some(p) = value else {
                    return Ok(None);
                };
                let full = if p.is_absolute() {
                    p.clone()
                } else {
                    self.base_dir.join(p)
                };
                let ok = if dir { full.is_dir() } else { full.is_file() };
                if !ok {
                    return Err(ConfigError::PathNotFound {
                        field,
                        path: full.display().to_string(),
                    });
                }
                Ok(Some(full))
            };
        let require = |field: &'static str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::Missing { field })
            }
        };

        let output_dir = self
            .output_dir
            .as_ref()
            .ok_or(ConfigError::Missing { field: "output_dir" })?;
        let output_dir = if output_dir.is_absolute() {
            output_dir.clone()
        } else {
            self.base_dir.join(output_dir)
        };

        let emissions_path = path_field("emissions_path", &self.emissions_path, false)?;
        let labels_dir = path_field("labels_dir", &self.labels_dir, true)?;
        let manifest_path = path_field("manifest_path", &self.manifest_path, false)?;
        let kb_dir = path_field("kb_dir", &self.kb_dir, true)?;
        let species_csv = path_field("species_csv", &self.species_csv, false)?;

        if needs.emissions {
            require("emissions_path", emissions_path.is_some())?;
        }
        if needs.sector {
            require("sector", self.sector.is_some())?;
        }
        if needs.labels || (needs.area && self.area_km2.is_none()) {
            require("labels_dir", labels_dir.is_some())?;
            require("manifest_path", manifest_path.is_some())?;
        }
        if needs.key {
            require("kb_dir", kb_dir.is_some())?;
            require("key", self.key.is_some())?;
        }
        if needs.profiles {
            require("species_csv", species_csv.is_some())?;
        }

        let sector = self
            .sector
            .as_deref()
            .map(|s| {
                s.parse::<Sector>().map_err(|e| ConfigError::Invalid {
                    field: "sector",
                    message: e.to_string(),
                })
            })
            .transpose()?;
        let key = self
            .key
            .as_ref()
            .map(|k| {
                SoilClimateKey::new(k.humidity_mm, &k.soil_type).map_err(|e| ConfigError::Invalid {
                    field: "key",
                    message: e.to_string(),
                })
            })
            .transpose()?;
        let allocation = match &self.allocation {
            None => Allocation::WholeArea,
            Some(a) => match (a.mode.as_str(), &a.fractions) {
                ("whole_area", _) => Allocation::WholeArea,
                ("fractions", Some(f)) => Allocation::Fractions(f.clone()),
                ("fractions", None) => {
                    return Err(ConfigError::Missing {
                        field: "allocation.fractions",
                    })
                }
                (other, _) => {
                    return Err(ConfigError::Invalid {
                        field: "allocation.mode",
                        message: format!("expected whole_area or fractions, got {other:?}"),
                    })
                }
            },
        };
        let holdout = self.holdout.unwrap_or(DEFAULT_HOLDOUT);
        if holdout == 0 {
            return Err(ConfigError::Invalid {
                field: "holdout",
                message: "must be at least 1".into(),
            });
        }
        let horizon = self.horizon.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(ConfigError::Invalid {
                field: "horizon",
                message: "must be at least 1".into(),
            });
        }
        let trees_per_worker = self.trees_per_worker.unwrap_or(DEFAULT_TREES_PER_WORKER);
        let labor = LaborPolicy::new(trees_per_worker).map_err(|e| ConfigError::Invalid {
            field: "trees_per_worker",
            message: e.to_string(),
        })?;
        if let Some(a) = self.area_km2 {
            if !(a.is_finite() && a >= 0.0) {
                return Err(ConfigError::Invalid {
                    field: "area_km2",
                    message: format!("must be non-negative, got {a}"),
                });
            }
        }
        let timeline_years = self.timeline_years.unwrap_or(DEFAULT_TIMELINE_YEARS);
        if timeline_years == 0 {
            return Err(ConfigError::Invalid {
                field: "timeline_years",
                message: "must be at least 1".into(),
            });
        }
        let f = self.forecast.clone().unwrap_or_default();
        let defaults = FitConfig::default();
        let fit = FitConfig {
            grid_steps: f.grid_steps.unwrap_or(defaults.grid_steps),
            refine: f.refine.unwrap_or(defaults.refine),
            seasonal_period: f.seasonal_period,
            ..defaults
        };
        if fit.grid_steps < 2 {
            return Err(ConfigError::Invalid {
                field: "forecast.grid_steps",
                message: "must be at least 2".into(),
            });
        }
        let columns = match &self.columns {
            None => ColumnMap::Infer,
            Some(m) => {
                let mut pairs = Vec::with_capacity(m.len());
                for (header, s) in m {
                    let sector = s.parse::<Sector>().map_err(|e| ConfigError::Invalid {
                        field: "columns",
                        message: e.to_string(),
                    })?;
                    pairs.push((header.clone(), sector));
                }
                ColumnMap::explicit(pairs)
            }
        };

        Ok(Scenario {
            emissions_path,
            columns,
            sector,
            holdout,
            horizon,
            fit,
            labels_dir,
            manifest_path,
            area_km2: self.area_km2,
            overlap: if self.merge_overlaps.unwrap_or(false) {
                OverlapMode::Union
            } else {
                OverlapMode::Sum
            },
            class_label: self.class_label.clone(),
            kb_dir,
            key,
            use_gateway: self.use_gateway.unwrap_or(false),
            species_csv,
            plant_year: self.plant_year.unwrap_or(DEFAULT_PLANT_YEAR),
            allocation,
            labor,
            timeline_years,
            offset_species: self.offset_species.clone(),
            output_dir,
        })
    }
}

/// Validated scenario with resolved paths and defaults applied.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub emissions_path: Option<PathBuf>,
    pub columns: ColumnMap,
    pub sector: Option<Sector>,
    pub holdout: usize,
    pub horizon: usize,
    pub fit: FitConfig,
    pub labels_dir: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub area_km2: Option<f64>,
    pub overlap: OverlapMode,
    pub class_label: Option<String>,
    pub kb_dir: Option<PathBuf>,
    pub key: Option<SoilClimateKey>,
    pub use_gateway: bool,
    pub species_csv: Option<PathBuf>,
    pub plant_year: i32,
    pub allocation: Allocation,
    pub labor: LaborPolicy,
    pub timeline_years: u32,
    pub offset_species: Option<Vec<String>>,
    pub output_dir: PathBuf,
}
