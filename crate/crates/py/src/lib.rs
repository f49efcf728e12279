//! Python module `canopy_plan`.
//!
//! Structured results cross the boundary as plain dicts and lists (the same
//! shape as the CLI's JSON output).

use std::path::{Path, PathBuf};

use canopy_core::detection::{load_labels_dir, parse_manifest, ClassMap, OverlapMode};
use canopy_core::emissions::{parse_emissions_table, ColumnMap, Sector};
use canopy_core::forecast::{backtest, forecast_series, FitConfig};
use canopy_core::planner::{self, Allocation, LaborPolicy};
use canopy_core::scenario::{run_from_config, Overrides, Stage};
use canopy_core::species::{self, parse_species_csv, SoilClimateKey, SpeciesName};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(canopy_plan, CanopyError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    CanopyError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn fit_config(grid_steps: usize, seasonal_period: Option<usize>) -> FitConfig {
    FitConfig {
        grid_steps,
        seasonal_period,
        ..FitConfig::default()
    }
}

/// Annual emissions of one sector.
#[pyclass(name = "SectorSeries", module = "canopy_plan")]
struct PySectorSeries {
    inner: canopy_core::SectorSeries,
}

#[pymethods]
impl PySectorSeries {
    #[new]
    fn new(sector: &str, first_year: i32, values: Vec<f64>) -> PyResult<Self> {
        let sector: Sector = sector.parse().map_err(err)?;
        let inner = canopy_core::SectorSeries::from_values(sector, first_year, &values).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn sector(&self) -> String {
        self.inner.sector().to_string()
    }

    #[getter]
    fn first_year(&self) -> i32 {
        self.inner.first_year()
    }

    #[getter]
    fn last_year(&self) -> i32 {
        self.inner.last_year()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SectorSeries({:?}, {}..={})",
            self.inner.sector().to_string(),
            self.inner.first_year(),
            self.inner.last_year()
        )
    }

    /// Hold out the last `holdout` years and score the forecast.
    #[pyo3(signature = (holdout = 6, grid_steps = 21, seasonal_period = None))]
    fn backtest(
        &self,
        py: Python<'_>,
        holdout: usize,
        grid_steps: usize,
        seasonal_period: Option<usize>,
    ) -> PyResult<Py<PyAny>> {
        let report = backtest(&self.inner, holdout, &fit_config(grid_steps, seasonal_period)).map_err(err)?;
        to_py(py, &report)
    }

    /// Fit on the full series and forecast `horizon` years ahead.
    #[pyo3(signature = (horizon = 10, grid_steps = 21, seasonal_period = None))]
    fn forecast(
        &self,
        py: Python<'_>,
        horizon: usize,
        grid_steps: usize,
        seasonal_period: Option<usize>,
    ) -> PyResult<Py<PyAny>> {
        let run = forecast_series(&self.inner, horizon, &fit_config(grid_steps, seasonal_period)).map_err(err)?;
        to_py(py, &run)
    }
}

/// Species reference documents keyed by humidity and soil type.
#[pyclass(name = "KnowledgeBase", module = "canopy_plan")]
struct PyKnowledgeBase {
    inner: species::KnowledgeBase,
}

#[pymethods]
impl PyKnowledgeBase {
    #[staticmethod]
    fn from_dir(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: species::load_kb_dir(&path).map_err(err)?,
        })
    }

    /// `documents` is a list of `(source_name, text)` pairs.
    #[staticmethod]
    fn from_texts(documents: Vec<(String, String)>) -> PyResult<Self> {
        Ok(Self {
            inner: species::load_kb(&documents).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn chunk_ids(&self) -> Vec<String> {
        self.inner.chunks().map(|c| c.id.clone()).collect()
    }

    fn recommend(&self, py: Python<'_>, humidity_mm: f64, soil_type: &str) -> PyResult<Py<PyAny>> {
        let key = SoilClimateKey::new(humidity_mm, soil_type).map_err(err)?;
        to_py(py, &species::recommend_species(&key, &self.inner).map_err(err)?)
    }
}

#[pyfunction]
fn error_rate(actual: Vec<f64>, predicted: Vec<f64>) -> PyResult<f64> {
    canopy_core::forecast::error_rate(&actual, &predicted).map_err(err)
}

#[pyfunction]
fn error_stddev(actual: Vec<f64>, predicted: Vec<f64>) -> PyResult<f64> {
    canopy_core::forecast::error_stddev(&actual, &predicted).map_err(err)
}

#[pyfunction]
fn tree_count(area_m2: f64, spacing_m2: f64) -> PyResult<u64> {
    planner::tree_count(area_m2, spacing_m2).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (trees, trees_per_worker = 50))]
fn labor_force(trees: u64, trees_per_worker: u32) -> PyResult<u64> {
    Ok(planner::labor_force(
        trees,
        &LaborPolicy::new(trees_per_worker).map_err(err)?,
    ))
}

#[pyfunction]
fn normalize_soil(label: &str) -> String {
    species::normalize_soil(label)
}

/// Parse an emissions table into `{sector: SectorSeries}`.
#[pyfunction]
fn load_emissions(text: &str) -> PyResult<Vec<PySectorSeries>> {
    let ds = parse_emissions_table(text, &ColumnMap::Infer, "").map_err(err)?;
    Ok(ds.series.into_values().map(|inner| PySectorSeries { inner }).collect())
}

/// Total detected area (km²) from a manifest and a label directory.
#[pyfunction]
#[pyo3(signature = (manifest_path, labels_dir, merge_overlaps = false))]
fn detected_area(manifest_path: PathBuf, labels_dir: PathBuf, merge_overlaps: bool) -> PyResult<f64> {
    let text = std::fs::read_to_string(&manifest_path).map_err(err)?;
    let metas = parse_manifest(&text).map_err(err)?;
    let (regions, _) = load_labels_dir(&labels_dir, metas, &ClassMap::default()).map_err(err)?;
    let mode = if merge_overlaps {
        OverlapMode::Union
    } else {
        OverlapMode::Sum
    };
    Ok(regions.aggregate(mode).map_err(err)?.total_area_km2)
}

/// Tree counts and labor for species profiles (CSV text) over an area.
#[pyfunction]
#[pyo3(signature = (area_km2, species_csv, fractions = None, trees_per_worker = 50))]
fn plan_for_area(
    py: Python<'_>,
    area_km2: f64,
    species_csv: &str,
    fractions: Option<Vec<f64>>,
    trees_per_worker: u32,
) -> PyResult<Py<PyAny>> {
    let profiles = parse_species_csv(species_csv).map_err(err)?;
    let allocation = fractions.map_or(Allocation::WholeArea, Allocation::Fractions);
    let policy = LaborPolicy::new(trees_per_worker).map_err(err)?;
    to_py(
        py,
        &planner::plan_for_area(area_km2, &profiles, &allocation, &policy).map_err(err)?,
    )
}

/// Per-year output of `trees` trees of `species` planted in `plant_year`.
#[pyfunction]
#[pyo3(signature = (species_csv, species, trees, plant_year = 2025, horizon_years = 10))]
fn growth_timeline(
    py: Python<'_>,
    species_csv: &str,
    species: &str,
    trees: u64,
    plant_year: i32,
    horizon_years: u32,
) -> PyResult<Py<PyAny>> {
    let profiles = parse_species_csv(species_csv).map_err(err)?;
    let wanted = SpeciesName::parse(species);
    let profile = profiles
        .iter()
        .find(|p| p.name.matches(&wanted))
        .ok_or_else(|| err(format!("no profile for {species}")))?;
    to_py(
        py,
        &planner::growth_timeline(profile, trees, plant_year, horizon_years).map_err(err)?,
    )
}

/// Run one pipeline stage from a scenario file; returns the stage result.
#[pyfunction]
#[pyo3(signature = (stage, config, output_dir = None, sector = None, holdout = None, horizon = None, plant_year = None))]
#[allow(clippy::too_many_arguments)]
fn run_scenario(
    py: Python<'_>,
    stage: &str,
    config: PathBuf,
    output_dir: Option<PathBuf>,
    sector: Option<String>,
    holdout: Option<usize>,
    horizon: Option<usize>,
    plant_year: Option<i32>,
) -> PyResult<Py<PyAny>> {
    let stage: Stage = stage.parse().map_err(err)?;
    let overrides = Overrides {
        output_dir,
        sector,
        holdout,
        horizon,
        plant_year,
        ..Default::default()
    };
    let outcome = run_from_config(stage, Path::new(&config), &overrides).map_err(|e| err(e.to_json()))?;
    to_py(py, &outcome)
}

#[pymodule]
fn canopy_plan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CanopyError", m.py().get_type::<CanopyError>())?;
    m.add_class::<PySectorSeries>()?;
    m.add_class::<PyKnowledgeBase>()?;
    m.add_function(wrap_pyfunction!(error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(error_stddev, m)?)?;
    m.add_function(wrap_pyfunction!(tree_count, m)?)?;
    m.add_function(wrap_pyfunction!(labor_force, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_soil, m)?)?;
    m.add_function(wrap_pyfunction!(load_emissions, m)?)?;
    m.add_function(wrap_pyfunction!(detected_area, m)?)?;
    m.add_function(wrap_pyfunction!(plan_for_area, m)?)?;
    m.add_function(wrap_pyfunction!(growth_timeline, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
