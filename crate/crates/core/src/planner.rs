//! Tree counts, labor force and per-year growth timelines.
//!
//! Counts and labor round down: a partial tree does not fit, and a worker is
//! counted only for a full quota of trees. This reproduces the reference
//! plan (12,857 pears on 90,000 m² at 7 m² need 257 workers at 50 trees each).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::species::{SpeciesProfile, Stage};

/// Trees one worker plants in one planting campaign.
pub const DEFAULT_TREES_PER_WORKER: u32 = 50;

/// Years from planting until trees enter their first productive stage.
pub const PRODUCTIVE_ONSET_YEARS: u32 = 5;

pub const M2_PER_KM2: f64 = 1_000_000.0;

// Quotients within this relative distance below an integer are treated as
// that integer, absorbing km² -> m² conversion noise (0.09 km² * 1e6 can land
// a hair under 90,000 m²).
const FLOOR_SNAP_REL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("profile error: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, PlanError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaborPolicy {
    pub trees_per_worker: u32,
    pub campaign_note: String,
}

impl Default for LaborPolicy {
    fn default() -> Self {
        Self {
            trees_per_worker: DEFAULT_TREES_PER_WORKER,
            campaign_note: "three-month planting season".into(),
        }
    }
}

impl LaborPolicy {
    pub fn new(trees_per_worker: u32) -> Result<Self> {
        if trees_per_worker == 0 {
            return Err(PlanError::Argument("trees_per_worker must be at least 1".into()));
        }
        Ok(Self {
            trees_per_worker,
            ..Self::default()
        })
    }
}

/// `floor(area / spacing)`.
pub fn tree_count(area_m2: f64, spacing_m2: f64) -> Result<u64> {
    if !(spacing_m2.is_finite() && spacing_m2 > 0.0) {
        return Err(PlanError::Argument(format!(
            "spacing must be positive, got {spacing_m2}"
        )));
    }
    if !(area_m2.is_finite() && area_m2 >= 0.0) {
        return Err(PlanError::Argument(format!("area must be non-negative, got {area_m2}")));
    }
    let q = area_m2 / spacing_m2;
    let up = q.ceil();
    let n = if up - q <= FLOOR_SNAP_REL * up.max(1.0) {
        up
    } else {
        q.floor()
    };
    Ok(n as u64)
}

/// `floor(trees / trees_per_worker)`.
pub fn labor_force(trees: u64, policy: &LaborPolicy) -> u64 {
    trees / u64::from(policy.trees_per_worker.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "fractions", rename_all = "snake_case")]
pub enum Allocation {
    /// Every species is planned over the whole area; entries are
    /// alternatives, not a mix.
    WholeArea,
    /// Fraction of the area per species, aligned with the species list.
    Fractions(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEntry {
    pub species: String,
    pub area_m2: f64,
    pub tree_count: u64,
    pub labor: u64,
    pub spacing_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantingPlan {
    pub total_area_m2: f64,
    pub allocation: Allocation,
    pub policy: LaborPolicy,
    pub entries: Vec<PlanEntry>,
}

impl PlantingPlan {
    /// Rows: tree type, number of trees, labor force, space per tree, area allotted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tree_type,number_of_trees,labor_force,space_per_tree_m2,area_m2\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.species, e.tree_count, e.labor, e.spacing_m2, e.area_m2
            ));
        }
        out
    }
}

pub fn plan_for_area(
    total_area_km2: f64,
    species: &[SpeciesProfile],
    allocation: &Allocation,
    policy: &LaborPolicy,
) -> Result<PlantingPlan> {
    if !(total_area_km2.is_finite() && total_area_km2 >= 0.0) {
        return Err(PlanError::Argument(format!(
            "area must be non-negative, got {total_area_km2}"
        )));
    }
    let total_m2 = total_area_km2 * M2_PER_KM2;
    let areas: Vec<f64> = match allocation {
        Allocation::WholeArea => vec![total_m2; species.len()],
        Allocation::Fractions(fr) => {
            if fr.len() != species.len() {
                return Err(PlanError::Argument(format!(
                    "{} fractions for {} species",
                    fr.len(),
                    species.len()
                )));
            }
            if fr.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
                return Err(PlanError::Argument("fractions must be non-negative".into()));
            }
            let sum: f64 = fr.iter().sum();
            if sum > 1.0 + 1e-12 {
                return Err(PlanError::Argument(format!("fractions sum to {sum} > 1")));
            }
            fr.iter().map(|f| f * total_m2).collect()
        }
    };
    let entries = species
        .iter()
        .zip(areas)
        .map(|(p, area)| {
            let trees = tree_count(area, p.spacing_m2)?;
            Ok(PlanEntry {
                species: p.name.to_string(),
                area_m2: area,
                tree_count: trees,
                labor: labor_force(trees, policy),
                spacing_m2: p.spacing_m2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlantingPlan {
        total_area_m2: total_m2,
        allocation: allocation.clone(),
        policy: policy.clone(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineRow {
    pub year: i32,
    /// `None` before the first productive stage.
    pub stage: Option<Stage>,
    pub o2_kg: f64,
    pub co2_kg: f64,
    pub yield_kg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTimeline {
    pub species: String,
    pub plant_year: i32,
    pub tree_count: u64,
    pub rows: Vec<TimelineRow>,
}

impl GrowthTimeline {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,stage,o2_kg,co2_kg,yield_kg\n");
        for r in &self.rows {
            let stage = r
                .stage
                .map(|s| s.to_string())
                .unwrap_or_else(|| "pre_productive".into());
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.year, stage, r.o2_kg, r.co2_kg, r.yield_kg
            ));
        }
        out
    }
}

/// Per-year output of `trees` trees of one species planted in `plant_year`,
/// covering `[plant_year, plant_year + horizon_years)`.
pub fn growth_timeline(
    profile: &SpeciesProfile,
    trees: u64,
    plant_year: i32,
    horizon_years: u32,
) -> Result<GrowthTimeline> {
    if horizon_years < 1 {
        return Err(PlanError::Argument("horizon must be at least 1 year".into()));
    }
    let first_start = profile
        .stages
        .iter()
        .map(|s| s.start_offset_years)
        .min()
        .ok_or_else(|| PlanError::Profile(format!("{} has no stages", profile.name)))?;
    let n = trees as f64;
    let rows = (0..horizon_years)
        .map(|age| {
            let year = plant_year + age as i32;
            let zero = TimelineRow {
                year,
                stage: None,
                o2_kg: 0.0,
                co2_kg: 0.0,
                yield_kg: 0.0,
            };
            if age < PRODUCTIVE_ONSET_YEARS.max(first_start) {
                return Ok(zero);
            }
            let s = profile
                .stage_at(age)
                .ok_or_else(|| PlanError::Profile(format!("{} has no stage covering age {age}", profile.name)))?;
            Ok(TimelineRow {
                year,
                stage: Some(s.stage),
                o2_kg: s.o2_kg_per_tree_year * n,
                co2_kg: s.co2_kg_per_tree_year * n,
                yield_kg: s.yield_kg_per_tree_year * n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthTimeline {
        species: profile.name.to_string(),
        plant_year,
        tree_count: trees,
        rows,
    })
}
