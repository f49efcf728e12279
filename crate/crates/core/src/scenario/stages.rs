use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{ArtifactWriter, ConfigError, PipelineError, Scenario, Stage};
use crate::detection::{load_labels_dir, parse_manifest, AreaSummary, ClassMap, OverlapMode, SUITABLE_PLACE};
use crate::emissions::{parse_emissions_table, EmissionsDataset, Sector};
use crate::forecast::{backtest, backtest_all, forecast_series, BacktestReport, ForecastRun};
use crate::offset::{project_offset, OffsetRow};
use crate::planner::{growth_timeline, plan_for_area, Allocation, GrowthTimeline, PlantingPlan};
use crate::species::{
    generate_via_gateway, load_kb_dir, parse_species_csv, recommend_species, retrieve_chunks, EnrichedText,
    HttpGateway, SoilClimateKey, SpeciesName, SpeciesProfile, TextGenerator,
};

type Result<T> = std::result::Result<T, PipelineError>;

/// Largest allowed gap between the planting year and the first forecast year.
const PLANT_YEAR_LOOKBACK: i32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub stage: Stage,
    /// Artifact file names in `output_dir`.
    pub artifacts: Vec<String>,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesInfo {
    pub sector: Sector,
    pub first_year: i32,
    pub last_year: i32,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub source: String,
    pub series: Vec<SeriesInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BacktestOutcome {
    Ok(Box<BacktestReport>),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaReport {
    pub class_label: String,
    pub mode: OverlapMode,
    pub images: usize,
    pub positive_images: usize,
    pub boxes: usize,
    pub clamped_boxes: usize,
    pub total_area_km2: f64,
    #[serde(skip)]
    pub summary: AreaSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendReport {
    pub key: SoilClimateKey,
    pub source_chunk_id: String,
    pub score: f64,
    /// Local names in reference order.
    pub species_names: Vec<String>,
    /// Names with aliases, e.g. `Ərik (Apricot)`.
    pub species: Vec<String>,
    pub text: EnrichedText,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub area_km2: f64,
    /// `detections` or `config`.
    pub area_source: String,
    pub plant_year: i32,
    pub plan: PlantingPlan,
    pub timelines: Vec<GrowthTimeline>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetReport {
    pub sector: Sector,
    pub plant_year: i32,
    pub species: Vec<String>,
    pub first_sequestration_year: Option<i32>,
    pub crossover_year: Option<i32>,
    pub rows: Vec<OffsetRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub sector: Option<Sector>,
    pub holdout: usize,
    pub horizon: usize,
    pub plant_year: i32,
    pub allocation: Allocation,
    pub trees_per_worker: u32,
}

/// Everything `report` produces, one field per stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: ScenarioEcho,
    pub ingest: IngestSummary,
    pub backtest: BTreeMap<Sector, BacktestOutcome>,
    pub forecast: ForecastRun,
    pub area: AreaReport,
    pub recommendation: RecommendReport,
    pub plan: PlanReport,
    pub offset: OffsetReport,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

fn required<'a, T>(v: &'a Option<T>, field: &'static str) -> Result<&'a T> {
    v.as_ref().ok_or(PipelineError::Config(ConfigError::Missing { field }))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| PipelineError::Io(e.to_string()))
}

/// File-name friendly species label: the alias when present.
fn slug(name: &str) -> String {
    let n = SpeciesName::parse(name);
    n.alias
        .as_deref()
        .unwrap_or(&n.name)
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                '_'
            }
        })
        .collect()
}

fn load_dataset(sc: &Scenario) -> Result<EmissionsDataset> {
    let path = required(&sc.emissions_path, "emissions_path")?;
    let note = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    Ok(parse_emissions_table(&read(path)?, &sc.columns, note)?)
}

fn ingest(ds: &EmissionsDataset) -> IngestSummary {
    IngestSummary {
        source: ds.source_note.clone(),
        series: ds
            .series
            .values()
            .map(|s| SeriesInfo {
                sector: s.sector().clone(),
                first_year: s.first_year(),
                last_year: s.last_year(),
                observations: s.len(),
            })
            .collect(),
    }
}

fn sector_series<'a>(sc: &Scenario, ds: &'a EmissionsDataset) -> Result<&'a crate::emissions::SectorSeries> {
    let sector = required(&sc.sector, "sector")?;
    ds.get(sector).ok_or_else(|| {
        PipelineError::Config(ConfigError::Invalid {
            field: "sector",
            message: format!("sector {sector} not in {}", ds.source_note),
        })
    })
}

fn backtest_table(sc: &Scenario, ds: &EmissionsDataset) -> BTreeMap<Sector, BacktestOutcome> {
    backtest_all(ds, sc.holdout, &sc.fit)
        .into_iter()
        .map(|(s, r)| {
            let outcome = match r {
                Ok(rep) => BacktestOutcome::Ok(Box::new(rep)),
                Err(e) => BacktestOutcome::Failed { error: e.to_string() },
            };
            (s, outcome)
        })
        .collect()
}

fn forecast(sc: &Scenario, ds: &EmissionsDataset) -> Result<ForecastRun> {
    Ok(forecast_series(sector_series(sc, ds)?, sc.horizon, &sc.fit)?)
}

fn detect_area(sc: &Scenario) -> Result<AreaReport> {
    let manifest = required(&sc.manifest_path, "manifest_path")?;
    let labels = required(&sc.labels_dir, "labels_dir")?;
    let metas = parse_manifest(&read(manifest)?)?;
    let (regions, clamped) = load_labels_dir(labels, metas, &ClassMap::default())?;
    let class_label = sc.class_label.clone().unwrap_or_else(|| SUITABLE_PLACE.to_string());
    let regions = regions.filter_class(&class_label);
    let summary = regions.aggregate(sc.overlap)?;
    Ok(AreaReport {
        class_label,
        mode: sc.overlap,
        images: regions.metas.len(),
        positive_images: regions.positive_images().len(),
        boxes: regions.boxes.values().map(Vec::len).sum(),
        clamped_boxes: clamped,
        total_area_km2: summary.total_area_km2,
        summary,
    })
}

fn recommend(sc: &Scenario) -> Result<RecommendReport> {
    let kb = load_kb_dir(required(&sc.kb_dir, "kb_dir")?)?;
    let key = required(&sc.key, "key")?;
    let rec = recommend_species(key, &kb)?;
    let top = retrieve_chunks(key, &kb, 1)?;
    let chunk = top[0].chunk;
    let gateway = if sc.use_gateway { HttpGateway::from_env() } else { None };
    let text = generate_via_gateway(&rec, chunk, gateway.as_ref().map(|g| g as &dyn TextGenerator));
    Ok(RecommendReport {
        key: key.clone(),
        source_chunk_id: rec.source_chunk_id.clone(),
        score: top[0].score,
        species_names: rec.species_names.clone(),
        species: rec.species.iter().map(|s| s.to_string()).collect(),
        text,
    })
}

fn plan(sc: &Scenario, rec: &RecommendReport, area: Option<&AreaReport>) -> Result<PlanReport> {
    let profiles = parse_species_csv(&read(required(&sc.species_csv, "species_csv")?)?)?;
    let mut warnings = Vec::new();
    let mut chosen: Vec<SpeciesProfile> = Vec::new();
    for name in &rec.species {
        let wanted = SpeciesName::parse(name);
        match profiles.iter().find(|p| p.name.matches(&wanted)) {
            Some(p) => chosen.push(p.clone()),
            None => warnings.push(format!("no growth profile for recommended species {name}")),
        }
    }
    if chosen.is_empty() {
        return Err(
            crate::planner::PlanError::Profile("none of the recommended species has a growth profile".into()).into(),
        );
    }
    let (area_km2, area_source) = match (sc.area_km2, area) {
        (Some(a), _) => (a, "config"),
        (None, Some(r)) => (r.total_area_km2, "detections"),
        (None, None) => return Err(ConfigError::Missing { field: "area_km2" }.into()),
    };
    let plan = plan_for_area(area_km2, &chosen, &sc.allocation, &sc.labor)?;
    let timelines = plan
        .entries
        .iter()
        .zip(&chosen)
        .map(|(e, p)| growth_timeline(p, e.tree_count, sc.plant_year, sc.timeline_years))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(PlanReport {
        area_km2,
        area_source: area_source.into(),
        plant_year: sc.plant_year,
        plan,
        timelines,
        warnings,
    })
}

fn offset(sc: &Scenario, run: &ForecastRun, plan: &PlanReport) -> Result<OffsetReport> {
    if let Some(first) = run.forecast.first() {
        if sc.plant_year < first.year - PLANT_YEAR_LOOKBACK {
            return Err(ConfigError::Invalid {
                field: "plant_year",
                message: format!(
                    "{} is more than {PLANT_YEAR_LOOKBACK} years before the forecast start {}",
                    sc.plant_year, first.year
                ),
            }
            .into());
        }
    }
    let selected: Vec<GrowthTimeline> = match (&sc.offset_species, &sc.allocation) {
        (Some(names), _) => {
            let mut out = Vec::new();
            for n in names {
                let wanted = SpeciesName::parse(n);
                let t = plan
                    .timelines
                    .iter()
                    .find(|t| SpeciesName::parse(&t.species).matches(&wanted))
                    .ok_or_else(|| ConfigError::Invalid {
                        field: "offset_species",
                        message: format!("{n} is not in the plan"),
                    })?;
                out.push(t.clone());
            }
            out
        }
        // Whole-area entries are alternatives; use the first one.
        (None, Allocation::WholeArea) => plan.timelines.iter().take(1).cloned().collect(),
        (None, Allocation::Fractions(_)) => plan.timelines.clone(),
    };
    let projection = project_offset(&run.forecast, &selected)?;
    Ok(OffsetReport {
        sector: run.sector.clone(),
        plant_year: sc.plant_year,
        first_sequestration_year: projection.first_sequestration_year(),
        crossover_year: projection.crossover_year(),
        species: projection.species,
        rows: projection.rows,
    })
}

fn offset_csv(r: &OffsetReport) -> String {
    crate::offset::OffsetProjection {
        rows: r.rows.clone(),
        species: r.species.clone(),
    }
    .to_csv()
}

fn write_area(w: &mut ArtifactWriter, a: &AreaReport) -> Result<()> {
    w.write_text("area.csv", &a.summary.to_csv())?;
    w.write_json("area.json", a)
}

fn write_recommendation(w: &mut ArtifactWriter, r: &RecommendReport) -> Result<()> {
    w.write_text("recommendation.txt", &r.text.text)?;
    w.write_json("recommendation.json", r)
}

fn write_plan(w: &mut ArtifactWriter, p: &PlanReport) -> Result<()> {
    w.write_text("plan.csv", &p.plan.to_csv())?;
    for t in &p.timelines {
        w.write_text(&format!("timeline_{}.csv", slug(&t.species)), &t.to_csv())?;
    }
    w.write_json("plan.json", p)
}

fn write_forecast(w: &mut ArtifactWriter, f: &ForecastRun) -> Result<()> {
    w.write_text(&format!("forecast_{}.csv", f.sector), &f.to_csv())?;
    w.write_json(&format!("forecast_{}.json", f.sector), f)
}

fn write_offset(w: &mut ArtifactWriter, o: &OffsetReport) -> Result<()> {
    w.write_text("offset.csv", &offset_csv(o))?;
    w.write_json("offset.json", o)
}

fn write_backtest_table(w: &mut ArtifactWriter, t: &BTreeMap<Sector, BacktestOutcome>) -> Result<()> {
    for (s, o) in t {
        if let BacktestOutcome::Ok(r) = o {
            w.write_text(&format!("backtest_{s}.csv"), &r.to_csv())?;
        }
    }
    w.write_json("backtest.json", t)
}

fn execute(stage: Stage, sc: &Scenario, w: &mut ArtifactWriter) -> Result<Value> {
    match stage {
        Stage::Ingest => {
            let ds = load_dataset(sc)?;
            for s in ds.series.values() {
                w.write_text(&format!("emissions_{}.csv", s.sector()), &s.to_canonical_csv())?;
            }
            let summary = ingest(&ds);
            w.write_json("ingest.json", &summary)?;
            to_value(&summary)
        }
        Stage::Backtest => {
            let ds = load_dataset(sc)?;
            match &sc.sector {
                Some(_) => {
                    let rep = backtest(sector_series(sc, &ds)?, sc.holdout, &sc.fit)?;
                    w.write_text(&format!("backtest_{}.csv", rep.sector), &rep.to_csv())?;
                    w.write_json(&format!("backtest_{}.json", rep.sector), &rep)?;
                    to_value(&rep)
                }
                None => {
                    let table = backtest_table(sc, &ds);
                    write_backtest_table(w, &table)?;
                    to_value(&table)
                }
            }
        }
        Stage::Forecast => {
            let run = forecast(sc, &load_dataset(sc)?)?;
            write_forecast(w, &run)?;
            to_value(&run)
        }
        Stage::DetectArea => {
            let a = detect_area(sc)?;
            write_area(w, &a)?;
            to_value(&a)
        }
        Stage::Recommend => {
            let r = recommend(sc)?;
            write_recommendation(w, &r)?;
            to_value(&r)
        }
        Stage::Plan => {
            let area = if sc.area_km2.is_none() {
                Some(detect_area(sc)?)
            } else {
                None
            };
            let p = plan(sc, &recommend(sc)?, area.as_ref())?;
            write_plan(w, &p)?;
            to_value(&p)
        }
        Stage::Offset => {
            let run = forecast(sc, &load_dataset(sc)?)?;
            let area = if sc.area_km2.is_none() {
                Some(detect_area(sc)?)
            } else {
                None
            };
            let p = plan(sc, &recommend(sc)?, area.as_ref())?;
            let o = offset(sc, &run, &p)?;
            write_offset(w, &o)?;
            to_value(&o)
        }
        Stage::Report => {
            let summary = build_summary(sc)?;
            for s in load_dataset(sc)?.series.values() {
                w.write_text(&format!("emissions_{}.csv", s.sector()), &s.to_canonical_csv())?;
            }
            write_backtest_table(w, &summary.backtest)?;
            write_forecast(w, &summary.forecast)?;
            write_area(w, &summary.area)?;
            write_recommendation(w, &summary.recommendation)?;
            write_plan(w, &summary.plan)?;
            write_offset(w, &summary.offset)?;
            w.write_json("summary.json", &summary)?;
            to_value(&summary)
        }
    }
}

/// Run every stage and collect the results.
pub fn build_summary(sc: &Scenario) -> Result<Summary> {
    let ds = load_dataset(sc)?;
    let run = forecast(sc, &ds)?;
    let area = detect_area(sc)?;
    let recommendation = recommend(sc)?;
    let plan = plan(sc, &recommendation, Some(&area))?;
    let offset = offset(sc, &run, &plan)?;
    Ok(Summary {
        scenario: ScenarioEcho {
            sector: sc.sector.clone(),
            holdout: sc.holdout,
            horizon: sc.horizon,
            plant_year: sc.plant_year,
            allocation: sc.allocation.clone(),
            trees_per_worker: sc.labor.trees_per_worker,
        },
        ingest: ingest(&ds),
        backtest: backtest_table(sc, &ds),
        forecast: run,
        area,
        recommendation,
        plan,
        offset,
    })
}

/// Run `stage`, writing its artifacts into the scenario's output directory.
/// On failure every artifact written by this run is removed.
pub fn run_stage(stage: Stage, sc: &Scenario) -> Result<RunOutcome> {
    let mut w = ArtifactWriter::new(&sc.output_dir)?;
    match execute(stage, sc, &mut w) {
        Ok(mut result) => {
            crate::numeric::round_json_floats(&mut result);
            Ok(RunOutcome {
                stage,
                artifacts: w.names(),
                result,
            })
        }
        Err(e) => {
            w.rollback();
            Err(e)
        }
    }
}
