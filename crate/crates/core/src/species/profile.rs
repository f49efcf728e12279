//! Per-species growth tables.
//!
//! Rates are kg per tree per year while the tree is in the given stage.
//! Stage bounds are fixed ages since planting: young 5–10, mature 11–20,
//! old 21 onward.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, SpeciesError, SpeciesName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthClass {
    Fast,
    Medium,
    Slow,
}

impl FromStr for GrowthClass {
    type Err = SpeciesError;

    fn from_str(s: &str) -> Result<Self> {
        let l = s.to_lowercase();
        if l.contains("fast") {
            Ok(GrowthClass::Fast)
        } else if l.contains("medium") {
            Ok(GrowthClass::Medium)
        } else if l.contains("slow") {
            Ok(GrowthClass::Slow)
        } else {
            Err(SpeciesError::Profile(format!("unknown growing type {s:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Young,
    Mature,
    Old,
}

impl Stage {
    /// First and last age (years since planting) of the stage; `None` is open-ended.
    pub fn bounds(self) -> (u32, Option<u32>) {
        match self {
            Stage::Young => (5, Some(10)),
            Stage::Mature => (11, Some(20)),
            Stage::Old => (21, None),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Young => "young",
            Stage::Mature => "mature",
            Stage::Old => "old",
        })
    }
}

impl FromStr for Stage {
    type Err = SpeciesError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "young" => Ok(Stage::Young),
            "mature" => Ok(Stage::Mature),
            "old" => Ok(Stage::Old),
            other => Err(SpeciesError::Profile(format!("unknown age stage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRates {
    pub stage: Stage,
    pub start_offset_years: u32,
    pub end_offset_years: Option<u32>,
    pub o2_kg_per_tree_year: f64,
    pub co2_kg_per_tree_year: f64,
    pub yield_kg_per_tree_year: f64,
}

impl StageRates {
    pub fn new(stage: Stage, o2: f64, co2: f64, yield_kg: f64) -> Self {
        let (start, end) = stage.bounds();
        Self {
            stage,
            start_offset_years: start,
            end_offset_years: end,
            o2_kg_per_tree_year: o2,
            co2_kg_per_tree_year: co2,
            yield_kg_per_tree_year: yield_kg,
        }
    }

    pub fn contains(&self, age: u32) -> bool {
        age >= self.start_offset_years && self.end_offset_years.is_none_or(|e| age <= e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesProfile {
    pub name: SpeciesName,
    pub growth_class: GrowthClass,
    pub spacing_m2: f64,
    pub stages: Vec<StageRates>,
}

impl SpeciesProfile {
    pub fn new(
        name: SpeciesName,
        growth_class: GrowthClass,
        spacing_m2: f64,
        mut stages: Vec<StageRates>,
    ) -> Result<Self> {
        let perr = |m: String| SpeciesError::Profile(format!("{name}: {m}"));
        if !(spacing_m2.is_finite() && spacing_m2 > 0.0) {
            return Err(perr(format!("spacing must be positive, got {spacing_m2}")));
        }
        if stages.is_empty() {
            return Err(perr("no stage rows".into()));
        }
        stages.sort_by_key(|s| s.stage);
        for pair in stages.windows(2) {
            if pair[0].stage == pair[1].stage {
                return Err(perr(format!("stage {} listed twice", pair[0].stage)));
            }
        }
        for s in &stages {
            if (s.start_offset_years, s.end_offset_years) != s.stage.bounds() {
                return Err(perr(format!("stage {} has non-standard bounds", s.stage)));
            }
            let rates = [s.o2_kg_per_tree_year, s.co2_kg_per_tree_year, s.yield_kg_per_tree_year];
            if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(perr(format!("stage {} has a negative or non-finite rate", s.stage)));
            }
        }
        Ok(Self {
            name,
            growth_class,
            spacing_m2,
            stages,
        })
    }

    pub fn stage_at(&self, age: u32) -> Option<&StageRates> {
        self.stages.iter().find(|s| s.contains(age))
    }
}

fn leading_number(cell: &str) -> Option<f64> {
    let t = cell.trim();
    let end = t
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || *c == '.'))
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    t[..end].parse().ok()
}

#[derive(Default)]
struct Columns {
    name: Option<usize>,
    growing: Option<usize>,
    stage: Option<usize>,
    timeline: Option<usize>,
    o2: Option<usize>,
    co2: Option<usize>,
    yield_kg: Option<usize>,
    spacing: Option<usize>,
}

fn locate_columns(headers: &csv::StringRecord) -> Columns {
    let mut c = Columns::default();
    for (i, h) in headers.iter().enumerate() {
        let h = h.to_lowercase();
        let slot = if h.contains("co2") || h.contains("co₂") || h.contains("sequestration") {
            &mut c.co2
        } else if h.contains("oxygen") || h.contains("o2") || h.contains("o₂") {
            &mut c.o2
        } else if h.contains("yield") {
            &mut c.yield_kg
        } else if h.contains("space") || h.contains("spacing") {
            &mut c.spacing
        } else if h.contains("timeline") {
            &mut c.timeline
        } else if h.contains("stage") {
            &mut c.stage
        } else if h.contains("type") || h.contains("class") {
            &mut c.growing
        } else if h.contains("name") {
            &mut c.name
        } else {
            continue;
        };
        slot.get_or_insert(i);
    }
    c
}

/// Parse a species table with one row per (species, age stage).
///
/// Columns (matched by header keywords, any order): tree name, growing type,
/// age stage, growing timeline, O₂ kg, CO₂ kg, yield kg, space per tree m².
/// Growing type and spacing must agree across a species' rows. `#` starts a
/// comment line.
pub fn parse_species_csv(text: &str) -> Result<Vec<SpeciesProfile>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| SpeciesError::Profile(e.to_string()))?
        .clone();
    let cols = locate_columns(&headers);
    let need = |c: Option<usize>, what: &str| c.ok_or_else(|| SpeciesError::Profile(format!("missing {what} column")));
    let name_c = need(cols.name, "tree name")?;
    let grow_c = need(cols.growing, "growing type")?;
    let stage_c = need(cols.stage, "age stage")?;
    let o2_c = need(cols.o2, "oxygen")?;
    let co2_c = need(cols.co2, "CO2")?;
    let yield_c = need(cols.yield_kg, "yield")?;
    let space_c = need(cols.spacing, "space per tree")?;

    type Acc = (SpeciesName, GrowthClass, f64, Vec<StageRates>);
    let mut acc: Vec<Acc> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| SpeciesError::Profile(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let perr = |m: String| SpeciesError::Profile(format!("line {line}: {m}"));
        let num =
            |i: usize, what: &str| leading_number(cell(i)).ok_or_else(|| perr(format!("bad {what} {:?}", cell(i))));

        let name = SpeciesName::parse(cell(name_c));
        let growth: GrowthClass = cell(grow_c).parse()?;
        let stage: Stage = cell(stage_c).parse()?;
        if let Some(tc) = cols.timeline {
            let t = cell(tc);
            if !t.is_empty() && leading_number(t) != Some(stage.bounds().0 as f64) {
                return Err(perr(format!("timeline {t:?} does not match {stage} stage start")));
            }
        }
        let rates = StageRates::new(stage, num(o2_c, "oxygen")?, num(co2_c, "CO2")?, num(yield_c, "yield")?);
        let spacing = num(space_c, "spacing")?;

        match acc.iter_mut().find(|a| a.0 == name) {
            Some(entry) => {
                if entry.1 != growth || entry.2 != spacing {
                    return Err(perr(format!("{name}: growing type or spacing differs between rows")));
                }
                entry.3.push(rates);
            }
            None => acc.push((name, growth, spacing, vec![rates])),
        }
    }
    acc.into_iter()
        .map(|(n, g, s, st)| SpeciesProfile::new(n, g, s, st))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "Tree name,Tree growing type,Age stage,Growing timeline,Oxygen production (in kg),CO₂ sequestration,Yield,Space Needed per Tree\n\
Ərik (Apricot),Medium-Growing Trees,Young,5 years,3,2,10,5 m²\n\
Ərik (Apricot),Medium-Growing Trees,Mature,11 years,6,4,25,5 m²\n";

    #[test]
    fn parses_reference_layout() {
        let p = parse_species_csv(TABLE).unwrap();
        assert_eq!(p.len(), 1);
        let apricot = &p[0];
        assert_eq!(apricot.name.to_string(), "Ərik (Apricot)");
        assert_eq!(apricot.growth_class, GrowthClass::Medium);
        assert_eq!(apricot.spacing_m2, 5.0);
        let young = apricot.stage_at(5).unwrap();
        assert_eq!(
            (
                young.o2_kg_per_tree_year,
                young.co2_kg_per_tree_year,
                young.yield_kg_per_tree_year
            ),
            (3.0, 2.0, 10.0)
        );
        assert_eq!(apricot.stage_at(10).unwrap().stage, Stage::Young);
        assert_eq!(apricot.stage_at(11).unwrap().stage, Stage::Mature);
        assert!(apricot.stage_at(21).is_none());
        assert!(apricot.stage_at(4).is_none());
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let bad_timeline = TABLE.replace("11 years", "12 years");
        assert!(parse_species_csv(&bad_timeline).is_err());
        let bad_spacing = TABLE.replacen("10,5 m²", "10,6 m²", 1);
        assert!(parse_species_csv(&bad_spacing).is_err());
        let dup = format!("{TABLE}Ərik (Apricot),Medium-Growing Trees,Young,5 years,3,2,10,5 m²\n");
        assert!(parse_species_csv(&dup).is_err());
        let neg = TABLE.replace(",3,2,10,", ",-3,2,10,");
        assert!(parse_species_csv(&neg).is_err());
    }

    #[test]
    fn profile_validation() {
        let n = SpeciesName::parse("X");
        assert!(SpeciesProfile::new(
            n.clone(),
            GrowthClass::Fast,
            0.0,
            vec![StageRates::new(Stage::Young, 1.0, 1.0, 1.0)]
        )
        .is_err());
        assert!(SpeciesProfile::new(n, GrowthClass::Fast, 1.0, vec![]).is_err());
    }
}
