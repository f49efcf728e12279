//! Emissions forecast set against planted-tree sequestration.
//!
//! Forecast values are in tonnes; timeline outputs are converted from kg.
//! `net_t = forecast_t - co2_seq_t`; oxygen and yield are reported alongside.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::emissions::Observation;
use crate::planner::GrowthTimeline;

pub const KG_PER_TONNE: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum OffsetError {
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetRow {
    pub year: i32,
    pub forecast_t: f64,
    pub o2_t: f64,
    pub co2_seq_t: f64,
    pub yield_t: f64,
    pub net_t: f64,
    /// `co2_seq_t / forecast_t`; `None` when the forecast is not positive.
    pub offset_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetProjection {
    pub rows: Vec<OffsetRow>,
    pub species: Vec<String>,
}

impl OffsetProjection {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,forecast_t,o2_t,co2_seq_t,yield_t,net_t,offset_fraction\n");
        for r in &self.rows {
            let frac = r.offset_fraction.map(|f| f.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.year, r.forecast_t, r.o2_t, r.co2_seq_t, r.yield_t, r.net_t, frac
            ));
        }
        out
    }

    /// First year with non-zero sequestration.
    pub fn first_sequestration_year(&self) -> Option<i32> {
        self.rows.iter().find(|r| r.co2_seq_t > 0.0).map(|r| r.year)
    }

    /// First year whose offset fraction reaches 1.
    pub fn crossover_year(&self) -> Option<i32> {
        self.rows
            .iter()
            .find(|r| r.offset_fraction.is_some_and(|f| f >= 1.0))
            .map(|r| r.year)
    }
}

/// Combine a forecast with any number of timelines over the forecast years.
/// Timeline years outside the forecast are ignored; forecast years missing
/// from a timeline contribute zero.
pub fn project_offset(forecast: &[Observation], timelines: &[GrowthTimeline]) -> Result<OffsetProjection, OffsetError> {
    if forecast.is_empty() {
        return Err(OffsetError::Argument("forecast is empty".into()));
    }
    let mut totals: BTreeMap<i32, (f64, [f64; 3])> = BTreeMap::new();
    for o in forecast {
        if !o.value.is_finite() {
            return Err(OffsetError::Argument(format!("non-finite forecast in {}", o.year)));
        }
        if totals.insert(o.year, (o.value, [0.0; 3])).is_some() {
            return Err(OffsetError::Argument(format!("forecast year {} listed twice", o.year)));
        }
    }
    for t in timelines {
        let mut seen = std::collections::BTreeSet::new();
        for r in &t.rows {
            if !seen.insert(r.year) {
                return Err(OffsetError::Argument(format!(
                    "{} timeline lists {} twice",
                    t.species, r.year
                )));
            }
            if let Some((_, acc)) = totals.get_mut(&r.year) {
                acc[0] += r.o2_kg;
                acc[1] += r.co2_kg;
                acc[2] += r.yield_kg;
            }
        }
    }
    let rows = totals
        .into_iter()
        .map(|(year, (forecast_t, [o2, co2, yld]))| {
            let co2_seq_t = co2 / KG_PER_TONNE;
            OffsetRow {
                year,
                forecast_t,
                o2_t: o2 / KG_PER_TONNE,
                co2_seq_t,
                yield_t: yld / KG_PER_TONNE,
                net_t: forecast_t - co2_seq_t,
                offset_fraction: (forecast_t > 0.0).then(|| co2_seq_t / forecast_t),
            }
        })
        .collect();
    Ok(OffsetProjection {
        rows,
        species: timelines.iter().map(|t| t.species.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{growth_timeline, TimelineRow};
    use crate::species::{GrowthClass, SpeciesName, SpeciesProfile, Stage, StageRates};
    use proptest::prelude::*;

    fn apricot() -> SpeciesProfile {
        SpeciesProfile::new(
            SpeciesName::parse("Ərik (Apricot)"),
            GrowthClass::Medium,
            5.0,
            vec![
                StageRates::new(Stage::Young, 3.0, 2.0, 10.0),
                StageRates::new(Stage::Mature, 6.0, 4.0, 25.0),
                StageRates::new(Stage::Old, 8.0, 5.0, 30.0),
            ],
        )
        .unwrap()
    }

    fn flat(years: std::ops::Range<i32>, v: f64) -> Vec<Observation> {
        years.map(|year| Observation { year, value: v }).collect()
    }

    fn single(year: i32, co2_kg: f64) -> GrowthTimeline {
        GrowthTimeline {
            species: "X".into(),
            plant_year: year,
            tree_count: 1,
            rows: vec![TimelineRow {
                year,
                stage: Some(Stage::Young),
                o2_kg: 0.0,
                co2_kg,
                yield_kg: 0.0,
            }],
        }
    }

    #[test]
    fn net_example() {
        let p = project_offset(&flat(2030..2031, 100.0), &[single(2030, 54_000.0)]).unwrap();
        assert_eq!(p.rows[0].net_t, 46.0);
        assert_eq!(p.rows[0].offset_fraction, Some(0.54));
    }

    #[test]
    fn first_sequestration_after_onset() {
        let t = growth_timeline(&apricot(), 18_000, 2025, 10).unwrap();
        let p = project_offset(&flat(2024..2035, 1_000.0), &[t]).unwrap();
        assert_eq!(p.first_sequestration_year(), Some(2030));
        let y2030 = p.rows.iter().find(|r| r.year == 2030).unwrap();
        assert_eq!(y2030.co2_seq_t, 36.0);
        assert_eq!(y2030.o2_t, 54.0);
        assert_eq!(p.crossover_year(), None);
    }

    #[test]
    fn no_trees_means_net_equals_forecast() {
        let f = flat(2024..2030, 7.5);
        let p = project_offset(&f, &[]).unwrap();
        assert!(p
            .rows
            .iter()
            .all(|r| r.net_t == r.forecast_t && r.offset_fraction == Some(0.0)));
    }

    #[test]
    fn rejects_bad_forecast() {
        assert!(project_offset(&[], &[]).is_err());
        let mut f = flat(2024..2026, 1.0);
        f.push(Observation { year: 2024, value: 2.0 });
        assert!(project_offset(&f, &[]).is_err());
        let mut t = single(2024, 1.0);
        t.rows.push(t.rows[0].clone());
        assert!(project_offset(&flat(2024..2026, 1.0), &[t]).is_err());
    }

    #[test]
    fn non_positive_forecast_has_no_fraction() {
        let p = project_offset(&flat(2030..2031, 0.0), &[single(2030, 10.0)]).unwrap();
        assert_eq!(p.rows[0].offset_fraction, None);
        assert_eq!(p.crossover_year(), None);
    }

    #[test]
    fn crossover_is_first_full_offset() {
        let f = flat(2030..2033, 100.0);
        let t = [single(2031, 50_000.0), single(2032, 120_000.0)];
        let p = project_offset(&f, &t).unwrap();
        let fr: Vec<_> = p.rows.iter().map(|r| r.offset_fraction.unwrap()).collect();
        assert_eq!(fr, [0.0, 0.5, 1.2]);
        assert_eq!(p.crossover_year(), Some(2032));
    }

    #[test]
    fn row_identity() {
        let t = growth_timeline(&apricot(), 12_345, 2025, 30).unwrap();
        let f: Vec<Observation> = (2024..2060)
            .map(|y| Observation {
                year: y,
                value: 466.89 + y as f64 * 0.37,
            })
            .collect();
        for r in project_offset(&f, &[t]).unwrap().rows {
            assert!((r.net_t + r.co2_seq_t - r.forecast_t).abs() <= 1e-9 * r.forecast_t.abs());
        }
    }

    proptest! {
        #[test]
        fn linear_in_timelines(a in 0u64..100_000, b in 0u64..100_000, level in 0.0f64..1e6) {
            let f = flat(2024..2060, level);
            let ta = growth_timeline(&apricot(), a, 2025, 35).unwrap();
            let tb = growth_timeline(&apricot(), b, 2025, 35).unwrap();
            let tab = growth_timeline(&apricot(), a + b, 2025, 35).unwrap();
            let split = project_offset(&f, &[ta, tb]).unwrap();
            let joint = project_offset(&f, &[tab]).unwrap();
            for (x, y) in split.rows.iter().zip(&joint.rows) {
                prop_assert!((x.co2_seq_t - y.co2_seq_t).abs() <= 1e-9 * y.co2_seq_t.max(1.0));
                prop_assert!((x.net_t - y.net_t).abs() <= 1e-9 * y.forecast_t.abs().max(1.0));
            }
        }

        #[test]
        fn more_trees_never_raise_net(a in 0u64..100_000, extra in 0u64..100_000) {
            let f = flat(2024..2060, 500.0);
            let few = project_offset(&f, &[growth_timeline(&apricot(), a, 2025, 35).unwrap()]).unwrap();
            let many = project_offset(&f, &[growth_timeline(&apricot(), a + extra, 2025, 35).unwrap()]).unwrap();
            for (x, y) in few.rows.iter().zip(&many.rows) {
                prop_assert!(y.net_t <= x.net_t);
            }
        }
    }
}
