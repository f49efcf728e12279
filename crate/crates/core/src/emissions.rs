//! Annual per-sector CO₂ emission series.
//!
//! Tables are year-indexed with one column per sector, values in tonnes of
//! CO₂ per year. Cells may carry comma thousands separators
//! (`22,399,392`); in comma-delimited files such cells are either quoted or
//! written with a space after each field delimiter (`1990, 22,399,392`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EmissionsError {
    #[error("format error: {0}")]
    Format(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },
    #[error("validation error in {sector}: {message}")]
    Validation { sector: String, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, EmissionsError>;

/// Emitting sector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Sector {
    Oil,
    Coal,
    Cement,
    Gas,
    Flaring,
    Other(String),
}

impl Sector {
    pub const KNOWN: [Sector; 5] = [Sector::Oil, Sector::Coal, Sector::Cement, Sector::Gas, Sector::Flaring];

    pub fn as_str(&self) -> &str {
        match self {
            Sector::Oil => "oil",
            Sector::Coal => "coal",
            Sector::Cement => "cement",
            Sector::Gas => "gas",
            Sector::Flaring => "flaring",
            Sector::Other(name) => name,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sector {
    type Err = EmissionsError;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_lowercase();
        if name.is_empty() {
            return Err(EmissionsError::Argument("empty sector name".into()));
        }
        Ok(match name.as_str() {
            "oil" => Sector::Oil,
            "coal" => Sector::Coal,
            "cement" => Sector::Cement,
            "gas" => Sector::Gas,
            "flaring" => Sector::Flaring,
            _ => Sector::Other(name),
        })
    }
}

impl From<Sector> for String {
    fn from(s: Sector) -> String {
        s.as_str().to_string()
    }
}

impl TryFrom<String> for Sector {
    type Error = EmissionsError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One annual value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub year: i32,
    pub value: f64,
}

impl Observation {
    pub fn new(year: i32, value: f64) -> Self {
        Self { year, value }
    }
}

/// A validated, gap-free annual series for one sector.
///
/// Construction guarantees: at least one observation, consecutive strictly
/// increasing years, finite non-negative values. Modeling operations further
/// require two or more observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorSeries {
    sector: Sector,
    observations: Vec<Observation>,
}

impl SectorSeries {
    /// Validate and sort `observations` (ascending by year).
    pub fn new(sector: Sector, mut observations: Vec<Observation>) -> Result<Self> {
        let invalid = |message: String| EmissionsError::Validation {
            sector: sector.to_string(),
            message,
        };
        if observations.is_empty() {
            return Err(invalid("series too short".into()));
        }
        for obs in &observations {
            if !obs.value.is_finite() {
                return Err(invalid(format!("non-finite value in {}", obs.year)));
            }
            if obs.value < 0.0 {
                return Err(invalid(format!("negative value in {}", obs.year)));
            }
        }
        observations.sort_by_key(|o| o.year);
        for pair in observations.windows(2) {
            let (a, b) = (pair[0].year, pair[1].year);
            if a == b {
                return Err(invalid(format!("duplicate year {a}")));
            }
            if b != a + 1 {
                return Err(invalid(format!("gap between {a} and {b}")));
            }
        }
        Ok(Self { sector, observations })
    }

    /// Build from a first year and consecutive values.
    pub fn from_values(sector: Sector, first_year: i32, values: &[f64]) -> Result<Self> {
        let obs = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Observation::new(first_year + i as i32, v))
            .collect();
        Self::new(sector, obs)
    }

    pub fn sector(&self) -> &Sector {
        &self.sector
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.value).collect()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_year(&self) -> i32 {
        self.observations[0].year
    }

    pub fn last_year(&self) -> i32 {
        self.observations[self.observations.len() - 1].year
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let idx = year.checked_sub(self.first_year())?;
        self.observations.get(usize::try_from(idx).ok()?).map(|o| o.value)
    }

    /// Canonical `year,value` CSV.
    pub fn to_canonical_csv(&self) -> String {
        let mut out = String::from("year,value\n");
        for obs in &self.observations {
            out.push_str(&format!("{},{}\n", obs.year, obs.value));
        }
        out
    }
}

/// Split off the final `holdout` observations as a test set.
pub fn split_train_test(series: &SectorSeries, holdout: usize) -> Result<(SectorSeries, SectorSeries)> {
    if holdout == 0 {
        return Err(EmissionsError::Argument("holdout must be at least 1".into()));
    }
    if holdout >= series.len() {
        return Err(EmissionsError::Argument(format!(
            "holdout {holdout} must be shorter than the series ({} observations)",
            series.len()
        )));
    }
    let cut = series.len() - holdout;
    let train = SectorSeries {
        sector: series.sector.clone(),
        observations: series.observations[..cut].to_vec(),
    };
    let test = SectorSeries {
        sector: series.sector.clone(),
        observations: series.observations[cut..].to_vec(),
    };
    Ok((train, test))
}

/// Maps table headers to sectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ColumnMap {
    /// Infer from header text: a header equal to a sector name, or ending in
    /// `from <sector>` (e.g. `Annual CO₂ emissions from cement`).
    #[default]
    Infer,
    /// Exact header (case-insensitive, trimmed) to sector.
    Explicit(BTreeMap<String, Sector>),
}

impl ColumnMap {
    pub fn explicit<I, K>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, Sector)>,
        K: AsRef<str>,
    {
        ColumnMap::Explicit(
            pairs
                .into_iter()
                .map(|(k, s)| (k.as_ref().trim().to_lowercase(), s))
                .collect(),
        )
    }

    fn resolve(&self, header: &str) -> Option<Sector> {
        let h = header.trim().to_lowercase();
        match self {
            ColumnMap::Explicit(map) => map.get(&h).cloned(),
            ColumnMap::Infer => Sector::KNOWN.iter().find_map(|s| {
                let name = s.as_str();
                (h == name || h.ends_with(&format!("from {name}"))).then(|| s.clone())
            }),
        }
    }
}

/// A set of sector series sharing one source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionsDataset {
    pub series: BTreeMap<Sector, SectorSeries>,
    pub source_note: String,
}

impl EmissionsDataset {
    pub fn new(series: Vec<SectorSeries>, source_note: impl Into<String>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for s in series {
            let key = s.sector.clone();
            if map.insert(key.clone(), s).is_some() {
                return Err(EmissionsError::Argument(format!("duplicate sector {key}")));
            }
        }
        Ok(Self {
            series: map,
            source_note: source_note.into(),
        })
    }

    pub fn get(&self, sector: &Sector) -> Option<&SectorSeries> {
        self.series.get(sector)
    }

    pub fn sectors(&self) -> impl Iterator<Item = &Sector> {
        self.series.keys()
    }
}

fn parse_tonnes(cell: &str) -> std::result::Result<f64, String> {
    let cleaned: String = cell
        .trim()
        .chars()
        .filter(|c| *c != ',' && *c != '\u{a0}' && *c != ' ')
        .collect();
    if cleaned.is_empty() {
        return Err("empty cell".into());
    }
    cleaned
        .parse::<f64>()
        .map_err(|_| format!("not a number: {:?}", cell.trim()))
}

fn is_thousands_group(field: &str) -> bool {
    field.len() == 3 && field.bytes().all(|b| b.is_ascii_digit())
}

/// Re-join comma-split thousands groups: a field of exactly three digits with
/// no leading whitespace continues the preceding numeric field.
fn regroup_thousands(fields: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(fields.len());
    for f in fields {
        let continues = is_thousands_group(f)
            && out
                .last()
                .map(|prev| {
                    let p = prev.trim();
                    !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit() || b == b',')
                })
                .unwrap_or(false);
        match (continues, out.last_mut()) {
            (true, Some(prev)) => {
                prev.push(',');
                prev.push_str(f);
            }
            _ => out.push(f.clone()),
        }
    }
    out
}

/// Parse a year-indexed emissions table.
///
/// The header row must contain a `Year` column; every other header that the
/// `column_map` resolves becomes one sector series. Unmapped columns are
/// ignored. Tab-delimited input is detected from the header.
pub fn parse_emissions_table(text: &str, column_map: &ColumnMap, source_note: &str) -> Result<EmissionsDataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let header_line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .ok_or_else(|| EmissionsError::Format("missing header row".into()))?;
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header: Vec<String> = loop {
        match records.next() {
            None => return Err(EmissionsError::Format("missing header row".into())),
            Some(Err(e)) => return Err(EmissionsError::Format(e.to_string())),
            Some(Ok(r)) if r.iter().all(|f| f.trim().is_empty()) => continue,
            Some(Ok(r)) => break r.iter().map(|f| f.trim().to_string()).collect(),
        }
    };

    let year_col = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("year"))
        .ok_or_else(|| EmissionsError::Format("header has no `Year` column".into()))?;
    let mapped: Vec<(usize, Sector)> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != year_col)
        .filter_map(|(i, h)| column_map.resolve(h).map(|s| (i, s)))
        .collect();
    if mapped.is_empty() {
        return Err(EmissionsError::Format("no header column maps to a sector".into()));
    }
    let mut seen = BTreeMap::new();
    for (i, s) in &mapped {
        if let Some(prev) = seen.insert(s.clone(), *i) {
            return Err(EmissionsError::Format(format!(
                "columns {} and {} both map to sector {s}",
                prev + 1,
                i + 1
            )));
        }
    }

    let mut columns: Vec<Vec<Observation>> = vec![Vec::new(); mapped.len()];
    for (idx, rec) in records.enumerate() {
        let rec = rec.map_err(|e| EmissionsError::Format(e.to_string()))?;
        // Row numbers are 1-based and count the header as row 1.
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(idx + 2);
        let raw: Vec<String> = rec.iter().map(str::to_string).collect();
        if raw.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let fields = if raw.len() == header.len() {
            raw
        } else {
            regroup_thousands(&raw)
        };
        if fields.len() != header.len() {
            return Err(EmissionsError::Parse {
                row,
                column: fields.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        let year_cell = fields[year_col].trim();
        let year: i32 = year_cell.parse().map_err(|_| EmissionsError::Parse {
            row,
            column: year_col + 1,
            message: format!("year is not an integer: {year_cell:?}"),
        })?;
        for (slot, (col, _)) in mapped.iter().enumerate() {
            let value = parse_tonnes(&fields[*col]).map_err(|message| EmissionsError::Parse {
                row,
                column: col + 1,
                message,
            })?;
            columns[slot].push(Observation::new(year, value));
        }
    }

    let mut series = Vec::with_capacity(mapped.len());
    for ((_, sector), obs) in mapped.into_iter().zip(columns) {
        let s = SectorSeries::new(sector.clone(), obs)?;
        if s.len() < 2 {
            return Err(EmissionsError::Validation {
                sector: sector.to_string(),
                message: "series too short".into(),
            });
        }
        series.push(s);
    }
    EmissionsDataset::new(series, source_note)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_paper_row_with_separators() {
        let text = "Year, Annual CO₂ emissions from oil\n1990, 22,399,392\n1991, 22,534,228\n";
        let ds = parse_emissions_table(text, &ColumnMap::Infer, "t").unwrap();
        let oil = ds.get(&Sector::Oil).unwrap();
        assert_eq!(oil.get(1990), Some(22_399_392.0));
        assert_eq!(oil.get(1991), Some(22_534_228.0));
    }

    #[test]
    fn parses_tab_delimited_multi_sector() {
        let text = "Year\tAnnual CO₂ emissions from oil\tAnnual CO₂ emissions from cement\tAnnual CO₂ emissions from gas\tAnnual CO₂ emissions from flaring\n\
                    1990\t22,399,392\t477,970\t28,082,780\t191,063\n\
                    1991\t22,534,228\t466,890\t26,573,342\t177,742\n";
        let ds = parse_emissions_table(text, &ColumnMap::Infer, "").unwrap();
        assert_eq!(ds.series.len(), 4);
        assert_eq!(ds.get(&Sector::Cement).unwrap().get(1991), Some(466_890.0));
        assert_eq!(ds.get(&Sector::Flaring).unwrap().get(1990), Some(191_063.0));
    }

    #[test]
    fn leading_comments_do_not_hide_tab_header() {
        let text = "# note, with a comma\nYear\toil\n1990\t1,000\n1991\t2,000\n";
        let ds = parse_emissions_table(text, &ColumnMap::Infer, "").unwrap();
        assert_eq!(ds.get(&Sector::Oil).unwrap().values(), vec![1000.0, 2000.0]);
    }

    #[test]
    fn quoted_separators_in_csv() {
        let text = "Year,oil\n1990,\"22,399,392\"\n1991,\"1,000\"\n";
        let ds = parse_emissions_table(text, &ColumnMap::Infer, "").unwrap();
        assert_eq!(ds.get(&Sector::Oil).unwrap().values(), vec![22_399_392.0, 1000.0]);
    }

    #[test]
    fn empty_rows_are_too_short() {
        let err = parse_emissions_table("Year,oil\n", &ColumnMap::Infer, "").unwrap_err();
        assert!(err.to_string().contains("series too short"), "{err}");
    }

    #[test]
    fn missing_header() {
        assert!(matches!(
            parse_emissions_table("", &ColumnMap::Infer, ""),
            Err(EmissionsError::Format(_))
        ));
        assert!(matches!(
            parse_emissions_table("1990,5\n", &ColumnMap::Infer, ""),
            Err(EmissionsError::Format(_))
        ));
    }

    #[test]
    fn rows_are_sorted() {
        let ds = parse_emissions_table("Year,gas\n1991,2\n1990,1\n", &ColumnMap::Infer, "").unwrap();
        let years: Vec<i32> = ds
            .get(&Sector::Gas)
            .unwrap()
            .observations()
            .iter()
            .map(|o| o.year)
            .collect();
        assert_eq!(years, vec![1990, 1991]);
    }

    #[test]
    fn non_numeric_cell_reports_location() {
        let err = parse_emissions_table("Year,gas,oil\n1990,1,2\n1991,x,3\n", &ColumnMap::Infer, "").unwrap_err();
        assert_eq!(
            err,
            EmissionsError::Parse {
                row: 3,
                column: 2,
                message: "not a number: \"x\"".into()
            }
        );
    }

    #[test]
    fn duplicate_and_gap_years_rejected() {
        let dup = parse_emissions_table("Year,gas\n1990,1\n1990,2\n", &ColumnMap::Infer, "");
        assert!(matches!(dup, Err(EmissionsError::Validation { .. })));
        let gap = parse_emissions_table("Year,gas\n1990,1\n1992,2\n", &ColumnMap::Infer, "");
        assert!(matches!(gap, Err(EmissionsError::Validation { .. })));
    }

    #[test]
    fn negative_value_rejected() {
        let err = parse_emissions_table("Year,gas\n1990,1\n1991,-2\n", &ColumnMap::Infer, "");
        assert!(matches!(err, Err(EmissionsError::Validation { .. })));
    }

    #[test]
    fn explicit_column_map() {
        let map = ColumnMap::explicit([("Kiln output", Sector::Cement)]);
        let ds = parse_emissions_table("Year,Kiln output,oil\n2000,5,1\n2001,6,2\n", &map, "").unwrap();
        assert_eq!(ds.series.len(), 1);
        assert_eq!(ds.get(&Sector::Cement).unwrap().values(), vec![5.0, 6.0]);
    }

    #[test]
    fn split_34_years() {
        let s = SectorSeries::from_values(Sector::Cement, 1990, &vec![1.0; 34]).unwrap();
        let (train, test) = split_train_test(&s, 6).unwrap();
        assert_eq!((train.first_year(), train.last_year()), (1990, 2017));
        assert_eq!((test.first_year(), test.last_year()), (2018, 2023));
    }

    #[test]
    fn split_boundaries() {
        let s = SectorSeries::from_values(Sector::Oil, 2000, &[1.0, 2.0]).unwrap();
        assert!(split_train_test(&s, 2).is_err());
        assert!(split_train_test(&s, 0).is_err());
        let (train, test) = split_train_test(&s, 1).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(test.len(), 1);
    }

    #[test]
    fn sector_names_round_trip() {
        for s in Sector::KNOWN {
            assert_eq!(s.as_str().parse::<Sector>().unwrap(), s);
        }
        assert_eq!("Steel".parse::<Sector>().unwrap(), Sector::Other("steel".into()));
    }

    proptest! {
        #[test]
        fn split_concatenation_identity(values in prop::collection::vec(0u32..10_000_000, 2..40), h in 1usize..40) {
            let vals: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let s = SectorSeries::from_values(Sector::Gas, 1990, &vals).unwrap();
            prop_assume!(h < s.len());
            let (train, test) = split_train_test(&s, h).unwrap();
            let mut joined = train.observations().to_vec();
            joined.extend_from_slice(test.observations());
            prop_assert_eq!(joined.as_slice(), s.observations());
            prop_assert_eq!(test.len(), h);
        }

        #[test]
        fn canonical_csv_round_trip(values in prop::collection::vec(0u64..100_000_000_000, 2..30), start in 1900i32..2000) {
            let vals: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let s = SectorSeries::from_values(Sector::Cement, start, &vals).unwrap();
            let csv = s.to_canonical_csv();
            let map = ColumnMap::explicit([("value", Sector::Cement)]);
            let back = parse_emissions_table(&csv, &map, "").unwrap();
            prop_assert_eq!(back.get(&Sector::Cement).unwrap(), &s);
        }
    }
}
