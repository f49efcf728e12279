//! Species knowledge base, keyed retrieval and recommendations.
//!
//! Reference documents describe which species suit a humidity / soil
//! combination. Retrieval is deterministic: a chunk's score is the Jaccard
//! overlap of soil tokens plus a humidity proximity term. An optional
//! text-generation gateway can enrich the rendered recommendation; without
//! it (or when it fails) the deterministic template is used.

mod gateway;
mod kb;
mod profile;
mod retrieve;

pub use gateway::{build_prompt, generate_via_gateway, EnrichedText, GatewayError, HttpGateway, TextGenerator};
pub use kb::{load_kb, load_kb_dir, KnowledgeBase, KnowledgeChunk};
pub use profile::{parse_species_csv, GrowthClass, SpeciesProfile, Stage, StageRates};
pub use retrieve::{
    recommend_species, recommendation_metrics, render_recommendation, retrieve_chunks, score_chunk, Recommendation,
    Retrieved,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::MetricsError;

#[derive(Debug, Error, PartialEq)]
pub enum SpeciesError {
    #[error("chunk {chunk}: {message}")]
    Load { chunk: String, message: String },
    #[error("ambiguous key: chunks {first} and {second} share humidity/soil key")]
    AmbiguousKey { first: String, second: String },
    #[error("retrieval error: {0}")]
    Retrieval(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("profile error: {0}")]
    Profile(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub type Result<T> = std::result::Result<T, SpeciesError>;

/// Lowercase, trim, collapse internal whitespace and drop trailing
/// `soil`/`soils` words. Idempotent. Diacritics are kept.
pub fn normalize_soil(label: &str) -> String {
    let mut words: Vec<String> = label.split_whitespace().map(str::to_lowercase).collect();
    while matches!(words.last().map(String::as_str), Some("soil" | "soils")) {
        words.pop();
    }
    words.join(" ")
}

/// Site conditions used as the retrieval key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoilClimateKey {
    /// Annual precipitation, mm.
    pub humidity_mm: f64,
    /// Normalized soil label.
    pub soil_type: String,
}

impl SoilClimateKey {
    pub fn new(humidity_mm: f64, soil_type: &str) -> Result<Self> {
        if !(humidity_mm.is_finite() && humidity_mm > 0.0) {
            return Err(SpeciesError::Argument(format!(
                "humidity must be positive, got {humidity_mm}"
            )));
        }
        let soil_type = normalize_soil(soil_type);
        if soil_type.is_empty() {
            return Err(SpeciesError::Argument("soil type is empty".into()));
        }
        Ok(Self { humidity_mm, soil_type })
    }

    pub(crate) fn tokens(&self) -> std::collections::BTreeSet<&str> {
        self.soil_type
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .collect()
    }
}

/// A species name as written in the references, e.g. `Ərik (Apricot)`:
/// the local name plus an optional Latin-script alias.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpeciesName {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
}

impl SpeciesName {
    pub fn parse(raw: &str) -> Self {
        let raw = raw.trim();
        if let (Some(open), true) = (raw.rfind('('), raw.ends_with(')')) {
            let name = raw[..open].trim();
            let alias = raw[open + 1..raw.len() - 1].trim();
            if !name.is_empty() && !alias.is_empty() {
                return Self {
                    name: name.to_string(),
                    alias: Some(alias.to_string()),
                };
            }
        }
        Self {
            name: raw.to_string(),
            alias: None,
        }
    }

    fn base(name: &str) -> String {
        let lower = name.to_lowercase();
        let mut words: Vec<&str> = lower.split_whitespace().collect();
        // "ağacı" is "tree": "Armud Ağacı" and "Armud" name the same species.
        if words.len() > 1 && matches!(words.last(), Some(&"ağacı") | Some(&"agaci")) {
            words.pop();
        }
        words.join(" ")
    }

    /// Same species: equal aliases when both have one, otherwise equal local
    /// names ignoring a trailing "Ağacı".
    pub fn matches(&self, other: &SpeciesName) -> bool {
        match (&self.alias, &other.alias) {
            (Some(a), Some(b)) => a.to_lowercase() == b.to_lowercase(),
            _ => Self::base(&self.name) == Self::base(&other.name),
        }
    }
}

impl fmt::Display for SpeciesName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.alias {
            Some(a) => write!(f, "{} ({a})", self.name),
            None => f.write_str(&self.name),
        }
    }
}
