use std::collections::BTreeSet;

use serde::Serialize;

use super::{KnowledgeBase, KnowledgeChunk, Result, SoilClimateKey, SpeciesError, SpeciesName};
use crate::classification::{classification_metrics, ClassificationMetrics};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retrieved<'a> {
    pub chunk: &'a KnowledgeChunk,
    pub score: f64,
}

/// Jaccard overlap of soil tokens plus `1 / (1 + |Δmm| / 100)`; both terms
/// are at most 1, reached together only by an exact key.
pub fn score_chunk(key: &SoilClimateKey, chunk: &KnowledgeChunk) -> f64 {
    let a = key.tokens();
    let b = chunk.key.tokens();
    let union = a.union(&b).count();
    let jaccard = if union == 0 {
        0.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    };
    let gap = (key.humidity_mm - chunk.key.humidity_mm).abs();
    jaccard + 1.0 / (1.0 + gap / 100.0)
}

/// Top `top_k` chunks by descending score; ties go to the smaller chunk id.
pub fn retrieve_chunks<'a>(key: &SoilClimateKey, kb: &'a KnowledgeBase, top_k: usize) -> Result<Vec<Retrieved<'a>>> {
    if kb.is_empty() {
        return Err(SpeciesError::Retrieval("knowledge base is empty".into()));
    }
    if top_k == 0 {
        return Err(SpeciesError::Argument("top_k must be at least 1".into()));
    }
    let mut scored: Vec<Retrieved<'a>> = kb
        .chunks()
        .map(|chunk| Retrieved {
            chunk,
            score: score_chunk(key, chunk),
        })
        .collect();
    scored.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.chunk.id.cmp(&y.chunk.id)));
    scored.truncate(top_k);
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub key: SoilClimateKey,
    /// Local species names, in reference order.
    pub species_names: Vec<String>,
    pub species: Vec<SpeciesName>,
    pub source_chunk_id: String,
    pub rendered_text: String,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Deterministic text block listing the recommended species.
pub fn render_recommendation(key: &SoilClimateKey, chunk: &KnowledgeChunk) -> String {
    let mut out = String::new();
    out.push_str("Soil type and Humidity (Climate):\n");
    out.push_str(&format!(
        "Soil Type: {}, Humidity Level: {}\n\n",
        capitalize(&key.soil_type),
        key.humidity_mm
    ));
    out.push_str("Recommended Tree Species:\n");
    out.push_str(&format!(
        "The following tree species are suitable for {} mm humidity with {}:\n",
        chunk.key.humidity_mm, chunk.soil_label
    ));
    for s in &chunk.species {
        out.push_str(&format!("* {}\n", s.name));
    }
    out
}

/// Species of the best-matching chunk.
pub fn recommend_species(key: &SoilClimateKey, kb: &KnowledgeBase) -> Result<Recommendation> {
    let top = retrieve_chunks(key, kb, 1)?;
    let chunk = top[0].chunk;
    Ok(Recommendation {
        key: key.clone(),
        species_names: chunk.species.iter().map(|s| s.name.clone()).collect(),
        species: chunk.species.clone(),
        source_chunk_id: chunk.id.clone(),
        rendered_text: render_recommendation(key, chunk),
    })
}

/// Accuracy / precision / recall (percent) of a recommended species set.
pub fn recommendation_metrics(
    recommended: &BTreeSet<String>,
    truth: &BTreeSet<String>,
    universe: &BTreeSet<String>,
) -> Result<ClassificationMetrics> {
    Ok(classification_metrics(recommended, truth, universe)?)
}
