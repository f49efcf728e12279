use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{normalize_soil, Result, SoilClimateKey, SpeciesError, SpeciesName};

const SPECIES_HEADER: &str = "suitable trees:";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnowledgeChunk {
    pub id: String,
    pub key: SoilClimateKey,
    /// Soil label as written in the document.
    pub soil_label: String,
    /// Reference text of the chunk, species section included.
    pub body: String,
    pub species: Vec<SpeciesName>,
}

/// Immutable after loading; chunks are ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KnowledgeBase {
    chunks: BTreeMap<String, KnowledgeChunk>,
}

impl KnowledgeBase {
    pub fn chunks(&self) -> impl Iterator<Item = &KnowledgeChunk> {
        self.chunks.values()
    }

    pub fn get(&self, id: &str) -> Option<&KnowledgeChunk> {
        self.chunks.get(id)
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }
}

fn strip_bullet(line: &str) -> &str {
    line.trim_start_matches(|c: char| c == '-' || c == '*' || c == '•' || c.is_whitespace())
}

fn parse_chunk(default_id: &str, text: &str) -> Result<KnowledgeChunk> {
    let mut id = None;
    let mut humidity = None;
    let mut soil = None;
    let mut in_species = false;
    let mut species: Vec<SpeciesName> = Vec::new();
    let mut body_lines = Vec::new();

    for line in text.lines() {
        let trimmed = line.trim();
        if in_species {
            body_lines.push(line);
            let entry = strip_bullet(trimmed);
            if entry.is_empty() {
                continue;
            }
            let name_part = entry.split_once(':').map(|(n, _)| n).unwrap_or(entry);
            species.push(SpeciesName::parse(name_part));
            continue;
        }
        if trimmed.to_lowercase() == SPECIES_HEADER {
            in_species = true;
            body_lines.push(line);
            continue;
        }
        let field = trimmed
            .split_once(':')
            .map(|(k, v)| (k.trim().to_lowercase(), v.trim()));
        match field {
            Some((k, v)) if k == "id" => id = Some(v.to_string()),
            Some((k, v)) if k == "humidity_mm" => humidity = Some(v.to_string()),
            Some((k, v)) if k == "soil_type" => soil = Some(v.to_string()),
            _ => body_lines.push(line),
        }
    }

    let id = id.unwrap_or_else(|| default_id.to_string());
    let load_err = |message: &str| SpeciesError::Load {
        chunk: id.clone(),
        message: message.to_string(),
    };
    let humidity: f64 = humidity
        .ok_or_else(|| load_err("missing humidity_mm"))?
        .trim_end_matches("mm")
        .trim()
        .parse()
        .map_err(|_| load_err("humidity_mm is not a number"))?;
    let soil_label = soil.ok_or_else(|| load_err("missing soil_type"))?;
    if !in_species || species.is_empty() {
        return Err(load_err("missing \"Suitable Trees:\" species list"));
    }
    for (i, s) in species.iter().enumerate() {
        if species[..i].iter().any(|p| p.name == s.name) {
            return Err(load_err(&format!("species {} listed twice", s.name)));
        }
    }
    let key = SoilClimateKey::new(humidity, &soil_label).map_err(|e| load_err(&e.to_string()))?;
    Ok(KnowledgeChunk {
        id,
        key,
        soil_label: soil_label.trim().to_string(),
        body: body_lines.join("\n").trim().to_string(),
        species,
    })
}

/// Load chunks from `(source name, text)` documents.
///
/// A document holds one or more chunks separated by lines of `---`. Each
/// chunk declares `humidity_mm:` and `soil_type:` header lines and ends with
/// a `Suitable Trees:` section listing one species per line
/// (`Name (Alias): notes`). Chunk ids come from an `id:` line, else the
/// source name (suffixed `#n` when a document has several chunks).
pub fn load_kb<S: AsRef<str>, T: AsRef<str>>(documents: &[(S, T)]) -> Result<KnowledgeBase> {
    let mut kb = KnowledgeBase::default();
    let mut by_key: BTreeMap<(u64, String), String> = BTreeMap::new();
    for (source, text) in documents {
        let parts: Vec<&str> = split_chunks(text.as_ref());
        for (n, part) in parts.iter().enumerate() {
            let default_id = if parts.len() == 1 {
                source.as_ref().to_string()
            } else {
                format!("{}#{}", source.as_ref(), n + 1)
            };
            let chunk = parse_chunk(&default_id, part)?;
            let key = (chunk.key.humidity_mm.to_bits(), normalize_soil(&chunk.key.soil_type));
            if let Some(first) = by_key.insert(key, chunk.id.clone()) {
                return Err(SpeciesError::AmbiguousKey {
                    first,
                    second: chunk.id,
                });
            }
            if kb.chunks.contains_key(&chunk.id) {
                return Err(SpeciesError::Load {
                    chunk: chunk.id,
                    message: "duplicate chunk id".into(),
                });
            }
            kb.chunks.insert(chunk.id.clone(), chunk);
        }
    }
    Ok(kb)
}

fn split_chunks(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim() == "---" {
            parts.push(&text[start..offset]);
            start = offset + line.len();
        }
        offset += line.len();
    }
    parts.push(&text[start..]);
    parts.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

/// Load every `.txt` / `.md` document in `dir`, in file-name order, using
/// file stems as default chunk ids.
pub fn load_kb_dir(dir: &Path) -> Result<KnowledgeBase> {
    let io = |e: std::io::Error| SpeciesError::Io(format!("{}: {e}", dir.display()));
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(io)?;
    paths.retain(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("txt" | "md")));
    paths.sort();
    let mut docs = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(&p).map_err(io)?;
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        docs.push((stem, text));
    }
    load_kb(&docs)
}
