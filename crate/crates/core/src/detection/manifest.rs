use std::fs;
use std::path::Path;

use super::{parse_label_file, ClassMap, DetectionError, ImageMeta, RegionSet, Result, DEFAULT_PX_PER_KM};

/// Parse an `image_id,width_px,height_px,px_per_km` manifest. A blank or
/// missing `px_per_km` falls back to the default scale.
pub fn parse_manifest(text: &str) -> Result<Vec<ImageMeta>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DetectionError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (id_c, w_c, h_c) = match (col("image_id"), col("width_px"), col("height_px")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(DetectionError::Parse {
                line: 1,
                message: "manifest needs image_id, width_px, height_px columns".into(),
            })
        }
    };
    let ppk_c = col("px_per_km");

    let mut metas = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DetectionError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let perr = |message: String| DetectionError::Parse { line, message };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let id = field(id_c).to_string();
        if id.is_empty() {
            return Err(perr("empty image_id".into()));
        }
        let width: u32 = field(w_c)
            .parse()
            .map_err(|_| perr(format!("bad width_px {:?}", field(w_c))))?;
        let height: u32 = field(h_c)
            .parse()
            .map_err(|_| perr(format!("bad height_px {:?}", field(h_c))))?;
        let ppk = match ppk_c.map(field) {
            None | Some("") => DEFAULT_PX_PER_KM,
            Some(s) => s.parse().map_err(|_| perr(format!("bad px_per_km {s:?}")))?,
        };
        if !seen.insert(id.clone()) {
            return Err(perr(format!("duplicate image_id {id}")));
        }
        metas.push(ImageMeta::new(id, width, height, ppk)?);
    }
    Ok(metas)
}

/// Build a region set from a manifest and a directory of `<image_id>.txt`
/// label files. Images without a label file have no detections; returns the
/// region set and the number of clamped boxes.
pub fn load_labels_dir(dir: &Path, metas: Vec<ImageMeta>, classes: &ClassMap) -> Result<(RegionSet, usize)> {
    let io = |e: std::io::Error| DetectionError::Io(format!("{}: {e}", dir.display()));
    let mut regions = RegionSet::new();
    for meta in metas {
        regions.boxes.entry(meta.image_id.clone()).or_default();
        regions.add_image(meta);
    }
    let mut clamped = 0;
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .collect::<std::io::Result<_>>()
        .map_err(io)?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let meta =
            regions.metas.get(&id).cloned().ok_or_else(|| {
                DetectionError::Argument(format!("label file {} has no manifest entry", path.display()))
            })?;
        let text = fs::read_to_string(&path).map_err(io)?;
        let parsed = parse_label_file(&text, &meta, classes).map_err(|e| match e {
            DetectionError::Parse { line, message } => DetectionError::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        clamped += parsed.clamped;
        regions.add_boxes(id, parsed.boxes);
    }
    Ok((regions, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_defaults_scale() {
        let m = parse_manifest("image_id,width_px,height_px,px_per_km\na,640,640,\nb,1400,700,2800\n").unwrap();
        assert_eq!(m[0].px_per_km, DEFAULT_PX_PER_KM);
        assert_eq!(m[1].px_per_km, 2800.0);
        assert_eq!(m[1].height_px, 700);
    }

    #[test]
    fn manifest_errors() {
        assert!(parse_manifest("id,w,h\n").is_err());
        assert!(parse_manifest("image_id,width_px,height_px\na,x,3\n").is_err());
        assert!(parse_manifest("image_id,width_px,height_px\na,3,3\na,3,3\n").is_err());
    }

    #[test]
    fn labels_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "0 0.5 0.5 0.5 0.5\n").unwrap();
        fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let metas =
            parse_manifest("image_id,width_px,height_px,px_per_km\na,1400,1400,1400\nb,1400,1400,1400\n").unwrap();
        let (rs, clamped) = load_labels_dir(dir.path(), metas, &ClassMap::default()).unwrap();
        assert_eq!(clamped, 0);
        assert_eq!(rs.positive_images().len(), 1);
        assert!((super::super::aggregate_area(&rs).unwrap() - 0.25).abs() < 1e-12);

        fs::write(dir.path().join("orphan.txt"), "0 0.5 0.5 0.5 0.5\n").unwrap();
        let metas = parse_manifest("image_id,width_px,height_px\na,1400,1400\n").unwrap();
        assert!(load_labels_dir(dir.path(), metas, &ClassMap::default()).is_err());
    }
}
