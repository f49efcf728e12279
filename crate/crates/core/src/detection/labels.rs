use std::collections::BTreeMap;

use super::{DetectionBox, DetectionError, ImageMeta, Result, SUITABLE_PLACE};

/// Edges past the frame by no more than this are float noise, not overflow.
const EDGE_SLACK: f64 = 1e-9;

/// Integer class index to label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap(pub BTreeMap<u32, String>);

impl Default for ClassMap {
    fn default() -> Self {
        ClassMap(BTreeMap::from([(0, SUITABLE_PLACE.to_string())]))
    }
}

impl ClassMap {
    fn label(&self, token: &str) -> std::result::Result<String, String> {
        match token.parse::<u32>() {
            Ok(idx) => self
                .0
                .get(&idx)
                .cloned()
                .ok_or_else(|| format!("class index {idx} not in class map")),
            Err(_) if token.parse::<f64>().is_ok() => Err(format!("class token {token:?} is not an integer index")),
            Err(_) => Ok(token.to_string()),
        }
    }

    fn index_of(&self, label: &str) -> Option<u32> {
        self.0.iter().find(|(_, l)| l.as_str() == label).map(|(i, _)| *i)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedLabels {
    pub boxes: Vec<DetectionBox>,
    /// Boxes whose edges were pulled back inside the frame.
    pub clamped: usize,
}

fn clamp_axis(c: f64, size: f64) -> (f64, f64, bool) {
    let (lo, hi) = (c - size / 2.0, c + size / 2.0);
    if lo >= -EDGE_SLACK && hi <= 1.0 + EDGE_SLACK {
        return (c, size, false);
    }
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    ((lo + hi) / 2.0, hi - lo, true)
}

/// Parse `class cx cy w h [confidence]` lines.
///
/// Blank lines and `#` comments are skipped. The class token is either an
/// integer index resolved through `classes` or a literal label.
pub fn parse_label_file(text: &str, meta: &ImageMeta, classes: &ClassMap) -> Result<ParsedLabels> {
    meta.validate()?;
    let mut out = ParsedLabels::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| DetectionError::Parse { line, message };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(err(format!("expected 5 or 6 fields, found {}", fields.len())));
        }
        let class_label = classes.label(fields[0]).map_err(err)?;
        let mut nums = [0.0f64; 5];
        for (slot, tok) in nums.iter_mut().zip(&fields[1..]) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("not a finite number: {tok:?}")))?;
        }
        let [cx, cy, w, h, conf] = nums;
        if !(0.0..=1.0).contains(&cx) || !(0.0..=1.0).contains(&cy) {
            return Err(err(format!("box centre ({cx}, {cy}) outside [0, 1]")));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(err(format!("box size ({w}, {h}) must be positive")));
        }
        let confidence = if fields.len() == 6 {
            if !(0.0..=1.0).contains(&conf) {
                return Err(err(format!("confidence {conf} outside [0, 1]")));
            }
            Some(conf)
        } else {
            None
        };
        let (cx, w, cx_clamped) = clamp_axis(cx, w);
        let (cy, h, cy_clamped) = clamp_axis(cy, h);
        if w <= 0.0 || h <= 0.0 {
            return Err(err("box has no area inside the image".into()));
        }
        if cx_clamped || cy_clamped {
            out.clamped += 1;
        }
        out.boxes.push(DetectionBox {
            class_label,
            cx,
            cy,
            w,
            h,
            confidence,
        });
    }
    Ok(out)
}

/// Write boxes back in label-file form. Labels present in `classes` are
/// written as their index.
pub fn serialize_label_file(boxes: &[DetectionBox], classes: &ClassMap) -> String {
    let mut out = String::new();
    for b in boxes {
        let class = classes
            .index_of(&b.class_label)
            .map(|i| i.to_string())
            .unwrap_or_else(|| b.class_label.clone());
        out.push_str(&format!("{} {} {} {} {}", class, b.cx, b.cy, b.w, b.h));
        if let Some(c) = b.confidence {
            out.push_str(&format!(" {c}"));
        }
        out.push('\n');
    }
    out
}
