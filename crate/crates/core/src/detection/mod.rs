//! Detector output ingestion and land-area estimation.
//!
//! Boxes are normalized `(cx, cy, w, h)` rectangles; an image's pixel
//! dimensions and its px-per-km scale turn them into km² on the ground.

mod labels;
mod manifest;
mod union;

pub use labels::{parse_label_file, serialize_label_file, ClassMap, ParsedLabels};
pub use manifest::{load_labels_dir, parse_manifest};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::{classification_metrics, ClassificationMetrics, MetricsError};
use crate::numeric::compensated_sum;

/// Ground scale of the reference imagery.
pub const DEFAULT_PX_PER_KM: f64 = 1400.0;

pub const SUITABLE_PLACE: &str = "suitable_place";

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub type Result<T> = std::result::Result<T, DetectionError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_id: String,
    pub width_px: u32,
    pub height_px: u32,
    pub px_per_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo_hint: Option<Vec<(f64, f64)>>,
}

impl ImageMeta {
    pub fn new(image_id: impl Into<String>, width_px: u32, height_px: u32, px_per_km: f64) -> Result<Self> {
        let meta = Self {
            image_id: image_id.into(),
            width_px,
            height_px,
            px_per_km,
            geo_hint: None,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(DetectionError::Argument(format!(
                "image {} has zero pixel dimension",
                self.image_id
            )));
        }
        if !(self.px_per_km.is_finite() && self.px_per_km > 0.0) {
            return Err(DetectionError::Argument(format!(
                "image {} has invalid px_per_km {}",
                self.image_id, self.px_per_km
            )));
        }
        Ok(())
    }

    /// Ground extent of the full frame in km (width, height).
    pub fn extent_km(&self) -> (f64, f64) {
        (
            self.width_px as f64 / self.px_per_km,
            self.height_px as f64 / self.px_per_km,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub class_label: String,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl DetectionBox {
    /// Normalized edges `(x0, y0, x1, y1)`.
    pub fn edges(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }
}

/// Ground area of one box.
pub fn box_area_km2(b: &DetectionBox, meta: &ImageMeta) -> f64 {
    let (wk, hk) = meta.extent_km();
    (b.w * wk) * (b.h * hk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// Box areas are summed even where boxes overlap.
    #[default]
    Sum,
    /// Overlapping boxes within an image count once (rectilinear union).
    Union,
}

/// Detections grouped by image, plus the metadata for each image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionSet {
    pub metas: BTreeMap<String, ImageMeta>,
    pub boxes: BTreeMap<String, Vec<DetectionBox>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageArea {
    pub image_id: String,
    pub boxes: usize,
    pub area_km2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaSummary {
    pub per_image: Vec<ImageArea>,
    pub total_area_km2: f64,
    pub mode: OverlapMode,
}

impl AreaSummary {
    /// `image_id,boxes,area_km2` rows followed by a `TOTAL` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,boxes,area_km2\n");
        for img in &self.per_image {
            out.push_str(&format!("{},{},{}\n", img.image_id, img.boxes, img.area_km2));
        }
        let n: usize = self.per_image.iter().map(|i| i.boxes).sum();
        out.push_str(&format!("TOTAL,{},{}\n", n, self.total_area_km2));
        out
    }
}

impl RegionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_image(&mut self, meta: ImageMeta) {
        self.metas.insert(meta.image_id.clone(), meta);
    }

    pub fn add_boxes(&mut self, image_id: impl Into<String>, boxes: Vec<DetectionBox>) {
        self.boxes.entry(image_id.into()).or_default().extend(boxes);
    }

    /// Boxes of class `class_label` only.
    pub fn filter_class(&self, class_label: &str) -> RegionSet {
        RegionSet {
            metas: self.metas.clone(),
            boxes: self
                .boxes
                .iter()
                .map(|(id, bs)| {
                    (
                        id.clone(),
                        bs.iter().filter(|b| b.class_label == class_label).cloned().collect(),
                    )
                })
                .collect(),
        }
    }

    /// Images with at least one box.
    pub fn positive_images(&self) -> BTreeSet<String> {
        self.boxes
            .iter()
            .filter(|(_, b)| !b.is_empty())
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn aggregate(&self, mode: OverlapMode) -> Result<AreaSummary> {
        let mut per_image = Vec::with_capacity(self.boxes.len());
        for (id, boxes) in &self.boxes {
            let meta = self
                .metas
                .get(id)
                .ok_or_else(|| DetectionError::Argument(format!("no metadata for image {id}")))?;
            let area = match mode {
                OverlapMode::Sum => compensated_sum(boxes.iter().map(|b| box_area_km2(b, meta))),
                OverlapMode::Union => {
                    let (wk, hk) = meta.extent_km();
                    union::union_area(boxes) * wk * hk
                }
            };
            per_image.push(ImageArea {
                image_id: id.clone(),
                boxes: boxes.len(),
                area_km2: area,
            });
        }
        let total = compensated_sum(per_image.iter().map(|i| i.area_km2));
        Ok(AreaSummary {
            per_image,
            total_area_km2: total,
            mode,
        })
    }
}

/// Total detected area in km² (boxes summed).
pub fn aggregate_area(regions: &RegionSet) -> Result<f64> {
    Ok(regions.aggregate(OverlapMode::Sum)?.total_area_km2)
}

/// Image-level accuracy / precision / recall in percent.
pub fn image_level_metrics(
    predicted_positive: &BTreeSet<String>,
    truth_positive: &BTreeSet<String>,
    all_images: &BTreeSet<String>,
) -> Result<ClassificationMetrics> {
    if all_images.is_empty() {
        return Err(DetectionError::Argument("no images to evaluate".into()));
    }
    Ok(classification_metrics(predicted_positive, truth_positive, all_images)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full(w: f64, h: f64) -> DetectionBox {
        DetectionBox {
            class_label: SUITABLE_PLACE.into(),
            cx: 0.5,
            cy: 0.5,
            w,
            h,
            confidence: None,
        }
    }

    #[test]
    fn area_examples() {
        let m1400 = ImageMeta::new("a", 1400, 1400, DEFAULT_PX_PER_KM).unwrap();
        assert!((box_area_km2(&full(1.0, 1.0), &m1400) - 1.0).abs() <= 1e-12);
        assert!((box_area_km2(&full(0.5, 0.5), &m1400) - 0.25).abs() <= 1e-12);
        let m640 = ImageMeta::new("b", 640, 640, DEFAULT_PX_PER_KM).unwrap();
        let want = (640.0f64 / 1400.0).powi(2);
        assert!((box_area_km2(&full(1.0, 1.0), &m640) - want).abs() < 1e-15);
        assert!((want - 0.20898).abs() < 1e-5);
    }

    #[test]
    fn meta_validation() {
        assert!(ImageMeta::new("x", 0, 10, 1400.0).is_err());
        assert!(ImageMeta::new("x", 10, 10, 0.0).is_err());
        assert!(ImageMeta::new("x", 10, 10, f64::NAN).is_err());
    }

    #[test]
    fn aggregate_empty_and_additive() {
        assert_eq!(aggregate_area(&RegionSet::new()).unwrap(), 0.0);
        let mut rs = RegionSet::new();
        let meta = ImageMeta::new("scene", 1400, 1400, 1400.0).unwrap();
        rs.add_image(meta);
        let a = DetectionBox {
            cx: 0.2,
            cy: 0.2,
            ..full(0.2, 0.2)
        };
        let b = DetectionBox {
            cx: 0.7,
            cy: 0.7,
            ..full(0.25, 0.2)
        };
        rs.add_boxes("scene", vec![a, b]);
        let total = aggregate_area(&rs).unwrap();
        assert!((total - 0.09).abs() < 1e-12, "{total}");
        let union = rs.aggregate(OverlapMode::Union).unwrap().total_area_km2;
        assert!((union - 0.09).abs() < 1e-12);
    }

    #[test]
    fn missing_meta_is_an_error() {
        let mut rs = RegionSet::new();
        rs.add_boxes("ghost", vec![full(0.1, 0.1)]);
        assert!(matches!(aggregate_area(&rs), Err(DetectionError::Argument(_))));
    }

    #[test]
    fn overlap_modes_differ() {
        let mut rs = RegionSet::new();
        rs.add_image(ImageMeta::new("s", 1400, 1400, 1400.0).unwrap());
        rs.add_boxes("s", vec![full(0.5, 0.5), full(0.5, 0.5)]);
        let sum = rs.aggregate(OverlapMode::Sum).unwrap().total_area_km2;
        let uni = rs.aggregate(OverlapMode::Union).unwrap().total_area_km2;
        assert!((sum - 0.5).abs() < 1e-12);
        assert!((uni - 0.25).abs() < 1e-12);
    }

    #[test]
    fn detection_metrics_examples() {
        let all: BTreeSet<String> = (0..3).map(|i| format!("img{i}")).collect();
        let m = image_level_metrics(&all, &all, &all).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall), (100.0, Some(100.0), Some(100.0)));
        assert!(image_level_metrics(&BTreeSet::new(), &BTreeSet::new(), &BTreeSet::new()).is_err());
    }

    proptest! {
        #[test]
        fn doubling_scale_quarters_area(w in 0.01f64..=1.0, h in 0.01f64..=1.0, px in 1u32..5000, ppk in 10.0f64..5000.0) {
            let b = full(w, h);
            let m1 = ImageMeta::new("a", px, px, ppk).unwrap();
            let m2 = ImageMeta::new("a", px, px, 2.0 * ppk).unwrap();
            let a1 = box_area_km2(&b, &m1);
            let a2 = box_area_km2(&b, &m2);
            prop_assert!((a1 / 4.0 - a2).abs() <= 1e-12 * a1);
        }

        #[test]
        fn aggregate_is_permutation_invariant(sizes in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0, 100u32..3000), 1..40), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rs = RegionSet::new();
            let mut items = Vec::new();
            for (i, (w, h, px)) in sizes.iter().enumerate() {
                let id = format!("im{i:03}");
                rs.add_image(ImageMeta::new(&id, *px, *px, 1400.0).unwrap());
                items.push((id, full(*w, *h)));
            }
            for (id, b) in &items { rs.add_boxes(id.clone(), vec![b.clone()]); }
            let forward = aggregate_area(&rs).unwrap();

            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            items.shuffle(&mut rng);
            let vals: Vec<f64> = items.iter().map(|(id, b)| box_area_km2(b, &rs.metas[id])).collect();
            let shuffled = compensated_sum(vals);
            prop_assert!((forward - shuffled).abs() <= 1e-9 * forward.max(1.0));
        }
    }
}
