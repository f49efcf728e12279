use super::DetectionBox;

/// Area of the union of boxes in normalized image units, by sweeping
/// compressed x-slabs and merging the y-intervals that cover each slab.
pub(super) fn union_area(boxes: &[DetectionBox]) -> f64 {
    let rects: Vec<(f64, f64, f64, f64)> = boxes
        .iter()
        .map(|b| b.edges())
        .filter(|(x0, y0, x1, y1)| x1 > x0 && y1 > y0)
        .collect();
    let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.0, r.2]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut area = 0.0;
    for slab in xs.windows(2) {
        let (xa, xb) = (slab[0], slab[1]);
        let mut spans: Vec<(f64, f64)> = rects
            .iter()
            .filter(|r| r.0 <= xa && r.2 >= xb)
            .map(|r| (r.1, r.3))
            .collect();
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = 0.0;
        let (mut lo, mut hi) = spans[0];
        for &(s, e) in &spans[1..] {
            if s > hi {
                covered += hi - lo;
                lo = s;
                hi = e;
            } else if e > hi {
                hi = e;
            }
        }
        covered += hi - lo;
        area += covered * (xb - xa);
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> DetectionBox {
        DetectionBox {
            class_label: "c".into(),
            cx: (x0 + x1) / 2.0,
            cy: (y0 + y1) / 2.0,
            w: x1 - x0,
            h: y1 - y0,
            confidence: None,
        }
    }

    #[test]
    fn overlapping_pair() {
        let a = rect(0.0, 0.0, 0.5, 0.5);
        let b = rect(0.25, 0.25, 0.75, 0.75);
        assert!((union_area(&[a, b]) - (0.25 + 0.25 - 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn nested_and_empty() {
        assert_eq!(union_area(&[]), 0.0);
        let outer = rect(0.0, 0.0, 1.0, 1.0);
        let inner = rect(0.2, 0.2, 0.4, 0.4);
        assert!((union_area(&[outer, inner]) - 1.0).abs() < 1e-15);
    }

    proptest! {
        // Grid-aligned rectangles on a 20x20 lattice let a cell-count oracle
        // give the exact union.
        #[test]
        fn matches_cell_count(rs in prop::collection::vec((0u32..20, 0u32..20, 1u32..8, 1u32..8), 1..12)) {
            let mut cells = [[false; 28]; 28];
            let mut boxes = Vec::new();
            for (x, y, w, h) in &rs {
                for i in *x..x + w { for j in *y..y + h { cells[i as usize][j as usize] = true; } }
                boxes.push(rect(*x as f64 / 32.0, *y as f64 / 32.0, (x + w) as f64 / 32.0, (y + h) as f64 / 32.0));
            }
            let count = cells.iter().flatten().filter(|c| **c).count() as f64;
            prop_assert!((union_area(&boxes) - count / 1024.0).abs() < 1e-12);
        }
    }
}
