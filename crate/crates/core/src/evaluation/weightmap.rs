//! Per-pixel region-weight maps and the annotated-region evaluation.
//!
//! Every region's selection weight is cumulatively added to each of its
//! constituent pixels; the map is then normalized by the maximum pixel
//! weight. For display export a small box blur can be applied before
//! normalization; the μ_in − μ metric always uses the raw accumulation.

use crate::error::{Error, Result};
use crate::model::AttentionMap;
use crate::scalar::Scalar;
use crate::vision::{BoundingBox, RegionSet};

/// Max-normalized per-pixel weights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelWeightMap {
    pub width: usize,
    pub height: usize,
    pub weights: Vec<f64>,
}

impl PixelWeightMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }
}

/// Pixel span covered by a box, clamped to the map.
fn pixel_span(lo: f64, hi: f64, limit: usize) -> (usize, usize) {
    let a = lo.floor().max(0.0) as usize;
    let b = (hi.ceil() as usize).min(limit);
    (a.min(limit), b)
}

fn check_box_inside(b: &BoundingBox, width: usize, height: usize) -> Result<()> {
    if b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > width as f64 || b.y2 > height as f64 {
        return Err(Error::InvalidConfig(format!(
            "box ({}, {}, {}, {}) outside {}x{} map",
            b.x1, b.y1, b.x2, b.y2, width, height
        )));
    }
    Ok(())
}

fn accumulate<S: Scalar>(
    regions: &RegionSet<S>,
    attention: &AttentionMap<S>,
    width: usize,
    height: usize,
) -> Result<Vec<f64>> {
    if attention.len() != regions.len() {
        return Err(Error::Shape {
            context: "pixel weight map",
            left: format!("{} regions", regions.len()),
            right: format!("{} weights", attention.len()),
        });
    }
    let mut acc = vec![0.0f64; width * height];
    for (b, &w) in regions.boxes.iter().zip(&attention.weights) {
        check_box_inside(b, width, height)?;
        let w = w.as_f64();
        let (x0, x1) = pixel_span(b.x1, b.x2, width);
        let (y0, y1) = pixel_span(b.y1, b.y2, height);
        for y in y0..y1 {
            for x in x0..x1 {
                acc[y * width + x] += w;
            }
        }
    }
    Ok(acc)
}

fn normalized(width: usize, height: usize, mut weights: Vec<f64>) -> PixelWeightMap {
    let max = weights.iter().cloned().fold(0.0f64, f64::max);
    if max > 0.0 {
        for w in &mut weights {
            *w /= max;
        }
    }
    PixelWeightMap {
        width,
        height,
        weights,
    }
}

/// Raw accumulation, max-normalized.
pub fn pixel_weight_map<S: Scalar>(
    regions: &RegionSet<S>,
    attention: &AttentionMap<S>,
    width: usize,
    height: usize,
) -> Result<PixelWeightMap> {
    Ok(normalized(width, height, accumulate(regions, attention, width, height)?))
}

/// 3×3 box blur (truncated at the borders) applied before normalization;
/// removes the rectangle artifacts in exported masks.
pub fn pixel_weight_map_blurred<S: Scalar>(
    regions: &RegionSet<S>,
    attention: &AttentionMap<S>,
    width: usize,
    height: usize,
) -> Result<PixelWeightMap> {
    let acc = accumulate(regions, attention, width, height)?;
    let mut blurred = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let ny = y as i64 + dy;
                    let nx = x as i64 + dx;
                    if ny >= 0 && ny < height as i64 && nx >= 0 && nx < width as i64 {
                        sum += acc[ny as usize * width + nx as usize];
                        count += 1.0;
                    }
                }
            }
            blurred[y * width + x] = sum / count;
        }
    }
    Ok(normalized(width, height, blurred))
}

/// Human-marked relevant boxes for one question.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionAnnotation {
    pub qid: String,
    pub boxes: Vec<BoundingBox>,
}

/// μ_in − μ: mean pixel weight over the union of the annotated boxes minus
/// the mean over all pixels. Positive means the map concentrates where a
/// person would look.
pub fn annotation_weight_score(
    map: &PixelWeightMap,
    annotation: &RegionAnnotation,
) -> Result<f64> {
    let mut mask = vec![false; map.weights.len()];
    for b in &annotation.boxes {
        check_box_inside(b, map.width, map.height)?;
        let (x0, x1) = pixel_span(b.x1, b.x2, map.width);
        let (y0, y1) = pixel_span(b.y1, b.y2, map.height);
        for y in y0..y1 {
            for x in x0..x1 {
                mask[y * map.width + x] = true;
            }
        }
    }
    let inside = mask.iter().filter(|&&m| m).count();
    if inside == 0 {
        return Err(Error::DegenerateAnnotation);
    }
    let sum_in: f64 = map
        .weights
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(w, _)| w)
        .sum();
    let mu_in = sum_in / inside as f64;
    let mu = map.weights.iter().sum::<f64>() / map.weights.len() as f64;
    Ok(mu_in - mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor2;

    fn set_with_boxes(boxes: Vec<BoundingBox>, frame: BoundingBox) -> RegionSet<f64> {
        let mut all = boxes;
        all.push(frame);
        let n = all.len();
        RegionSet::new("img".into(), all, Tensor2::zeros(1, n), n - 1).unwrap()
    }

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn full_frame_region_with_weight_one_gives_all_ones() {
        let rs = set_with_boxes(vec![], bb(0.0, 0.0, 4.0, 4.0));
        let map = pixel_weight_map(&rs, &AttentionMap::new(vec![1.0]).unwrap(), 4, 4).unwrap();
        assert!(map.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn disjoint_regions_normalize_against_the_max() {
        // all attention mass on two disjoint boxes; frame gets weight 0
        let rs = set_with_boxes(vec![bb(0.0, 0.0, 2.0, 2.0), bb(4.0, 4.0, 6.0, 6.0)], bb(0.0, 0.0, 8.0, 8.0));
        let att = AttentionMap::new(vec![0.75, 0.25, 0.0]).unwrap();
        let map = pixel_weight_map(&rs, &att, 8, 8).unwrap();
        assert_eq!(map.get(0, 0), 1.0);
        assert!((map.get(5, 5) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(map.get(3, 3), 0.0);
    }

    #[test]
    fn overlap_accumulates_before_normalization() {
        let rs = set_with_boxes(vec![bb(0.0, 0.0, 4.0, 4.0), bb(2.0, 0.0, 6.0, 4.0)], bb(0.0, 0.0, 8.0, 4.0));
        let att = AttentionMap::new(vec![0.5, 0.5, 0.0]).unwrap();
        let map = pixel_weight_map(&rs, &att, 8, 4).unwrap();
        // shared pixels saw 1.0, exclusive pixels 0.5, so after normalization 1.0 and 0.5
        assert_eq!(map.get(3, 1), 1.0);
        assert_eq!(map.get(1, 1), 0.5);
        assert_eq!(map.get(5, 1), 0.5);
        assert_eq!(map.get(7, 1), 0.0);
    }

    #[test]
    fn map_is_invariant_to_region_order() {
        let a = set_with_boxes(vec![bb(0.0, 0.0, 2.0, 2.0), bb(4.0, 0.0, 6.0, 2.0)], bb(0.0, 0.0, 8.0, 2.0));
        let b = set_with_boxes(vec![bb(4.0, 0.0, 6.0, 2.0), bb(0.0, 0.0, 2.0, 2.0)], bb(0.0, 0.0, 8.0, 2.0));
        let m1 = pixel_weight_map(&a, &AttentionMap::new(vec![0.7, 0.2, 0.1]).unwrap(), 8, 2).unwrap();
        let m2 = pixel_weight_map(&b, &AttentionMap::new(vec![0.2, 0.7, 0.1]).unwrap(), 8, 2).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn uniform_map_scores_zero() {
        let map = PixelWeightMap {
            width: 10,
            height: 10,
            weights: vec![0.5; 100],
        };
        let ann = RegionAnnotation {
            qid: "q".into(),
            boxes: vec![bb(2.0, 2.0, 5.0, 5.0)],
        };
        assert_eq!(annotation_weight_score(&map, &ann).unwrap(), 0.0);
    }

    #[test]
    fn concentrated_weight_inside_a_tenth_of_the_frame() {
        // weights 1.0 inside a 10-pixel box of a 100-pixel map
        let mut weights = vec![0.0; 100];
        for y in 0..10 {
            weights[y * 10] = 1.0; // column x = 0
        }
        let map = PixelWeightMap {
            width: 10,
            height: 10,
            weights,
        };
        let ann = RegionAnnotation {
            qid: "q".into(),
            boxes: vec![bb(0.0, 0.0, 1.0, 10.0)],
        };
        let diff = annotation_weight_score(&map, &ann).unwrap();
        assert!((diff - 0.9).abs() < 1e-12);
    }

    #[test]
    fn weight_outside_annotation_is_negative() {
        let mut weights = vec![0.0; 100];
        weights[99] = 1.0;
        let map = PixelWeightMap {
            width: 10,
            height: 10,
            weights,
        };
        let ann = RegionAnnotation {
            qid: "q".into(),
            boxes: vec![bb(0.0, 0.0, 2.0, 2.0)],
        };
        assert!(annotation_weight_score(&map, &ann).unwrap() < 0.0);
    }

    #[test]
    fn blur_then_normalize_keeps_max_at_one() {
        let rs = set_with_boxes(vec![bb(2.0, 2.0, 5.0, 5.0)], bb(0.0, 0.0, 8.0, 8.0));
        let att = AttentionMap::new(vec![0.9, 0.1]).unwrap();
        let map = pixel_weight_map_blurred(&rs, &att, 8, 8).unwrap();
        let max = map.weights.iter().cloned().fold(0.0f64, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }
}
