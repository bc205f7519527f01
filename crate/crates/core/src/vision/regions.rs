//! Per-image candidate region sets.

use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::scalar::Scalar;

use super::boxes::BoundingBox;
use super::nms::nms;

/// Candidate boxes for one image plus their feature vectors (one column per
/// region). Exactly one region spans the full frame; it is always present so
/// the model can fall back to global context.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet<S> {
    pub image_id: String,
    pub boxes: Vec<BoundingBox>,
    pub features: Tensor2<S>,
    pub whole_image_index: usize,
}

impl<S: Scalar> RegionSet<S> {
    pub fn new(
        image_id: String,
        boxes: Vec<BoundingBox>,
        features: Tensor2<S>,
        whole_image_index: usize,
    ) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Empty("region set"));
        }
        if boxes.len() != features.cols() {
            return Err(Error::Shape {
                context: "region set",
                left: format!("{} boxes", boxes.len()),
                right: format!("{} feature columns", features.cols()),
            });
        }
        if whole_image_index >= boxes.len() {
            return Err(Error::InvalidConfig(format!(
                "whole-image index {} out of range ({} regions)",
                whole_image_index,
                boxes.len()
            )));
        }
        let frame = &boxes[whole_image_index];
        if boxes.iter().any(|b| !frame.contains(b)) {
            return Err(Error::InvalidConfig(format!(
                "whole-image box of {:?} does not span all regions",
                image_id
            )));
        }
        if !features.all_finite() {
            return Err(Error::NonFinite {
                context: format!("region features of {:?}", image_id),
            });
        }
        Ok(RegionSet {
            image_id,
            boxes,
            features,
            whole_image_index,
        })
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.rows()
    }

    pub fn whole_image_feature(&self) -> Vec<S> {
        self.features.col_copy(self.whole_image_index)
    }

    pub fn frame(&self) -> &BoundingBox {
        &self.boxes[self.whole_image_index]
    }
}

/// Filters proposals with NMS, truncates to `max_regions − 1` survivors, and
/// appends the full-frame region with its own feature vector. Fewer surviving
/// proposals just make a smaller set; the whole-image region is always last.
#[allow(clippy::too_many_arguments)]
pub fn assemble_region_set<S: Scalar>(
    image_id: impl Into<String>,
    proposals: &[BoundingBox],
    scores: &[f64],
    image_width: f64,
    image_height: f64,
    proposal_features: &Tensor2<S>,
    whole_image_feature: &[S],
    iou_threshold: f64,
    max_regions: usize,
) -> Result<RegionSet<S>> {
    if max_regions < 2 {
        return Err(Error::InvalidConfig(format!(
            "max_regions must be at least 2, got {}",
            max_regions
        )));
    }
    if proposal_features.cols() != proposals.len() {
        return Err(Error::Shape {
            context: "assemble region set",
            left: format!("{} proposals", proposals.len()),
            right: format!("{} feature columns", proposal_features.cols()),
        });
    }
    let dim = whole_image_feature.len();
    if !proposals.is_empty() && proposal_features.rows() != dim {
        return Err(Error::Shape {
            context: "assemble region set",
            left: format!("proposal feature dim {}", proposal_features.rows()),
            right: format!("whole-image feature dim {}", dim),
        });
    }
    for b in proposals {
        if b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > image_width || b.y2 > image_height {
            return Err(Error::InvalidConfig(format!(
                "proposal ({}, {}, {}, {}) outside {}x{} frame",
                b.x1, b.y1, b.x2, b.y2, image_width, image_height
            )));
        }
    }

    let mut kept = nms(proposals, scores, iou_threshold)?;
    kept.truncate(max_regions - 1);

    let mut boxes: Vec<BoundingBox> = kept.iter().map(|&i| proposals[i]).collect();
    let mut features = Tensor2::zeros(dim, kept.len() + 1);
    for (col, &i) in kept.iter().enumerate() {
        features.set_col(col, &proposal_features.col_copy(i));
    }
    features.set_col(kept.len(), whole_image_feature);
    boxes.push(BoundingBox::new(0.0, 0.0, image_width, image_height)?);

    let whole_image_index = boxes.len() - 1;
    RegionSet::new(image_id.into(), boxes, features, whole_image_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    fn grid_proposals(n: usize) -> (Vec<BoundingBox>, Vec<f64>, Tensor2<f64>) {
        // disjoint unit boxes so NMS keeps all of them
        let boxes: Vec<BoundingBox> = (0..n)
            .map(|i| bb(2.0 * i as f64, 0.0, 2.0 * i as f64 + 1.0, 1.0))
            .collect();
        let scores: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 * 1e-3).collect();
        let features = Tensor2::from_fn(3, n, |r, c| (r * n + c) as f64);
        (boxes, scores, features)
    }

    #[test]
    fn full_budget_keeps_max_regions_with_frame_last() {
        let (boxes, scores, features) = grid_proposals(99);
        let set = assemble_region_set(
            "img",
            &boxes,
            &scores,
            200.0,
            10.0,
            &features,
            &[7.0, 8.0, 9.0],
            0.2,
            100,
        )
        .unwrap();
        assert_eq!(set.len(), 100);
        assert_eq!(set.whole_image_index, 99);
        assert_eq!(set.frame(), &bb(0.0, 0.0, 200.0, 10.0));
        assert_eq!(set.whole_image_feature(), vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn zero_proposals_leave_only_the_frame() {
        let set = assemble_region_set(
            "img",
            &[],
            &[],
            64.0,
            64.0,
            &Tensor2::<f64>::zeros(2, 0),
            &[1.0, 2.0],
            0.2,
            8,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.whole_image_index, 0);
    }

    #[test]
    fn truncates_to_budget_in_nms_rank_order() {
        let mut rng = SeedRng::new(5);
        let n = 200;
        let mut boxes = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        for _ in 0..n {
            let x1 = rng.uniform(0.0, 50.0);
            let y1 = rng.uniform(0.0, 50.0);
            boxes.push(bb(x1, y1, x1 + rng.uniform(1.0, 12.0), y1 + rng.uniform(1.0, 12.0)));
            scores.push(rng.uniform(0.0, 1.0));
        }
        let features = Tensor2::from_fn(2, n, |r, c| (r + c) as f64);
        let set = assemble_region_set(
            "img", &boxes, &scores, 64.0, 64.0, &features, &[0.0, 0.0], 0.2, 10,
        )
        .unwrap();
        assert_eq!(set.len(), 10);
        // first 9 regions are the top NMS survivors, in order
        let kept = nms(&boxes, &scores, 0.2).unwrap();
        for (col, &i) in kept.iter().take(9).enumerate() {
            assert_eq!(set.boxes[col], boxes[i]);
            assert_eq!(set.features.col_copy(col), features.col_copy(i));
        }
        assert_eq!(set.whole_image_index, 9);
    }

    #[test]
    fn region_set_validates_frame_coverage() {
        let boxes = vec![bb(0.0, 0.0, 10.0, 10.0), bb(5.0, 5.0, 6.0, 6.0)];
        let features = Tensor2::<f64>::zeros(2, 2);
        // index 1 does not contain box 0
        assert!(RegionSet::new("x".into(), boxes, features, 1).is_err());
    }
}
