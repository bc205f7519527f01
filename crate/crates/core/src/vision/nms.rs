//! Greedy non-maximum suppression.

use crate::error::{Error, Result};

use super::boxes::{iou, BoundingBox};

/// Repeatedly keeps the highest-scoring remaining box and discards every
/// remaining box whose IoU with it exceeds the threshold (strictly). Score
/// ties break toward the lower original index. Kept indices come back in
/// descending-score order.
pub fn nms(boxes: &[BoundingBox], scores: &[f64], iou_threshold: f64) -> Result<Vec<usize>> {
    if boxes.len() != scores.len() {
        return Err(Error::Shape {
            context: "nms",
            left: format!("{} boxes", boxes.len()),
            right: format!("{} scores", scores.len()),
        });
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    // stable sort keeps lower indices first among equal scores
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut suppressed = vec![false; boxes.len()];
    let mut kept = Vec::new();
    for pos in 0..order.len() {
        let i = order[pos];
        if suppressed[i] {
            continue;
        }
        kept.push(i);
        for &j in &order[pos + 1..] {
            if !suppressed[j] && iou(&boxes[i], &boxes[j]) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn singleton_is_kept() {
        let kept = nms(&[bb(0.0, 0.0, 1.0, 1.0)], &[0.5], 0.2).unwrap();
        assert_eq!(kept, vec![0]);
    }

    #[test]
    fn duplicate_box_keeps_higher_score_only() {
        let b = bb(0.0, 0.0, 4.0, 4.0);
        let kept = nms(&[b, b], &[0.9, 0.8], 0.2).unwrap();
        assert_eq!(kept, vec![0]);
        let kept = nms(&[b, b], &[0.8, 0.9], 0.2).unwrap();
        assert_eq!(kept, vec![1]);
    }

    #[test]
    fn score_ties_break_to_lower_index() {
        let b = bb(0.0, 0.0, 4.0, 4.0);
        let kept = nms(&[b, b], &[0.7, 0.7], 0.2).unwrap();
        assert_eq!(kept, vec![0]);
    }

    #[test]
    fn threshold_is_strict() {
        // IoU exactly 1/3; at threshold 1/3 nothing is discarded
        let a = bb(0.0, 0.0, 10.0, 10.0);
        let b = bb(5.0, 0.0, 15.0, 10.0);
        let kept = nms(&[a, b], &[0.9, 0.8], 1.0 / 3.0).unwrap();
        assert_eq!(kept, vec![0, 1]);
        let kept = nms(&[a, b], &[0.9, 0.8], 1.0 / 3.0 - 1e-9).unwrap();
        assert_eq!(kept, vec![0]);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(nms(&[bb(0.0, 0.0, 1.0, 1.0)], &[0.1, 0.2], 0.2).is_err());
    }
}
