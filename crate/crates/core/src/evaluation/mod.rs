//! Multiple-choice accuracy under the annotator-consensus rule, the
//! per-question-type breakdown, region-weight pixel evaluation, and
//! attention-mask export.

pub mod annotations;
pub mod breakdown;
pub mod masks;
pub mod weightmap;

pub use annotations::{read_annotations, write_annotations};
pub use breakdown::{
    assign_type, default_type_rules, parse_type_rules, question_type_breakdown,
    write_breakdown_tsv, TypeRule, TypeStats, CATCH_ALL_LABEL,
};
pub use masks::{export_mask, read_mask};
pub use weightmap::{
    annotation_weight_score, pixel_weight_map, pixel_weight_map_blurred, PixelWeightMap,
    RegionAnnotation,
};

use crate::error::{Error, Result};
use crate::model::{AttentionMap, ModelParameters, PairBatch};
use crate::numerics::BnStats;
use crate::scalar::Scalar;
use crate::training::McExample;
use crate::vision::FeatureMap;

/// An answer counts as correct when at least 3 of 10 annotators gave it;
/// fractions are compared against this threshold exactly.
pub const CONSENSUS_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct Prediction<S> {
    /// Argmax choice (ties to the lowest index).
    pub choice: usize,
    pub scores: Vec<S>,
    /// Attention map of the chosen pair, when the variant produces one.
    pub attention: Option<AttentionMap<S>>,
}

/// Scores every choice of one question (inference statistics) and picks the
/// best.
pub fn predict_example<S: Scalar>(
    params: &ModelParameters<S>,
    example: &McExample<S>,
    regions: &FeatureMap<S>,
) -> Result<Prediction<S>> {
    let rs = regions
        .get(&example.image_id)
        .ok_or_else(|| Error::UnknownImage(example.image_id.clone()))?;
    let encodings: Vec<_> = example.encodings.iter().collect();
    let region_refs = vec![rs; encodings.len()];
    let batch = PairBatch::new(&encodings, region_refs)?;
    let mut fwd = params.forward_batch(&batch, BnStats::Running)?;
    let mut choice = 0;
    for (i, &s) in fwd.scores.iter().enumerate() {
        if s > fwd.scores[choice] {
            choice = i;
        }
    }
    let attention = fwd.attention.swap_remove(choice);
    Ok(Prediction {
        choice,
        scores: fwd.scores,
        attention,
    })
}

pub fn predict_all<S: Scalar>(
    params: &ModelParameters<S>,
    examples: &[&McExample<S>],
    regions: &FeatureMap<S>,
) -> Result<Vec<Prediction<S>>> {
    examples
        .iter()
        .map(|ex| predict_example(params, ex, regions))
        .collect()
}

/// Fraction of questions whose predicted choice reaches the consensus
/// threshold.
pub fn mc_accuracy<S>(predictions: &[usize], examples: &[&McExample<S>]) -> Result<f64> {
    if predictions.len() != examples.len() {
        return Err(Error::Shape {
            context: "accuracy",
            left: format!("{} predictions", predictions.len()),
            right: format!("{} examples", examples.len()),
        });
    }
    if examples.is_empty() {
        return Err(Error::Empty("accuracy examples"));
    }
    let correct = predictions
        .iter()
        .zip(examples)
        .filter(|(&p, ex)| ex.fractions.get(p).copied().unwrap_or(0.0) >= CONSENSUS_THRESHOLD)
        .count();
    Ok(correct as f64 / examples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::{LanguageEncoding, LanguageScheme};

    fn example(fractions: Vec<f64>) -> McExample<f64> {
        let mut correct = 0;
        for (i, &f) in fractions.iter().enumerate() {
            if f > fractions[correct] {
                correct = i;
            }
        }
        McExample {
            qid: "q".into(),
            image_id: "img".into(),
            question_surfaces: vec![],
            encodings: fractions
                .iter()
                .map(|_| LanguageEncoding {
                    scheme: LanguageScheme::FiveBin,
                    bins: vec![],
                    flat: vec![],
                })
                .collect(),
            fractions,
            correct_index: correct,
        }
    }

    #[test]
    fn threshold_is_inclusive_at_three_annotators() {
        let ex = example(vec![0.3, 0.7]);
        let exs = [&ex];
        // picking the 0.3 choice still counts: three annotators gave it
        assert_eq!(mc_accuracy(&[0], &exs).unwrap(), 1.0);
    }

    #[test]
    fn two_annotators_is_incorrect() {
        let ex = example(vec![0.2, 0.7]);
        let exs = [&ex];
        assert_eq!(mc_accuracy(&[0], &exs).unwrap(), 0.0);
    }

    #[test]
    fn all_correct_when_predictions_hit_the_designated_choice() {
        let a = example(vec![0.1, 0.8]);
        let b = example(vec![0.9, 0.0]);
        let exs = [&a, &b];
        assert_eq!(mc_accuracy(&[1, 0], &exs).unwrap(), 1.0);
    }

    #[test]
    fn misaligned_lists_rejected() {
        let a = example(vec![0.1, 0.8]);
        let exs = [&a];
        assert!(mc_accuracy(&[0, 1], &exs).is_err());
    }
}
