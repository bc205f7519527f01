//! Consensus-scaled margin objective.
//!
//! For predicted confidences y and annotator fractions a, the loss on one
//! question is max over incorrect n of max(0, y_n + (a_p − a_n) − y_p): the
//! correct choice p must outscore each incorrect one by the gap in annotator
//! agreement. With a_p = 0.6 and a_n = 0.2 the required margin is 0.4.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Returns the loss and its subgradient over the scores: +1 on the single
/// maximizing violated choice (ties toward the lowest index), −1 on the
/// correct one, zero everywhere when no margin is violated.
pub fn consensus_hinge_loss<S: Scalar>(
    scores: &[S],
    fractions: &[S],
    correct_index: usize,
) -> Result<(S, Vec<S>)> {
    if scores.len() != fractions.len() {
        return Err(Error::Shape {
            context: "consensus hinge loss",
            left: format!("{} scores", scores.len()),
            right: format!("{} fractions", fractions.len()),
        });
    }
    if scores.len() < 2 {
        return Err(Error::TooFewChoices {
            qid: String::new(),
            got: scores.len(),
        });
    }
    if correct_index >= scores.len() {
        return Err(Error::InvalidConfig(format!(
            "correct index {} out of {} choices",
            correct_index,
            scores.len()
        )));
    }

    let y_p = scores[correct_index];
    let a_p = fractions[correct_index];
    let mut loss = S::zero();
    let mut worst: Option<usize> = None;
    for n in 0..scores.len() {
        if n == correct_index {
            continue;
        }
        let violation = scores[n] + (a_p - fractions[n]) - y_p;
        if violation > loss {
            loss = violation;
            worst = Some(n);
        }
    }

    let mut grad = vec![S::zero(); scores.len()];
    if let Some(n) = worst {
        grad[n] = S::one();
        grad[correct_index] = -S::one();
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_is_the_annotator_gap() {
        // equal scores leave exactly the 0.4 consensus margin unpaid
        let (loss, _) = consensus_hinge_loss(&[0.0f64, 0.0], &[0.6, 0.2], 0).unwrap();
        assert!((loss - 0.4).abs() < 1e-12);
    }

    #[test]
    fn satisfied_margins_give_zero_loss_and_gradient() {
        let (loss, grad) =
            consensus_hinge_loss(&[10.0f64, 0.0, 0.0, 0.0], &[1.0, 0.3, 0.2, 0.0], 0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn hand_worked_violation() {
        let (loss, grad) = consensus_hinge_loss(&[0.5f64, 0.3], &[0.6, 0.2], 0).unwrap();
        assert!((loss - 0.2).abs() < 1e-12);
        assert_eq!(grad, vec![-1.0, 1.0]);
    }

    #[test]
    fn ties_pick_the_lowest_incorrect_index() {
        let (loss, grad) = consensus_hinge_loss(&[0.0f64, 0.1, 0.1], &[0.5, 0.1, 0.1], 0).unwrap();
        assert!(loss > 0.0);
        assert_eq!(grad, vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn shift_invariance() {
        let scores = [0.3f64, -0.7, 1.1, 0.0];
        let fractions = [0.7, 0.2, 0.1, 0.0];
        let (l1, g1) = consensus_hinge_loss(&scores, &fractions, 0).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.25).collect();
        let (l2, g2) = consensus_hinge_loss(&shifted, &fractions, 0).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        assert_eq!(g1, g2);
    }

    #[test]
    fn subgradient_matches_central_differences_away_from_kinks() {
        let scores = vec![0.2f64, 0.9, -0.4, 0.05];
        let fractions = vec![0.6, 0.2, 0.1, 0.1];
        let (loss, grad) = consensus_hinge_loss(&scores, &fractions, 0).unwrap();
        assert!(loss > 1e-3);
        let eps = 1e-7;
        for i in 0..scores.len() {
            let mut up = scores.clone();
            up[i] += eps;
            let mut down = scores.clone();
            down[i] -= eps;
            let (lu, _) = consensus_hinge_loss(&up, &fractions, 0).unwrap();
            let (ld, _) = consensus_hinge_loss(&down, &fractions, 0).unwrap();
            let numeric = (lu - ld) / (2.0 * eps);
            assert!(
                (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-8) < 1e-6,
                "coordinate {}: {} vs {}",
                i,
                grad[i],
                numeric
            );
        }
    }

    #[test]
    fn needs_at_least_two_choices() {
        assert!(consensus_hinge_loss(&[1.0f64], &[0.9], 0).is_err());
    }
}
