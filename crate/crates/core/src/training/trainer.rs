//! Minibatch SGD training with held-out model selection.
//!
//! A minibatch is a set of questions; all their choice pairs go through the
//! network as one batch, so batch-norm statistics are computed over the
//! minibatch of pairs. The held-out split hashes question ids, so re-runs on
//! reshuffled files select the same split.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{mc_accuracy, predict_all};
use crate::model::{ModelConfig, ModelGrads, ModelParameters, PairBatch};
use crate::numerics::SeedRng;
use crate::scalar::Scalar;
use crate::vision::FeatureMap;

use super::dataset::McExample;
use super::loss::consensus_hinge_loss;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub heldout_fraction: f64,
    /// Stop after this many epochs without held-out improvement; 0 disables.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 50,
            seed: 1,
            heldout_fraction: 0.10,
            patience: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0 < self.heldout_fraction && self.heldout_fraction < 0.5) {
            return Err(Error::InvalidConfig(
                "heldout_fraction must be in (0, 0.5)".into(),
            ));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Stable hash split: the same question id always lands on the same side,
/// independent of file order and platform.
pub fn is_heldout(qid: &str, heldout_fraction: f64) -> bool {
    let mut h = 0xcbf29ce484222325u64;
    for b in qid.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    let cut = (heldout_fraction * 10_000.0).round() as u64;
    h % 10_000 < cut
}

/// p ← p − lr·g for every learnable tensor.
pub fn sgd_step<S: Scalar>(
    params: &mut ModelParameters<S>,
    grads: &ModelGrads<S>,
    learning_rate: S,
) -> Result<()> {
    let g = grads.flat();
    let p = params.learnable_mut();
    if g.len() != p.len() {
        return Err(Error::Shape {
            context: "sgd step",
            left: format!("{} parameter tensors", p.len()),
            right: format!("{} gradient tensors", g.len()),
        });
    }
    for ((pname, pslice), (gname, gslice)) in p.into_iter().zip(g) {
        if pname != gname || pslice.len() != gslice.len() {
            return Err(Error::Shape {
                context: "sgd step",
                left: format!("{} ({})", pname, pslice.len()),
                right: format!("{} ({})", gname, gslice.len()),
            });
        }
        for (pv, &gv) in pslice.iter_mut().zip(gslice) {
            *pv -= learning_rate * gv;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub heldout_acc: f64,
}

pub struct TrainOutcome<S> {
    /// Parameters at the epoch with the best held-out accuracy.
    pub best: ModelParameters<S>,
    pub best_epoch: usize,
    pub best_heldout_acc: f64,
    pub history: Vec<EpochStats>,
}

fn build_batch<'a, S: Scalar>(
    dataset: &'a [McExample<S>],
    regions: &'a FeatureMap<S>,
    chunk: &[usize],
) -> Result<(PairBatch<'a, S>, Vec<Range<usize>>)> {
    let mut encodings = Vec::new();
    let mut region_refs = Vec::new();
    let mut groups = Vec::with_capacity(chunk.len());
    for &qi in chunk {
        let ex = &dataset[qi];
        let rs = regions
            .get(&ex.image_id)
            .ok_or_else(|| Error::UnknownImage(ex.image_id.clone()))?;
        let start = encodings.len();
        for enc in &ex.encodings {
            encodings.push(enc);
            region_refs.push(rs);
        }
        groups.push(start..encodings.len());
    }
    Ok((PairBatch::new(&encodings, region_refs)?, groups))
}

/// Trains from scratch and returns the checkpoint with the best held-out
/// accuracy (ties: lower train loss, then earlier epoch). Deterministic
/// given the seed.
pub fn train<S: Scalar>(
    dataset: &[McExample<S>],
    regions: &FeatureMap<S>,
    config: &TrainConfig,
    model_config: ModelConfig,
) -> Result<TrainOutcome<S>> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    for ex in dataset {
        if !regions.contains_key(&ex.image_id) {
            return Err(Error::UnknownImage(ex.image_id.clone()));
        }
        if ex.choice_count() < 2 {
            return Err(Error::TooFewChoices {
                qid: ex.qid.clone(),
                got: ex.choice_count(),
            });
        }
    }

    let root = SeedRng::new(config.seed);
    let mut params = ModelParameters::init(model_config, &mut root.fork("init"))?;
    let mut shuffle_rng = root.fork("shuffle");

    let (train_idx, held_idx): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| !is_heldout(&dataset[i].qid, config.heldout_fraction));
    if train_idx.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let heldout: Vec<&McExample<S>> = held_idx.iter().map(|&i| &dataset[i]).collect();

    let lr = S::from_f64(config.learning_rate);
    let mut history = Vec::new();
    let mut best: Option<(ModelParameters<S>, usize, f64, f64)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 0..config.epochs {
        let mut order = train_idx.clone();
        shuffle_rng.shuffle(&mut order);

        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(config.batch_size) {
            let (batch, groups) = build_batch(dataset, regions, chunk)?;
            let fwd = params.forward_batch_update(&batch)?;

            let scale = S::from_f64(1.0 / chunk.len() as f64);
            let mut d_scores = vec![S::zero(); batch.len()];
            let mut batch_loss = S::zero();
            for (range, &qi) in groups.iter().zip(chunk) {
                let ex = &dataset[qi];
                let scores = &fwd.scores[range.clone()];
                let fractions: Vec<S> =
                    ex.fractions.iter().map(|&f| S::from_f64(f)).collect();
                let (loss, grad) =
                    consensus_hinge_loss(scores, &fractions, ex.correct_index)?;
                batch_loss += loss;
                for (k, &g) in grad.iter().enumerate() {
                    d_scores[range.start + k] = g * scale;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_sum += batch_loss.as_f64();

            let grads = params.backward(&batch, &fwd, &d_scores)?;
            sgd_step(&mut params, &grads, lr)?;
        }
        let train_loss = loss_sum / train_idx.len() as f64;

        let heldout_acc = if heldout.is_empty() {
            0.0
        } else {
            let predictions = predict_all(&params, &heldout, regions)?;
            let choices: Vec<usize> = predictions.iter().map(|p| p.choice).collect();
            mc_accuracy(&choices, &heldout)?
        };

        history.push(EpochStats {
            epoch,
            train_loss,
            heldout_acc,
        });

        let improved = match &best {
            None => true,
            Some((_, _, acc, loss)) => {
                heldout_acc > *acc || (heldout_acc == *acc && train_loss < *loss)
            }
        };
        if improved {
            best = Some((params.clone(), epoch, heldout_acc, train_loss));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if config.patience > 0 && epochs_since_best >= config.patience {
                break;
            }
        }
    }

    let (best, best_epoch, best_heldout_acc, _) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_heldout_acc,
        history,
    })
}

/// Writes the per-epoch log as `epoch,train_loss,heldout_acc`.
pub fn write_history_csv(path: impl AsRef<Path>, history: &[EpochStats]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "epoch,train_loss,heldout_acc")?;
    for e in history {
        writeln!(out, "{},{},{}", e.epoch, e.train_loss, e.heldout_acc)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn heldout_split_is_stable_and_roughly_sized() {
        let n = 10_000;
        let held = (0..n)
            .filter(|i| is_heldout(&format!("q{:05}", i), 0.10))
            .count();
        assert!(held > 800 && held < 1200, "held {}", held);
        assert_eq!(is_heldout("q00042", 0.10), is_heldout("q00042", 0.10));
    }

    fn tiny_params() -> ModelParameters<f64> {
        let config = crate::model::ModelConfig {
            word_dim: 2,
            lang_hidden_dims: vec![3, 2],
            embed_dim: 2,
            fused_dim: 2,
            head_dims: vec![2, 1],
            feature_dim: 2,
            variant: Variant::RegionSel,
            language_scheme: crate::language::LanguageScheme::FiveBin,
            bn_epsilon: 1e-5,
            bn_momentum: 0.1,
        };
        ModelParameters::init(config, &mut SeedRng::new(9)).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let mut params = tiny_params();
        let before = params.clone();
        let mut grads = ModelGrads::zeros_like(&params);
        for (_, slice) in grads.flat_mut() {
            for v in slice {
                *v = 1.0;
            }
        }
        sgd_step(&mut params, &grads, 0.0).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn single_quadratic_coordinate_steps_as_hand_computed() {
        // f(w) = w² at w = 3 with lr 0.1 steps to 2.4
        let mut params = tiny_params();
        params.set("attn.query.bias", 0, 3.0);
        let mut grads = ModelGrads::zeros_like(&params);
        grads.query_proj.as_mut().unwrap().bias[0] = 2.0 * 3.0;
        sgd_step(&mut params, &grads, 0.1).unwrap();
        assert!((params.get("attn.query.bias", 0) - 2.4).abs() < 1e-12);
    }

    #[test]
    fn gradient_descent_reaches_a_quadratic_minimum() {
        // f(θ) = Σ (θ_i − c)²; the minimizer is θ = c exactly.
        let mut params = tiny_params();
        let c = 0.125;
        for _ in 0..200 {
            let mut grads = ModelGrads::zeros_like(&params);
            let values: Vec<(String, Vec<f64>)> = params
                .learnable()
                .into_iter()
                .map(|(n, s)| (n, s.to_vec()))
                .collect();
            for (name, vals) in &values {
                for (i, v) in vals.iter().enumerate() {
                    let g = 2.0 * (v - c);
                    for (gn, gs) in grads.flat_mut() {
                        if &gn == name {
                            gs[i] = g;
                        }
                    }
                }
            }
            sgd_step(&mut params, &grads, 0.1).unwrap();
        }
        for (_, slice) in params.learnable() {
            for v in slice {
                assert!((v - c).abs() < 1e-6, "coordinate {} not at minimum", v);
            }
        }
    }

    use crate::numerics::gradcheck::ParamSet;
}
