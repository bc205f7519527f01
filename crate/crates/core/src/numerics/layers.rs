//! Layer forward passes and their hand-registered gradient rules.
//!
//! The network is a fixed feedforward graph, so each layer exposes a forward
//! function plus a matching backward that consumes whatever the forward
//! cached. No general-purpose tape.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::{dot, Tensor2};

/// y = weight · x + bias, bias broadcast over columns.
pub fn affine<S: Scalar>(x: &Tensor2<S>, weight: &Tensor2<S>, bias: &[S]) -> Result<Tensor2<S>> {
    if weight.cols() != x.rows() {
        return Err(Error::Shape {
            context: "affine",
            left: weight.shape_string(),
            right: x.shape_string(),
        });
    }
    if bias.len() != weight.rows() {
        return Err(Error::Shape {
            context: "affine bias",
            left: weight.shape_string(),
            right: format!("bias length {}", bias.len()),
        });
    }
    let mut out = weight.matmul(x)?;
    out.add_col_broadcast(bias)?;
    Ok(out)
}

pub struct AffineGrads<S> {
    pub weight: Tensor2<S>,
    pub bias: Vec<S>,
    pub input: Tensor2<S>,
}

/// Gradient rule for `affine`: given dL/dy, returns dL/dW, dL/db, dL/dx.
pub fn affine_backward<S: Scalar>(
    x: &Tensor2<S>,
    weight: &Tensor2<S>,
    d_out: &Tensor2<S>,
) -> Result<AffineGrads<S>> {
    Ok(AffineGrads {
        weight: d_out.matmul_nt(x)?,
        bias: d_out.row_sums(),
        input: weight.matmul_tn(d_out)?,
    })
}

pub fn relu<S: Scalar>(x: &Tensor2<S>) -> Tensor2<S> {
    x.map(|v| if v > S::zero() { v } else { S::zero() })
}

/// Mask comes from the pre-activation; the subgradient at 0 is taken as 0.
pub fn relu_backward<S: Scalar>(pre: &Tensor2<S>, d_out: &Tensor2<S>) -> Tensor2<S> {
    debug_assert_eq!(pre.rows(), d_out.rows());
    debug_assert_eq!(pre.cols(), d_out.cols());
    Tensor2::from_fn(pre.rows(), pre.cols(), |r, c| {
        if pre.get(r, c) > S::zero() {
            d_out.get(r, c)
        } else {
            S::zero()
        }
    })
}

/// Max-subtracted softmax; arbitrarily large inputs stay finite.
pub fn softmax<S: Scalar>(z: &[S]) -> Result<Vec<S>> {
    if z.is_empty() {
        return Err(Error::Empty("softmax"));
    }
    let max = z.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Jacobian-vector product of softmax: dz_j = s_j (ds_j − ⟨ds, s⟩).
pub fn softmax_backward<S: Scalar>(s: &[S], d_s: &[S]) -> Vec<S> {
    debug_assert_eq!(s.len(), d_s.len());
    let inner = dot(d_s, s);
    s.iter()
        .zip(d_s)
        .map(|(&si, &di)| si * (di - inner))
        .collect()
}

/// Per-feature scale/shift plus the running statistics used at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState<S> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    pub epsilon: S,
    pub momentum: S,
}

impl<S: Scalar> BatchNormState<S> {
    pub fn new(features: usize, epsilon: f64, momentum: f64) -> Self {
        BatchNormState {
            gamma: vec![S::one(); features],
            beta: vec![S::zero(); features],
            running_mean: vec![S::zero(); features],
            running_var: vec![S::one(); features],
            epsilon: S::from_f64(epsilon),
            momentum: S::from_f64(momentum),
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }
}

/// Which statistics normalize the batch: fresh batch statistics (training)
/// or the stored running estimates (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStats {
    Batch,
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Infer,
}

/// Everything the backward pass needs from the forward.
pub struct BnCache<S> {
    pub normalized: Tensor2<S>,
    pub inv_std: Vec<S>,
    pub stats: BnStats,
}

fn check_features<S: Scalar>(x: &Tensor2<S>, state: &BatchNormState<S>) -> Result<()> {
    if x.rows() != state.features() {
        return Err(Error::Shape {
            context: "batch norm",
            left: x.shape_string(),
            right: format!("state features {}", state.features()),
        });
    }
    Ok(())
}

/// Biased (1/m) per-feature batch statistics over columns.
fn batch_stats<S: Scalar>(x: &Tensor2<S>) -> (Vec<S>, Vec<S>) {
    let m = S::from_f64(x.cols() as f64);
    let mut means = Vec::with_capacity(x.rows());
    let mut vars = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().copied().sum::<S>() / m;
        let var = row
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<S>()
            / m;
        means.push(mean);
        vars.push(var);
    }
    (means, vars)
}

/// Pure forward pass; never touches the running statistics.
pub fn batch_norm_forward<S: Scalar>(
    x: &Tensor2<S>,
    state: &BatchNormState<S>,
    stats: BnStats,
) -> Result<(Tensor2<S>, BnCache<S>)> {
    check_features(x, state)?;
    let (mean, var) = match stats {
        BnStats::Batch => {
            if x.cols() < 2 {
                return Err(Error::SingleColumnBatch(x.cols()));
            }
            batch_stats(x)
        }
        BnStats::Running => (state.running_mean.clone(), state.running_var.clone()),
    };
    let inv_std: Vec<S> = var
        .iter()
        .map(|&v| S::one() / (v + state.epsilon).sqrt())
        .collect();
    let normalized = Tensor2::from_fn(x.rows(), x.cols(), |r, c| {
        (x.get(r, c) - mean[r]) * inv_std[r]
    });
    let out = Tensor2::from_fn(x.rows(), x.cols(), |r, c| {
        state.gamma[r] * normalized.get(r, c) + state.beta[r]
    });
    Ok((
        out,
        BnCache {
            normalized,
            inv_std,
            stats,
        },
    ))
}

/// running ← (1 − momentum)·running + momentum·batch
pub fn batch_norm_update_running<S: Scalar>(
    x: &Tensor2<S>,
    state: &mut BatchNormState<S>,
) -> Result<()> {
    check_features(x, state)?;
    if x.cols() < 2 {
        return Err(Error::SingleColumnBatch(x.cols()));
    }
    let (mean, var) = batch_stats(x);
    let m = state.momentum;
    for r in 0..state.features() {
        state.running_mean[r] = (S::one() - m) * state.running_mean[r] + m * mean[r];
        state.running_var[r] = (S::one() - m) * state.running_var[r] + m * var[r];
    }
    Ok(())
}

/// The user-facing op: train mode normalizes with batch statistics and folds
/// them into the running estimates, infer mode applies the running estimates.
pub fn batch_norm<S: Scalar>(
    x: &Tensor2<S>,
    state: &mut BatchNormState<S>,
    mode: BnMode,
) -> Result<Tensor2<S>> {
    match mode {
        BnMode::Train => {
            let (out, _) = batch_norm_forward(x, state, BnStats::Batch)?;
            batch_norm_update_running(x, state)?;
            Ok(out)
        }
        BnMode::Infer => batch_norm_forward(x, state, BnStats::Running).map(|(out, _)| out),
    }
}

pub struct BnGrads<S> {
    pub input: Tensor2<S>,
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
}

/// Gradient rule for batch norm. With batch statistics the columns couple:
/// dx = inv_std/m · (m·dx̂ − Σdx̂ − x̂·Σ(dx̂⊙x̂)) per feature. With running
/// statistics the map is a fixed per-feature affine, so dx = γ·inv_std·dy.
pub fn batch_norm_backward<S: Scalar>(
    cache: &BnCache<S>,
    state: &BatchNormState<S>,
    d_out: &Tensor2<S>,
) -> Result<BnGrads<S>> {
    let xhat = &cache.normalized;
    if d_out.rows() != xhat.rows() || d_out.cols() != xhat.cols() {
        return Err(Error::Shape {
            context: "batch norm backward",
            left: xhat.shape_string(),
            right: d_out.shape_string(),
        });
    }
    let rows = xhat.rows();
    let cols = xhat.cols();
    let mut d_gamma = vec![S::zero(); rows];
    let mut d_beta = vec![S::zero(); rows];
    for r in 0..rows {
        for c in 0..cols {
            d_gamma[r] += d_out.get(r, c) * xhat.get(r, c);
            d_beta[r] += d_out.get(r, c);
        }
    }
    let d_input = match cache.stats {
        BnStats::Batch => {
            let m = S::from_f64(cols as f64);
            let mut out = Tensor2::zeros(rows, cols);
            for r in 0..rows {
                // dx̂ row and its two reductions
                let g = state.gamma[r];
                let mut sum_dxhat = S::zero();
                let mut sum_dxhat_xhat = S::zero();
                for c in 0..cols {
                    let dxh = g * d_out.get(r, c);
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * xhat.get(r, c);
                }
                let scale = cache.inv_std[r] / m;
                for c in 0..cols {
                    let dxh = g * d_out.get(r, c);
                    let v = scale * (m * dxh - sum_dxhat - xhat.get(r, c) * sum_dxhat_xhat);
                    out.set(r, c, v);
                }
            }
            out
        }
        BnStats::Running => Tensor2::from_fn(rows, cols, |r, c| {
            state.gamma[r] * cache.inv_std[r] * d_out.get(r, c)
        }),
    };
    Ok(BnGrads {
        input: d_input,
        gamma: d_gamma,
        beta: d_beta,
    })
}
