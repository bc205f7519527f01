//! Forward and gradient passes for the scorer and its baseline variants.
//!
//! Shapes follow the column convention: data matrices hold one column per
//! pair (or per region), features along rows. A training batch runs every
//! question/answer pair through the language stack jointly, so batch-norm
//! statistics are computed over the whole minibatch of pairs; the region
//! attention and fusion are per pair.

use crate::error::{Error, Result};
use crate::language::LanguageEncoding;
use crate::numerics::layers::{
    affine, affine_backward, batch_norm_backward, batch_norm_forward, batch_norm_update_running,
    relu, relu_backward, softmax, softmax_backward, BnCache, BnStats,
};
use crate::numerics::tensor::{axpy, Tensor2};
use crate::scalar::Scalar;
use crate::vision::RegionSet;

use super::config::Variant;
use super::params::{BlockGrads, DenseBlock, ModelGrads, ModelParameters};

/// Per-region softmax weights for one question/answer pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap<S> {
    pub weights: Vec<S>,
}

impl<S: Scalar> AttentionMap<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("attention map"));
        }
        let sum: S = weights.iter().copied().sum();
        let tol = S::from_f64(1e-9);
        if weights.iter().any(|&w| w < S::zero()) || (sum - S::one()).abs() > tol {
            return Err(Error::NonFinite {
                context: format!("attention map (sum {})", sum),
            });
        }
        Ok(AttentionMap { weights })
    }

    pub fn uniform(regions: usize) -> Result<Self> {
        if regions == 0 {
            return Err(Error::Empty("attention map"));
        }
        let w = S::one() / S::from_f64(regions as f64);
        Ok(AttentionMap {
            weights: vec![w; regions],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// A minibatch of question/answer pairs: one encoding column and one region
/// set per pair. The language-only variant ignores the regions.
pub struct PairBatch<'a, S> {
    pub encodings: Tensor2<S>,
    pub regions: Vec<&'a RegionSet<S>>,
}

impl<'a, S: Scalar> PairBatch<'a, S> {
    pub fn new(
        encodings: &[&LanguageEncoding<S>],
        regions: Vec<&'a RegionSet<S>>,
    ) -> Result<Self> {
        if encodings.is_empty() {
            return Err(Error::Empty("pair batch"));
        }
        if encodings.len() != regions.len() {
            return Err(Error::Shape {
                context: "pair batch",
                left: format!("{} encodings", encodings.len()),
                right: format!("{} region sets", regions.len()),
            });
        }
        let dim = encodings[0].dim();
        let mut mat = Tensor2::zeros(dim, encodings.len());
        for (j, enc) in encodings.iter().enumerate() {
            if enc.dim() != dim {
                return Err(Error::Shape {
                    context: "pair batch",
                    left: format!("encoding dim {}", dim),
                    right: format!("encoding dim {}", enc.dim()),
                });
            }
            mat.set_col(j, &enc.flat);
        }
        Ok(PairBatch {
            encodings: mat,
            regions,
        })
    }

    pub fn len(&self) -> usize {
        self.encodings.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct BlockCache<S> {
    input: Tensor2<S>,
    /// Affine output = batch-norm input; kept for running-stat updates.
    pre_norm: Tensor2<S>,
    bn: BnCache<S>,
    /// Batch-norm output = ReLU pre-activation.
    bn_out: Tensor2<S>,
}

fn block_forward<S: Scalar>(
    block: &DenseBlock<S>,
    input: &Tensor2<S>,
    stats: BnStats,
) -> Result<(Tensor2<S>, BlockCache<S>)> {
    let pre_norm = block.weight.matmul(input)?;
    let (bn_out, bn) = batch_norm_forward(&pre_norm, &block.norm, stats)?;
    let out = relu(&bn_out);
    Ok((
        out,
        BlockCache {
            input: input.clone(),
            pre_norm,
            bn,
            bn_out,
        },
    ))
}

fn block_backward<S: Scalar>(
    block: &DenseBlock<S>,
    cache: &BlockCache<S>,
    d_out: &Tensor2<S>,
) -> Result<(BlockGrads<S>, Tensor2<S>)> {
    let d_bn_out = relu_backward(&cache.bn_out, d_out);
    let bn = batch_norm_backward(&cache.bn, &block.norm, &d_bn_out)?;
    let d_weight = bn.input.matmul_nt(&cache.input)?;
    let d_input = block.weight.matmul_tn(&bn.input)?;
    Ok((
        BlockGrads {
            weight: d_weight,
            gamma: bn.gamma,
            beta: bn.beta,
        },
        d_input,
    ))
}

struct PairCache<S> {
    /// Region columns this variant fuses over (all of them, or just the
    /// whole-image region for the whole-image baseline).
    active: Vec<usize>,
    attention: Vec<S>,
    fuse_in: Tensor2<S>,
    projected: Tensor2<S>,
    /// Region-side shared-space embedding (attention variant only).
    embedded_regions: Option<Tensor2<S>>,
    /// Language-side shared-space embedding (attention variant only).
    query: Option<Vec<S>>,
}

pub struct BatchForward<S> {
    pub scores: Vec<S>,
    pub attention: Vec<Option<AttentionMap<S>>>,
    stats: BnStats,
    lang: Vec<BlockCache<S>>,
    xl: Tensor2<S>,
    pairs: Vec<PairCache<S>>,
    fused_pre: Option<Tensor2<S>>,
    fused_relu: Option<Tensor2<S>>,
    fuse_bn: Option<BnCache<S>>,
    head: Vec<BlockCache<S>>,
    head_pre_out: Tensor2<S>,
}

impl<S: Scalar> BatchForward<S> {
    /// The language features produced for pair `j` (output of the stack).
    pub fn language_features(&self, j: usize) -> Vec<S> {
        self.xl.col_copy(j)
    }
}

impl<S: Scalar> ModelParameters<S> {
    fn attention_weights(&self, regions: &RegionSet<S>, xl: &[S]) -> Result<(Vec<S>, Tensor2<S>, Vec<S>)> {
        let rp = self.region_proj.as_ref().ok_or(Error::VariantMismatch {
            expected: "region_sel",
            found: self.config.variant.name().to_string(),
        })?;
        let qp = self.query_proj.as_ref().unwrap();
        let embedded = rp.matmul(&regions.features)?;
        let mut query = qp.weight.matvec(xl)?;
        for (q, &b) in query.iter_mut().zip(&qp.bias) {
            *q += b;
        }
        let logits = embedded.tmatvec(&query)?;
        let weights = softmax(&logits)?;
        Ok((weights, embedded, query))
    }

    fn pair_forward(&self, regions: &RegionSet<S>, xl: &[S]) -> Result<(Vec<S>, PairCache<S>)> {
        if regions.feature_dim() != self.config.feature_dim {
            return Err(Error::FeatureDimMismatch {
                expected: self.config.feature_dim,
                found: regions.feature_dim(),
            });
        }
        let fuse = self.fuse.as_ref().expect("fusion parameters exist");
        let (active, attention, embedded_regions, query) = match self.config.variant {
            Variant::RegionSel => {
                let (weights, embedded, query) = self.attention_weights(regions, xl)?;
                let active: Vec<usize> = (0..regions.len()).collect();
                (active, weights, Some(embedded), Some(query))
            }
            Variant::UniformRegions => {
                let w = S::one() / S::from_f64(regions.len() as f64);
                ((0..regions.len()).collect(), vec![w; regions.len()], None, None)
            }
            Variant::WholeImage => (
                vec![regions.whole_image_index],
                vec![S::one()],
                None,
                None,
            ),
            Variant::LanguageOnly => unreachable!("language-only skips the region path"),
        };

        let feat_dim = regions.feature_dim();
        let lang_dim = xl.len();
        let mut fuse_in = Tensor2::zeros(feat_dim + lang_dim, active.len());
        for (col, &ri) in active.iter().enumerate() {
            for d in 0..feat_dim {
                fuse_in.set(d, col, regions.features.get(d, ri));
            }
            for d in 0..lang_dim {
                fuse_in.set(feat_dim + d, col, xl[d]);
            }
        }
        let projected = fuse.matmul(&fuse_in)?;
        let fused = projected.matvec(&attention)?;
        Ok((
            fused,
            PairCache {
                active,
                attention,
                fuse_in,
                projected,
                embedded_regions,
                query,
            },
        ))
    }

    /// Full forward pass over a minibatch of pairs. Pure: running statistics
    /// are read (when `stats` is `Running`) but never written.
    pub fn forward_batch(&self, batch: &PairBatch<S>, stats: BnStats) -> Result<BatchForward<S>> {
        let b = batch.len();
        if batch.encodings.rows() != self.config.encoding_dim() {
            return Err(Error::Shape {
                context: "language encoding",
                left: format!("model expects {}", self.config.encoding_dim()),
                right: format!("batch has {}", batch.encodings.rows()),
            });
        }

        let mut lang = Vec::with_capacity(self.lang_stack.len());
        let mut h = batch.encodings.clone();
        for block in &self.lang_stack {
            let (out, cache) = block_forward(block, &h, stats)?;
            lang.push(cache);
            h = out;
        }
        let xl = h;

        let (head_input, pairs, fused_pre, fused_relu, fuse_bn, attention) =
            if self.config.variant == Variant::LanguageOnly {
                (xl.clone(), Vec::new(), None, None, None, vec![None; b])
            } else {
                let mut pairs = Vec::with_capacity(b);
                let mut fused_pre = Tensor2::zeros(self.config.fused_dim, b);
                let mut attention = Vec::with_capacity(b);
                for (j, &rs) in batch.regions.iter().enumerate() {
                    let xl_j = xl.col_copy(j);
                    let (fused, cache) = self.pair_forward(rs, &xl_j)?;
                    fused_pre.set_col(j, &fused);
                    attention.push(match self.config.variant {
                        Variant::RegionSel | Variant::UniformRegions => {
                            Some(AttentionMap::new(cache.attention.clone())?)
                        }
                        _ => None,
                    });
                    pairs.push(cache);
                }
                let fused_relu = relu(&fused_pre);
                let norm = self.fuse_norm.as_ref().expect("fusion norm exists");
                let (head_input, bn) = batch_norm_forward(&fused_relu, norm, stats)?;
                (
                    head_input,
                    pairs,
                    Some(fused_pre),
                    Some(fused_relu),
                    Some(bn),
                    attention,
                )
            };

        let mut head = Vec::with_capacity(self.head_blocks.len());
        let mut h = head_input;
        for block in &self.head_blocks {
            let (out, cache) = block_forward(block, &h, stats)?;
            head.push(cache);
            h = out;
        }
        let head_pre_out = h;
        let score_mat = self.head_out.matmul(&head_pre_out)?;
        let scores = score_mat.row(0).to_vec();

        Ok(BatchForward {
            scores,
            attention,
            stats,
            lang,
            xl,
            pairs,
            fused_pre,
            fused_relu,
            fuse_bn,
            head,
            head_pre_out,
        })
    }

    /// Training-mode forward: batch statistics normalize, and the running
    /// estimates absorb them by momentum.
    pub fn forward_batch_update(&mut self, batch: &PairBatch<S>) -> Result<BatchForward<S>> {
        let fwd = self.forward_batch(batch, BnStats::Batch)?;
        for (block, cache) in self.lang_stack.iter_mut().zip(&fwd.lang) {
            batch_norm_update_running(&cache.pre_norm, &mut block.norm)?;
        }
        if let (Some(norm), Some(bn_in)) = (self.fuse_norm.as_mut(), fwd.fused_relu.as_ref()) {
            batch_norm_update_running(bn_in, norm)?;
        }
        for (block, cache) in self.head_blocks.iter_mut().zip(&fwd.head) {
            batch_norm_update_running(&cache.pre_norm, &mut block.norm)?;
        }
        Ok(fwd)
    }

    fn pair_backward(
        &self,
        regions: &RegionSet<S>,
        xl: &[S],
        cache: &PairCache<S>,
        d_fused: &[S],
        grads: &mut ModelGrads<S>,
    ) -> Result<Vec<S>> {
        let fuse = self.fuse.as_ref().expect("fusion parameters exist");
        // fused = projected · attention
        let d_projected = Tensor2::outer(d_fused, &cache.attention);
        let d_attention = cache.projected.tmatvec(d_fused)?;

        let d_fuse_weight = d_projected.matmul_nt(&cache.fuse_in)?;
        let d_fuse_in = fuse.matmul_tn(&d_projected)?;
        let fg = grads.fuse.as_mut().expect("fusion grads exist");
        fg.add_assign(&d_fuse_weight)?;

        let feat_dim = regions.feature_dim();
        let lang_dim = xl.len();
        let mut d_xl = vec![S::zero(); lang_dim];
        for col in 0..cache.active.len() {
            for d in 0..lang_dim {
                d_xl[d] += d_fuse_in.get(feat_dim + d, col);
            }
        }

        if self.config.variant == Variant::RegionSel {
            let embedded = cache.embedded_regions.as_ref().unwrap();
            let query = cache.query.as_ref().unwrap();
            let d_logits = softmax_backward(&cache.attention, &d_attention);

            // logits = embeddedᵀ · query
            let d_embedded = Tensor2::outer(query, &d_logits);
            let d_query = embedded.matvec(&d_logits)?;

            let d_region_proj = d_embedded.matmul_nt(&regions.features)?;
            let rg = grads.region_proj.as_mut().unwrap();
            rg.add_assign(&d_region_proj)?;

            let qp = self.query_proj.as_ref().unwrap();
            let qg = grads.query_proj.as_mut().unwrap();
            qg.weight.add_assign(&Tensor2::outer(&d_query, xl))?;
            axpy(S::one(), &d_query, &mut qg.bias);

            let d_xl_attn = qp.weight.tmatvec(&d_query)?;
            axpy(S::one(), &d_xl_attn, &mut d_xl);
        }
        Ok(d_xl)
    }

    /// Reverse pass: accumulates dL/dθ for every learnable tensor given
    /// dL/dscore per pair. Must be called with the forward's own batch.
    pub fn backward(
        &self,
        batch: &PairBatch<S>,
        fwd: &BatchForward<S>,
        d_scores: &[S],
    ) -> Result<ModelGrads<S>> {
        let b = fwd.scores.len();
        if d_scores.len() != b {
            return Err(Error::Shape {
                context: "score gradients",
                left: format!("{} pairs", b),
                right: format!("{} gradients", d_scores.len()),
            });
        }
        let mut grads = ModelGrads::zeros_like(self);

        let d_y = Tensor2::new(1, b, d_scores.to_vec())?;
        grads.head_out = d_y.matmul_nt(&fwd.head_pre_out)?;
        let mut d = self.head_out.matmul_tn(&d_y)?;

        for i in (0..self.head_blocks.len()).rev() {
            let (bg, d_in) = block_backward(&self.head_blocks[i], &fwd.head[i], &d)?;
            grads.head_blocks[i] = bg;
            d = d_in;
        }

        let d_xl = if self.config.variant == Variant::LanguageOnly {
            d
        } else {
            let norm = self.fuse_norm.as_ref().unwrap();
            let bn = batch_norm_backward(fwd.fuse_bn.as_ref().unwrap(), norm, &d)?;
            grads.fuse_gamma = Some(bn.gamma);
            grads.fuse_beta = Some(bn.beta);
            let d_fused_pre = relu_backward(fwd.fused_pre.as_ref().unwrap(), &bn.input);
            let mut d_xl = Tensor2::zeros(fwd.xl.rows(), b);
            for j in 0..b {
                let d_fused = d_fused_pre.col_copy(j);
                let xl_j = fwd.xl.col_copy(j);
                let dx =
                    self.pair_backward(batch.regions[j], &xl_j, &fwd.pairs[j], &d_fused, &mut grads)?;
                d_xl.set_col(j, &dx);
            }
            d_xl
        };

        let mut d = d_xl;
        for i in (0..self.lang_stack.len()).rev() {
            let (bg, d_in) = block_backward(&self.lang_stack[i], &fwd.lang[i], &d)?;
            grads.lang_stack[i] = bg;
            d = d_in;
        }
        Ok(grads)
    }

    /// Runs one encoding through the language stack (inference statistics).
    pub fn encode_language_features(&self, encoding: &LanguageEncoding<S>) -> Result<Vec<S>> {
        if encoding.dim() != self.config.encoding_dim() {
            return Err(Error::Shape {
                context: "language encoding",
                left: format!("model expects {}", self.config.encoding_dim()),
                right: format!("encoding has {}", encoding.dim()),
            });
        }
        let mut h = Tensor2::column(&encoding.flat);
        for block in &self.lang_stack {
            let (out, _) = block_forward(block, &h, BnStats::Running)?;
            h = out;
        }
        Ok(h.col_copy(0))
    }

    /// Softmax relevance weights over the region set for given language
    /// features. Attention variant only.
    pub fn region_relevance(&self, regions: &RegionSet<S>, xl: &[S]) -> Result<AttentionMap<S>> {
        if regions.is_empty() {
            return Err(Error::Empty("region set"));
        }
        let (weights, _, _) = self.attention_weights(regions, xl)?;
        AttentionMap::new(weights)
    }

    /// Attention-weighted fusion: every region's features are concatenated
    /// with the language features, projected, averaged under the given
    /// weights, then passed through ReLU and batch norm (inference
    /// statistics).
    pub fn fuse_regions(
        &self,
        regions: &RegionSet<S>,
        xl: &[S],
        attention: &AttentionMap<S>,
    ) -> Result<Vec<S>> {
        let fuse = self.fuse.as_ref().ok_or(Error::VariantMismatch {
            expected: "a region-fusing variant",
            found: self.config.variant.name().to_string(),
        })?;
        if attention.len() != regions.len() {
            return Err(Error::Shape {
                context: "fuse regions",
                left: format!("{} regions", regions.len()),
                right: format!("{} attention weights", attention.len()),
            });
        }
        let feat_dim = regions.feature_dim();
        let lang_dim = xl.len();
        let mut fuse_in = Tensor2::zeros(feat_dim + lang_dim, regions.len());
        for col in 0..regions.len() {
            for d in 0..feat_dim {
                fuse_in.set(d, col, regions.features.get(d, col));
            }
            for d in 0..lang_dim {
                fuse_in.set(feat_dim + d, col, xl[d]);
            }
        }
        let projected = fuse.matmul(&fuse_in)?;
        let fused = projected.matvec(&attention.weights)?;
        let activated = relu(&Tensor2::column(&fused));
        let norm = self.fuse_norm.as_ref().unwrap();
        let (out, _) = batch_norm_forward(&activated, norm, BnStats::Running)?;
        Ok(out.col_copy(0))
    }

    /// Scores one pair and returns the attention map, for explanation
    /// output. Attention variant only; inference statistics.
    pub fn score_pair(
        &self,
        regions: &RegionSet<S>,
        encoding: &LanguageEncoding<S>,
    ) -> Result<(S, AttentionMap<S>)> {
        if self.config.variant != Variant::RegionSel {
            return Err(Error::VariantMismatch {
                expected: "region_sel",
                found: self.config.variant.name().to_string(),
            });
        }
        let (score, map) = self.score(regions, encoding)?;
        Ok((score, map.expect("attention variant yields a map")))
    }

    /// Scores one pair under a baseline variant.
    pub fn score_pair_variant(
        &self,
        regions: &RegionSet<S>,
        encoding: &LanguageEncoding<S>,
    ) -> Result<S> {
        if self.config.variant == Variant::RegionSel {
            return Err(Error::VariantMismatch {
                expected: "a baseline variant",
                found: self.config.variant.name().to_string(),
            });
        }
        Ok(self.score(regions, encoding)?.0)
    }

    /// Variant-agnostic single-pair scoring (inference statistics).
    pub fn score(
        &self,
        regions: &RegionSet<S>,
        encoding: &LanguageEncoding<S>,
    ) -> Result<(S, Option<AttentionMap<S>>)> {
        let batch = PairBatch::new(&[encoding], vec![regions])?;
        let mut fwd = self.forward_batch(&batch, BnStats::Running)?;
        Ok((fwd.scores[0], fwd.attention.swap_remove(0)))
    }
}
