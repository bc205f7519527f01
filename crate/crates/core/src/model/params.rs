//! Model parameters, their initialization, and named access to every tensor.
//!
//! Layers followed by batch norm carry no affine bias: the batch-mean
//! subtraction cancels any per-feature shift exactly, so such a bias would
//! never receive gradient (the norm's beta plays that role). The same holds
//! for a region-projection bias (a constant shift across softmax logits) and
//! a final score bias (the margin objective only sees score differences), so
//! neither exists here. Biases remain where they are live: the query
//! projection and the fusion projection.

use crate::error::{Error, Result};
use crate::numerics::gradcheck::ParamSet;
use crate::numerics::{init_params, BatchNormState, InitScheme, SeedRng, Tensor2};
use crate::scalar::Scalar;

use super::config::{ModelConfig, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear<S> {
    pub weight: Tensor2<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> Linear<S> {
    fn init(out_dim: usize, in_dim: usize, scheme: InitScheme, rng: &mut SeedRng) -> Result<Self> {
        Ok(Linear {
            weight: init_params(out_dim, in_dim, scheme, rng)?,
            bias: vec![S::zero(); out_dim],
        })
    }

    fn zeroed(out_dim: usize, in_dim: usize) -> Self {
        Linear {
            weight: Tensor2::zeros(out_dim, in_dim),
            bias: vec![S::zero(); out_dim],
        }
    }
}

/// Fully connected layer (no bias) followed by batch norm; the forward pass
/// applies ReLU after the norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock<S> {
    pub weight: Tensor2<S>,
    pub norm: BatchNormState<S>,
}

impl<S: Scalar> DenseBlock<S> {
    fn init(out_dim: usize, in_dim: usize, config: &ModelConfig, rng: &mut SeedRng) -> Result<Self> {
        Ok(DenseBlock {
            weight: init_params(out_dim, in_dim, InitScheme::Xavier, rng)?,
            norm: BatchNormState::new(out_dim, config.bn_epsilon, config.bn_momentum),
        })
    }

    fn zeroed(out_dim: usize, in_dim: usize, config: &ModelConfig) -> Self {
        DenseBlock {
            weight: Tensor2::zeros(out_dim, in_dim),
            norm: BatchNormState::new(out_dim, config.bn_epsilon, config.bn_momentum),
        }
    }
}

/// Every projection matrix, bias, and batch-norm state of one scorer.
/// Which optional parts exist is decided by the variant: the attention
/// projections only for `RegionSel`, the fusion projection for everything
/// except `LanguageOnly`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<S> {
    pub config: ModelConfig,
    pub lang_stack: Vec<DenseBlock<S>>,
    /// Region-side embedding into the shared space.
    pub region_proj: Option<Tensor2<S>>,
    /// Language-side embedding into the shared space.
    pub query_proj: Option<Linear<S>>,
    /// Projection of the concatenated [region; language] features.
    pub fuse: Option<Tensor2<S>>,
    pub fuse_norm: Option<BatchNormState<S>>,
    pub head_blocks: Vec<DenseBlock<S>>,
    /// Final affine to the scalar score.
    pub head_out: Tensor2<S>,
}

impl<S: Scalar> ModelParameters<S> {
    /// Fresh parameters: Xavier everywhere except the three embedding
    /// projections, which start at 0.001·N(0,1).
    pub fn init(config: ModelConfig, rng: &mut SeedRng) -> Result<Self> {
        config.validate()?;
        let mut lang_stack = Vec::new();
        let mut in_dim = config.encoding_dim();
        for &out_dim in &config.lang_hidden_dims {
            lang_stack.push(DenseBlock::init(out_dim, in_dim, &config, rng)?);
            in_dim = out_dim;
        }

        let (region_proj, query_proj) = if config.has_attention() {
            (
                Some(init_params(
                    config.embed_dim,
                    config.feature_dim,
                    InitScheme::AttentionSmall,
                    rng,
                )?),
                Some(Linear::init(
                    config.embed_dim,
                    config.lang_out_dim(),
                    InitScheme::AttentionSmall,
                    rng,
                )?),
            )
        } else {
            (None, None)
        };

        let (fuse, fuse_norm) = if config.has_fusion() {
            (
                Some(init_params(
                    config.fused_dim,
                    config.fuse_input_dim(),
                    InitScheme::AttentionSmall,
                    rng,
                )?),
                Some(BatchNormState::new(
                    config.fused_dim,
                    config.bn_epsilon,
                    config.bn_momentum,
                )),
            )
        } else {
            (None, None)
        };

        let mut head_blocks = Vec::new();
        let mut in_dim = config.head_input_dim();
        for &out_dim in &config.head_dims[..config.head_dims.len() - 1] {
            head_blocks.push(DenseBlock::init(out_dim, in_dim, &config, rng)?);
            in_dim = out_dim;
        }
        let head_out = init_params(1, in_dim, InitScheme::Xavier, rng)?;

        Ok(ModelParameters {
            config,
            lang_stack,
            region_proj,
            query_proj,
            fuse,
            fuse_norm,
            head_blocks,
            head_out,
        })
    }

    /// All-zero weights with default norm state; checkpoint loading fills it.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut lang_stack = Vec::new();
        let mut in_dim = config.encoding_dim();
        for &out_dim in &config.lang_hidden_dims {
            lang_stack.push(DenseBlock::zeroed(out_dim, in_dim, &config));
            in_dim = out_dim;
        }
        let (region_proj, query_proj) = if config.has_attention() {
            (
                Some(Tensor2::zeros(config.embed_dim, config.feature_dim)),
                Some(Linear::zeroed(config.embed_dim, config.lang_out_dim())),
            )
        } else {
            (None, None)
        };
        let (fuse, fuse_norm) = if config.has_fusion() {
            (
                Some(Tensor2::zeros(config.fused_dim, config.fuse_input_dim())),
                Some(BatchNormState::new(
                    config.fused_dim,
                    config.bn_epsilon,
                    config.bn_momentum,
                )),
            )
        } else {
            (None, None)
        };
        let mut head_blocks = Vec::new();
        let mut in_dim = config.head_input_dim();
        for &out_dim in &config.head_dims[..config.head_dims.len() - 1] {
            head_blocks.push(DenseBlock::zeroed(out_dim, in_dim, &config));
            in_dim = out_dim;
        }
        let head_out = Tensor2::zeros(1, in_dim);
        Ok(ModelParameters {
            config,
            lang_stack,
            region_proj,
            query_proj,
            fuse,
            fuse_norm,
            head_blocks,
            head_out,
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    /// Learnable tensors as named flat slices, in a fixed order shared with
    /// `ModelGrads::flat`.
    pub fn learnable(&self) -> Vec<(String, &[S])> {
        let mut out: Vec<(String, &[S])> = Vec::new();
        for (i, block) in self.lang_stack.iter().enumerate() {
            out.push((format!("lang{}.weight", i), block.weight.as_slice()));
            out.push((format!("lang{}.gamma", i), &block.norm.gamma));
            out.push((format!("lang{}.beta", i), &block.norm.beta));
        }
        if let Some(p) = &self.region_proj {
            out.push(("attn.region.weight".into(), p.as_slice()));
        }
        if let Some(p) = &self.query_proj {
            out.push(("attn.query.weight".into(), p.weight.as_slice()));
            out.push(("attn.query.bias".into(), &p.bias));
        }
        if let Some(p) = &self.fuse {
            out.push(("fuse.weight".into(), p.as_slice()));
        }
        if let Some(n) = &self.fuse_norm {
            out.push(("fuse.gamma".into(), &n.gamma));
        }
        for (i, block) in self.head_blocks.iter().enumerate() {
            out.push((format!("head{}.weight", i), block.weight.as_slice()));
            out.push((format!("head{}.gamma", i), &block.norm.gamma));
            out.push((format!("head{}.beta", i), &block.norm.beta));
        }
        out.push(("head_out.weight".into(), self.head_out.as_slice()));
        out
    }

    pub fn learnable_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out: Vec<(String, &mut [S])> = Vec::new();
        for (i, block) in self.lang_stack.iter_mut().enumerate() {
            out.push((format!("lang{}.weight", i), block.weight.as_mut_slice()));
            out.push((format!("lang{}.gamma", i), &mut block.norm.gamma));
            out.push((format!("lang{}.beta", i), &mut block.norm.beta));
        }
        if let Some(p) = &mut self.region_proj {
            out.push(("attn.region.weight".into(), p.as_mut_slice()));
        }
        if let Some(p) = &mut self.query_proj {
            out.push(("attn.query.weight".into(), p.weight.as_mut_slice()));
            out.push(("attn.query.bias".into(), &mut p.bias));
        }
        if let Some(p) = &mut self.fuse {
            out.push(("fuse.weight".into(), p.as_mut_slice()));
        }
        if let Some(n) = &mut self.fuse_norm {
            out.push(("fuse.gamma".into(), &mut n.gamma));
        }
        for (i, block) in self.head_blocks.iter_mut().enumerate() {
            out.push((format!("head{}.weight", i), block.weight.as_mut_slice()));
            out.push((format!("head{}.gamma", i), &mut block.norm.gamma));
            out.push((format!("head{}.beta", i), &mut block.norm.beta));
        }
        out.push(("head_out.weight".into(), self.head_out.as_mut_slice()));
        out
    }

    /// Every tensor including running statistics, with 2-D shapes, for
    /// checkpoint serialization. Vectors report shape 1×n.
    pub fn all_tensors(&self) -> Vec<(String, usize, usize, Vec<S>)> {
        let mut out = Vec::new();
        for (name, slice) in self.learnable() {
            if name.ends_with(".weight") {
                let t = self.weight_ref(&name).expect("weight tensor exists");
                out.push((name, t.rows(), t.cols(), slice.to_vec()));
            } else {
                out.push((name, 1, slice.len(), slice.to_vec()));
            }
        }
        let mut push = |name: String, v: &[S]| {
            out.push((name, 1, v.len(), v.to_vec()));
        };
        for (i, block) in self.lang_stack.iter().enumerate() {
            push(format!("lang{}.running_mean", i), &block.norm.running_mean);
            push(format!("lang{}.running_var", i), &block.norm.running_var);
        }
        if let Some(n) = &self.fuse_norm {
            push("fuse.beta".into(), &n.beta);
            push("fuse.running_mean".into(), &n.running_mean);
            push("fuse.running_var".into(), &n.running_var);
        }
        for (i, block) in self.head_blocks.iter().enumerate() {
            push(format!("head{}.running_mean", i), &block.norm.running_mean);
            push(format!("head{}.running_var", i), &block.norm.running_var);
        }
        out
    }

    fn weight_ref(&self, name: &str) -> Option<&Tensor2<S>> {
        let strip = |prefix: &str| {
            name.strip_prefix(prefix)?
                .strip_suffix(".weight")?
                .parse::<usize>()
                .ok()
        };
        if let Some(i) = strip("lang") {
            return self.lang_stack.get(i).map(|b| &b.weight);
        }
        if let Some(i) = strip("head") {
            return self.head_blocks.get(i).map(|b| &b.weight);
        }
        match name {
            "attn.region.weight" => self.region_proj.as_ref(),
            "attn.query.weight" => self.query_proj.as_ref().map(|p| &p.weight),
            "fuse.weight" => self.fuse.as_ref(),
            "head_out.weight" => Some(&self.head_out),
            _ => None,
        }
    }

    /// Writes a named tensor (learnable or running statistic); used when
    /// loading checkpoints.
    pub fn write_tensor(&mut self, name: &str, data: &[S]) -> Result<()> {
        for (n, slice) in self.all_slices_mut() {
            if n == name {
                if slice.len() != data.len() {
                    return Err(Error::Shape {
                        context: "checkpoint tensor",
                        left: format!("{} has {} values", name, slice.len()),
                        right: format!("file has {}", data.len()),
                    });
                }
                slice.copy_from_slice(data);
                return Ok(());
            }
        }
        Err(Error::InvalidConfig(format!(
            "checkpoint tensor {:?} does not exist in this model",
            name
        )))
    }

    fn all_slices_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out: Vec<(String, &mut [S])> = Vec::new();
        for (i, block) in self.lang_stack.iter_mut().enumerate() {
            out.push((format!("lang{}.weight", i), block.weight.as_mut_slice()));
            out.push((format!("lang{}.gamma", i), block.norm.gamma.as_mut_slice()));
            out.push((format!("lang{}.beta", i), block.norm.beta.as_mut_slice()));
            out.push((
                format!("lang{}.running_mean", i),
                block.norm.running_mean.as_mut_slice(),
            ));
            out.push((
                format!("lang{}.running_var", i),
                block.norm.running_var.as_mut_slice(),
            ));
        }
        if let Some(p) = &mut self.region_proj {
            out.push(("attn.region.weight".into(), p.as_mut_slice()));
        }
        if let Some(p) = &mut self.query_proj {
            out.push(("attn.query.weight".into(), p.weight.as_mut_slice()));
            out.push(("attn.query.bias".into(), p.bias.as_mut_slice()));
        }
        if let Some(p) = &mut self.fuse {
            out.push(("fuse.weight".into(), p.as_mut_slice()));
        }
        if let Some(n) = &mut self.fuse_norm {
            out.push(("fuse.gamma".into(), n.gamma.as_mut_slice()));
            out.push(("fuse.beta".into(), n.beta.as_mut_slice()));
            out.push(("fuse.running_mean".into(), n.running_mean.as_mut_slice()));
            out.push(("fuse.running_var".into(), n.running_var.as_mut_slice()));
        }
        for (i, block) in self.head_blocks.iter_mut().enumerate() {
            out.push((format!("head{}.weight", i), block.weight.as_mut_slice()));
            out.push((format!("head{}.gamma", i), block.norm.gamma.as_mut_slice()));
            out.push((format!("head{}.beta", i), block.norm.beta.as_mut_slice()));
            out.push((
                format!("head{}.running_mean", i),
                block.norm.running_mean.as_mut_slice(),
            ));
            out.push((
                format!("head{}.running_var", i),
                block.norm.running_var.as_mut_slice(),
            ));
        }
        out.push(("head_out.weight".into(), self.head_out.as_mut_slice()));
        out
    }
}

impl<S: Scalar> ParamSet for ModelParameters<S> {
    type Scalar = S;

    fn tensor_names(&self) -> Vec<String> {
        self.learnable().into_iter().map(|(n, _)| n).collect()
    }

    fn tensor_len(&self, name: &str) -> usize {
        self.learnable()
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.len())
            .unwrap_or(0)
    }

    fn get(&self, name: &str, idx: usize) -> S {
        self.learnable()
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s[idx])
            .unwrap_or_else(|| panic!("unknown tensor {}", name))
    }

    fn set(&mut self, name: &str, idx: usize, v: S) {
        for (n, slice) in self.learnable_mut() {
            if n == name {
                slice[idx] = v;
                return;
            }
        }
        panic!("unknown tensor {}", name);
    }
}

/// Gradients for one linear layer.
#[derive(Debug, Clone)]
pub struct LinearGrads<S> {
    pub weight: Tensor2<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> LinearGrads<S> {
    fn zeros_like(p: &Linear<S>) -> Self {
        LinearGrads {
            weight: Tensor2::zeros(p.weight.rows(), p.weight.cols()),
            bias: vec![S::zero(); p.bias.len()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockGrads<S> {
    pub weight: Tensor2<S>,
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
}

impl<S: Scalar> BlockGrads<S> {
    fn zeros_like(b: &DenseBlock<S>) -> Self {
        BlockGrads {
            weight: Tensor2::zeros(b.weight.rows(), b.weight.cols()),
            gamma: vec![S::zero(); b.norm.gamma.len()],
            beta: vec![S::zero(); b.norm.beta.len()],
        }
    }
}

/// Loss gradients, mirroring the learnable parameters exactly.
#[derive(Debug, Clone)]
pub struct ModelGrads<S> {
    pub lang_stack: Vec<BlockGrads<S>>,
    pub region_proj: Option<Tensor2<S>>,
    pub query_proj: Option<LinearGrads<S>>,
    pub fuse: Option<Tensor2<S>>,
    pub fuse_gamma: Option<Vec<S>>,
    pub head_blocks: Vec<BlockGrads<S>>,
    pub head_out: Tensor2<S>,
}

impl<S: Scalar> ModelGrads<S> {
    pub fn zeros_like(params: &ModelParameters<S>) -> Self {
        ModelGrads {
            lang_stack: params.lang_stack.iter().map(BlockGrads::zeros_like).collect(),
            region_proj: params
                .region_proj
                .as_ref()
                .map(|p| Tensor2::zeros(p.rows(), p.cols())),
            query_proj: params.query_proj.as_ref().map(LinearGrads::zeros_like),
            fuse: params
                .fuse
                .as_ref()
                .map(|p| Tensor2::zeros(p.rows(), p.cols())),
            fuse_gamma: params.fuse_norm.as_ref().map(|n| vec![S::zero(); n.gamma.len()]),
            head_blocks: params.head_blocks.iter().map(BlockGrads::zeros_like).collect(),
            head_out: Tensor2::zeros(params.head_out.rows(), params.head_out.cols()),
        }
    }

    /// Same names and order as `ModelParameters::learnable`.
    pub fn flat(&self) -> Vec<(String, &[S])> {
        let mut out: Vec<(String, &[S])> = Vec::new();
        for (i, block) in self.lang_stack.iter().enumerate() {
            out.push((format!("lang{}.weight", i), block.weight.as_slice()));
            out.push((format!("lang{}.gamma", i), &block.gamma));
            out.push((format!("lang{}.beta", i), &block.beta));
        }
        if let Some(p) = &self.region_proj {
            out.push(("attn.region.weight".into(), p.as_slice()));
        }
        if let Some(p) = &self.query_proj {
            out.push(("attn.query.weight".into(), p.weight.as_slice()));
            out.push(("attn.query.bias".into(), &p.bias));
        }
        if let Some(p) = &self.fuse {
            out.push(("fuse.weight".into(), p.as_slice()));
        }
        if let Some(g) = &self.fuse_gamma {
            out.push(("fuse.gamma".into(), g));
        }
        for (i, block) in self.head_blocks.iter().enumerate() {
            out.push((format!("head{}.weight", i), block.weight.as_slice()));
            out.push((format!("head{}.gamma", i), &block.gamma));
            out.push((format!("head{}.beta", i), &block.beta));
        }
        out.push(("head_out.weight".into(), self.head_out.as_slice()));
        out
    }

    pub fn flat_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out: Vec<(String, &mut [S])> = Vec::new();
        for (i, block) in self.lang_stack.iter_mut().enumerate() {
            out.push((format!("lang{}.weight", i), block.weight.as_mut_slice()));
            out.push((format!("lang{}.gamma", i), &mut block.gamma));
            out.push((format!("lang{}.beta", i), &mut block.beta));
        }
        if let Some(p) = &mut self.region_proj {
            out.push(("attn.region.weight".into(), p.as_mut_slice()));
        }
        if let Some(p) = &mut self.query_proj {
            out.push(("attn.query.weight".into(), p.weight.as_mut_slice()));
            out.push(("attn.query.bias".into(), &mut p.bias));
        }
        if let Some(p) = &mut self.fuse {
            out.push(("fuse.weight".into(), p.as_mut_slice()));
        }
        if let Some(g) = &mut self.fuse_gamma {
            out.push(("fuse.gamma".into(), g));
        }
        for (i, block) in self.head_blocks.iter_mut().enumerate() {
            out.push((format!("head{}.weight", i), block.weight.as_mut_slice()));
            out.push((format!("head{}.gamma", i), &mut block.gamma));
            out.push((format!("head{}.beta", i), &mut block.beta));
        }
        out.push(("head_out.weight".into(), self.head_out.as_mut_slice()));
        out
    }

    pub fn lookup(&self, name: &str) -> Option<&[S]> {
        self.flat().into_iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::LanguageScheme;

    #[test]
    fn init_shapes_follow_config() {
        let config = ModelConfig::desk_profile();
        let p = ModelParameters::<f64>::init(config.clone(), &mut SeedRng::new(1)).unwrap();
        assert_eq!(p.lang_stack.len(), 3);
        assert_eq!(p.lang_stack[0].weight.rows(), 64);
        assert_eq!(p.lang_stack[0].weight.cols(), 5 * 16);
        let a = p.region_proj.as_ref().unwrap();
        assert_eq!((a.rows(), a.cols()), (24, 32));
        let w = p.fuse.as_ref().unwrap();
        assert_eq!((w.rows(), w.cols()), (48, 32 + 32));
        assert_eq!(p.head_blocks[0].weight.rows(), 24);
        assert_eq!(p.head_out.cols(), 24);
    }

    #[test]
    fn variant_decides_which_parameters_exist() {
        let mut rng = SeedRng::new(1);
        let lang = ModelParameters::<f64>::init(
            ModelConfig::desk_profile().with_variant(Variant::LanguageOnly),
            &mut rng,
        )
        .unwrap();
        assert!(lang.region_proj.is_none() && lang.fuse.is_none());
        assert_eq!(lang.head_blocks[0].weight.cols(), 32);

        let uni = ModelParameters::<f64>::init(
            ModelConfig::desk_profile().with_variant(Variant::UniformRegions),
            &mut rng,
        )
        .unwrap();
        assert!(uni.region_proj.is_none() && uni.fuse.is_some());
    }

    #[test]
    fn attention_projections_start_small() {
        let p =
            ModelParameters::<f64>::init(ModelConfig::desk_profile(), &mut SeedRng::new(3)).unwrap();
        let max = |t: &Tensor2<f64>| t.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max(p.region_proj.as_ref().unwrap()) < 0.01);
        assert!(max(&p.query_proj.as_ref().unwrap().weight) < 0.01);
        assert!(max(p.fuse.as_ref().unwrap()) < 0.01);
        // Xavier layers are wider
        assert!(max(&p.lang_stack[0].weight) > 0.01);
    }

    #[test]
    fn grads_mirror_learnable_names() {
        let p =
            ModelParameters::<f64>::init(ModelConfig::desk_profile(), &mut SeedRng::new(4)).unwrap();
        let g = ModelGrads::zeros_like(&p);
        let pn: Vec<String> = p.learnable().into_iter().map(|(n, _)| n).collect();
        let gn: Vec<String> = g.flat().into_iter().map(|(n, _)| n).collect();
        assert_eq!(pn, gn);
        for ((_, ps), (_, gs)) in p.learnable().iter().zip(g.flat().iter()) {
            assert_eq!(ps.len(), gs.len());
        }
    }

    #[test]
    fn two_bin_scheme_shrinks_the_input_layer() {
        let config = ModelConfig::desk_profile().with_scheme(LanguageScheme::TwoBin);
        let p = ModelParameters::<f64>::init(config, &mut SeedRng::new(5)).unwrap();
        assert_eq!(p.lang_stack[0].weight.cols(), 2 * 16);
    }
}
