//! Model architecture configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::language::LanguageScheme;

/// Which scorer to build: the region-attention model or one of the three
/// ablation baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    RegionSel,
    LanguageOnly,
    WholeImage,
    UniformRegions,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::RegionSel,
        Variant::LanguageOnly,
        Variant::WholeImage,
        Variant::UniformRegions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::RegionSel => "region_sel",
            Variant::LanguageOnly => "language_only",
            Variant::WholeImage => "whole_image",
            Variant::UniformRegions => "uniform_regions",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "region_sel" => Ok(Variant::RegionSel),
            "language_only" => Ok(Variant::LanguageOnly),
            "whole_image" => Ok(Variant::WholeImage),
            "uniform_regions" => Ok(Variant::UniformRegions),
            other => Err(Error::InvalidConfig(format!("unknown variant {:?}", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub word_dim: usize,
    /// Output widths of the language stack's fully connected layers.
    pub lang_hidden_dims: Vec<usize>,
    /// Shared space the region and query projections map into.
    pub embed_dim: usize,
    /// Output width of the fusion projection.
    pub fused_dim: usize,
    /// Scoring head widths; the last must be 1.
    pub head_dims: Vec<usize>,
    pub feature_dim: usize,
    pub variant: Variant,
    pub language_scheme: LanguageScheme,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

impl ModelConfig {
    /// Full-scale profile: 300-d word vectors, 5096-d region features,
    /// language stack 2048/1500/1024, 900-d shared embedding, 2048-d fusion,
    /// 900→1 head.
    pub fn full_profile() -> Self {
        ModelConfig {
            word_dim: 300,
            lang_hidden_dims: vec![2048, 1500, 1024],
            embed_dim: 900,
            fused_dim: 2048,
            head_dims: vec![900, 1],
            feature_dim: 5096,
            variant: Variant::RegionSel,
            language_scheme: LanguageScheme::FiveBin,
            bn_epsilon: 1e-5,
            bn_momentum: 0.1,
        }
    }

    /// Small profile that runs the identical code path in test time.
    pub fn desk_profile() -> Self {
        ModelConfig {
            word_dim: 16,
            lang_hidden_dims: vec![64, 48, 32],
            embed_dim: 24,
            fused_dim: 48,
            head_dims: vec![24, 1],
            feature_dim: 32,
            variant: Variant::RegionSel,
            language_scheme: LanguageScheme::FiveBin,
            bn_epsilon: 1e-5,
            bn_momentum: 0.1,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_scheme(mut self, scheme: LanguageScheme) -> Self {
        self.language_scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("word_dim", self.word_dim),
            ("embed_dim", self.embed_dim),
            ("fused_dim", self.fused_dim),
            ("feature_dim", self.feature_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{} must be positive", name)));
            }
        }
        if self.lang_hidden_dims.is_empty() || self.lang_hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "lang_hidden_dims must be non-empty and positive".into(),
            ));
        }
        if self.head_dims.len() < 2 || self.head_dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "head_dims needs at least a hidden width and the scalar output".into(),
            ));
        }
        if *self.head_dims.last().unwrap() != 1 {
            return Err(Error::InvalidConfig(format!(
                "head must end in a scalar, head_dims end in {}",
                self.head_dims.last().unwrap()
            )));
        }
        if !(self.bn_epsilon > 0.0) {
            return Err(Error::InvalidConfig("bn_epsilon must be positive".into()));
        }
        if !(0.0 < self.bn_momentum && self.bn_momentum < 1.0) {
            return Err(Error::InvalidConfig("bn_momentum must be in (0,1)".into()));
        }
        Ok(())
    }

    /// Length of the flat language encoding this model consumes.
    pub fn encoding_dim(&self) -> usize {
        self.language_scheme.encoding_dim(self.word_dim)
    }

    pub fn lang_out_dim(&self) -> usize {
        *self.lang_hidden_dims.last().unwrap()
    }

    /// Width of the concatenated [region feature; language] fusion input.
    pub fn fuse_input_dim(&self) -> usize {
        self.feature_dim + self.lang_out_dim()
    }

    pub fn head_input_dim(&self) -> usize {
        match self.variant {
            Variant::LanguageOnly => self.lang_out_dim(),
            _ => self.fused_dim,
        }
    }

    /// True when the variant carries the fusion projection and its norm.
    pub fn has_fusion(&self) -> bool {
        self.variant != Variant::LanguageOnly
    }

    /// True when the variant carries the attention projections.
    pub fn has_attention(&self) -> bool {
        self.variant == Variant::RegionSel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        ModelConfig::full_profile().validate().unwrap();
        ModelConfig::desk_profile().validate().unwrap();
    }

    #[test]
    fn full_profile_encoding_is_1500_dims() {
        assert_eq!(ModelConfig::full_profile().encoding_dim(), 1500);
    }

    #[test]
    fn head_must_end_in_scalar() {
        let mut c = ModelConfig::desk_profile();
        c.head_dims = vec![24, 3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_parses_and_prints() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("region".parse::<Variant>().is_err());
    }
}
