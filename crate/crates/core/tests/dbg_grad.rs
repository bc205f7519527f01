use regionsel::language::{LanguageEncoding, LanguageScheme};
use regionsel::model::{ModelConfig, PairBatch, Variant};
use regionsel::numerics::gradcheck::ParamSet;
use regionsel::numerics::{BnStats, SeedRng, Tensor2};
use regionsel::vision::{BoundingBox, RegionSet};

type Params = regionsel::model::ModelParameters<f64>;

fn tiny_config() -> ModelConfig {
    ModelConfig {
        word_dim: 2,
        lang_hidden_dims: vec![4, 2],
        embed_dim: 2,
        fused_dim: 3,
        head_dims: vec![2, 1],
        feature_dim: 2,
        variant: Variant::UniformRegions,
        language_scheme: LanguageScheme::FiveBin,
        bn_epsilon: 1e-5,
        bn_momentum: 0.1,
    }
}

fn region_set(features: Vec<Vec<f64>>) -> RegionSet<f64> {
    let n = features.len();
    let dim = features[0].len();
    let mut boxes = Vec::new();
    for i in 0..n - 1 {
        boxes.push(BoundingBox::new(i as f64 * 2.0, 0.0, i as f64 * 2.0 + 1.0, 1.0).unwrap());
    }
    boxes.push(BoundingBox::new(0.0, 0.0, 64.0, 64.0).unwrap());
    let mut mat = Tensor2::zeros(dim, n);
    for (j, f) in features.iter().enumerate() {
        mat.set_col(j, f);
    }
    RegionSet::new("img".into(), boxes, mat, n - 1).unwrap()
}

#[test]
fn dbg_fuse_grad() {
    let mut rng = SeedRng::new(42);
    let config = tiny_config();
    let mut params = Params::init(config, &mut rng).unwrap();
    let rs1 = region_set(vec![vec![1.0, 0.2], vec![-0.5, 0.9], vec![0.7, 0.7]]);
    let rs2 = region_set(vec![vec![0.1, -0.8], vec![0.4, 0.3]]);
    let encs: Vec<LanguageEncoding<f64>> = (0..4)
        .map(|_| {
            let flat: Vec<f64> = (0..10).map(|_| rng.uniform(-1.0, 1.0)).collect();
            LanguageEncoding { scheme: LanguageScheme::FiveBin, bins: vec![], flat }
        })
        .collect();
    let enc_refs: Vec<&LanguageEncoding<f64>> = encs.iter().collect();
    let regions = vec![&rs1, &rs2, &rs1, &rs2];
    let weights: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();

    // move off the tiny-projection init so batch-norm statistics are O(1)
    for name in ["attn.region.weight", "attn.query.weight", "fuse.weight"] {
        if params.tensor_len(name) > 0 {
            for idx in 0..params.tensor_len(name) {
                let v = params.get(name, idx);
                params.set(name, idx, v * 100.0);
            }
        }
    }
    let batch = PairBatch::new(&enc_refs, regions.clone()).unwrap();
    let fwd = params.forward_batch(&batch, BnStats::Batch).unwrap();
    let grads = params.backward(&batch, &fwd, &weights).unwrap();

    let eval = |p: &Params| -> f64 {
        let batch = PairBatch::new(&enc_refs, regions.clone()).unwrap();
        let fwd = p.forward_batch(&batch, BnStats::Batch).unwrap();
        fwd.scores.iter().zip(&weights).map(|(s, w)| s * w).sum()
    };

    let eps = 1e-5;
    for name in ["fuse.weight", "fuse.bias", "head_out.weight", "fuse.gamma", "lang0.weight"] {
        for idx in 0..params.tensor_len(name).min(6) {
            let orig = params.get(name, idx);
            params.set(name, idx, orig + eps);
            let up = eval(&params);
            params.set(name, idx, orig - eps);
            let down = eval(&params);
            params.set(name, idx, orig);
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.lookup(name).unwrap()[idx];
            println!("{}[{}]: analytic {:+.6e} numeric {:+.6e}", name, idx, analytic, numeric);
        }
    }
}
