//! Model checkpoints.
//!
//! Little-endian layout: magic `FRNK`, u32 version, u32 JSON length and the
//! JSON metadata blob (model config plus the training config that produced
//! the weights), u32 tensor count, then per tensor a u32 name length, the
//! name, u32 rows, u32 cols, and rows×cols f64 values. Round-trips are
//! bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::training::TrainConfig;

use super::config::ModelConfig;
use super::params::ModelParameters;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"FRNK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    model: ModelConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<TrainConfig>,
}

pub fn save_checkpoint<S: Scalar>(
    path: impl AsRef<Path>,
    params: &ModelParameters<S>,
    train: Option<&TrainConfig>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let meta = CheckpointMeta {
        model: params.config.clone(),
        train: train.cloned(),
    };
    let json = serde_json::to_vec(&meta)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;

    let tensors = params.all_tensors();
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, rows, cols, data) in tensors {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(rows as u32).to_le_bytes())?;
        out.write_all(&(cols as u32).to_le_bytes())?;
        for v in data {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint<S: Scalar>(
    path: impl AsRef<Path>,
) -> Result<(ModelParameters<S>, Option<TrainConfig>)> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let mut r = BufReader::new(File::open(path)?);
    let mut read = |buf: &mut [u8], what: &'static str| -> Result<()> {
        r.read_exact(buf).map_err(|_| Error::Truncated {
            path: pathstr.clone(),
            what,
        })
    };

    let mut magic = [0u8; 4];
    read(&mut magic, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            path: pathstr,
            expected: CHECKPOINT_MAGIC,
            found: magic,
        });
    }
    let mut u32buf = [0u8; 4];
    read(&mut u32buf, "version")?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: pathstr,
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    read(&mut u32buf, "metadata length")?;
    let mut json = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    read(&mut json, "metadata")?;
    let meta: CheckpointMeta = serde_json::from_slice(&json).map_err(|e| Error::Parse {
        path: pathstr.clone(),
        line: 0,
        msg: format!("checkpoint metadata: {}", e),
    })?;

    let mut params = ModelParameters::<S>::zeroed(meta.model)?;
    read(&mut u32buf, "tensor count")?;
    let count = u32::from_le_bytes(u32buf) as usize;
    let expected = params.all_tensors().len();
    if count != expected {
        return Err(Error::Parse {
            path: pathstr,
            line: 0,
            msg: format!("checkpoint has {} tensors, model needs {}", count, expected),
        });
    }
    for _ in 0..count {
        read(&mut u32buf, "tensor name length")?;
        let mut name = vec![0u8; u32::from_le_bytes(u32buf) as usize];
        read(&mut name, "tensor name")?;
        let name = String::from_utf8(name).map_err(|e| Error::Parse {
            path: pathstr.clone(),
            line: 0,
            msg: format!("tensor name not UTF-8: {}", e),
        })?;
        read(&mut u32buf, "tensor rows")?;
        let rows = u32::from_le_bytes(u32buf) as usize;
        read(&mut u32buf, "tensor cols")?;
        let cols = u32::from_le_bytes(u32buf) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut f64buf = [0u8; 8];
        for _ in 0..rows * cols {
            read(&mut f64buf, "tensor data")?;
            data.push(S::from_f64(f64::from_le_bytes(f64buf)));
        }
        params.write_tensor(&name, &data)?;
    }
    Ok((params, meta.train))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Variant;
    use crate::numerics::SeedRng;

    #[test]
    fn round_trip_is_bit_exact_for_every_variant() {
        let dir = tempfile::tempdir().unwrap();
        for (i, variant) in Variant::ALL.into_iter().enumerate() {
            let config = ModelConfig::desk_profile().with_variant(variant);
            let mut rng = SeedRng::new(100 + i as u64);
            let mut params = ModelParameters::<f64>::init(config, &mut rng).unwrap();
            // dirty the running stats so they round-trip too
            params.lang_stack[0].norm.running_mean[0] = 0.731;
            params.head_blocks[0].norm.running_var[1] = 2.25;

            let path = dir.path().join(format!("m{}.ckpt", i));
            save_checkpoint(&path, &params, Some(&TrainConfig::default())).unwrap();
            let (back, train) = load_checkpoint::<f64>(&path).unwrap();
            assert_eq!(back, params);
            assert_eq!(train, Some(TrainConfig::default()));

            // bytes are reproducible
            let path2 = dir.path().join(format!("m{}b.ckpt", i));
            save_checkpoint(&path2, &back, train.as_ref()).unwrap();
            assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
        }
    }

    #[test]
    fn truncation_and_magic_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let params =
            ModelParameters::<f64>::init(ModelConfig::desk_profile(), &mut SeedRng::new(1))
                .unwrap();
        save_checkpoint(&path, &params, None).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            load_checkpoint::<f64>(&path),
            Err(Error::Truncated { .. })
        ));
        std::fs::write(&path, b"XXXXrest").unwrap();
        assert!(matches!(
            load_checkpoint::<f64>(&path),
            Err(Error::BadMagic { .. })
        ));
    }
}
