//! Binary region-feature files.
//!
//! Little-endian layout: magic `RGNF`, u32 version, u32 feature_dim; then per
//! record a u32 image-id length and UTF-8 id, u32 region count R, R×4 f32 box
//! corners, and R×feature_dim f32 feature values, region-major. The
//! whole-image region is stored last in each record. Values are f32 on disk,
//! so scalars that came from a file round-trip bit-exactly.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::scalar::Scalar;

use super::boxes::BoundingBox;
use super::regions::RegionSet;

pub const FEATURE_MAGIC: [u8; 4] = *b"RGNF";
pub const FEATURE_VERSION: u32 = 1;

pub type FeatureMap<S> = HashMap<String, RegionSet<S>>;

struct Reader<R> {
    inner: R,
    path: String,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, buf: &mut [u8], what: &'static str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|_| Error::Truncated {
            path: self.path.clone(),
            what,
        })
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    fn f32(&mut self, what: &'static str) -> Result<f32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b, what)?;
        Ok(f32::from_le_bytes(b))
    }

    fn at_eof(&mut self) -> Result<Option<u8>> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b)? {
            0 => Ok(None),
            _ => Ok(Some(b[0])),
        }
    }
}

/// Loads every record. When `expected_dim` is given, the header must match.
pub fn load_features<S: Scalar>(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<(FeatureMap<S>, usize)> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let mut r = Reader {
        inner: BufReader::new(File::open(path)?),
        path: pathstr.clone(),
    };

    let mut magic = [0u8; 4];
    r.bytes(&mut magic, "magic")?;
    if magic != FEATURE_MAGIC {
        return Err(Error::BadMagic {
            path: pathstr,
            expected: FEATURE_MAGIC,
            found: magic,
        });
    }
    let version = r.u32("version")?;
    if version != FEATURE_VERSION {
        return Err(Error::UnsupportedVersion {
            path: pathstr,
            expected: FEATURE_VERSION,
            found: version,
        });
    }
    let dim = r.u32("feature dim")? as usize;
    if let Some(expected) = expected_dim {
        if dim != expected {
            return Err(Error::FeatureDimMismatch {
                expected,
                found: dim,
            });
        }
    }

    let mut map = FeatureMap::new();
    loop {
        // record boundary: either EOF or the first byte of the id length
        let first = match r.at_eof()? {
            None => break,
            Some(b) => b,
        };
        let mut rest = [0u8; 3];
        r.bytes(&mut rest, "image id length")?;
        let id_len = u32::from_le_bytes([first, rest[0], rest[1], rest[2]]) as usize;
        let mut id_bytes = vec![0u8; id_len];
        r.bytes(&mut id_bytes, "image id")?;
        let image_id = String::from_utf8(id_bytes).map_err(|e| Error::Parse {
            path: pathstr.clone(),
            line: map.len() + 1,
            msg: format!("image id not UTF-8: {}", e),
        })?;

        let region_count = r.u32("region count")? as usize;
        let mut boxes = Vec::with_capacity(region_count);
        for _ in 0..region_count {
            let coords = [
                r.f32("box coord")?,
                r.f32("box coord")?,
                r.f32("box coord")?,
                r.f32("box coord")?,
            ];
            boxes.push(BoundingBox::new(
                f64::from(coords[0]),
                f64::from(coords[1]),
                f64::from(coords[2]),
                f64::from(coords[3]),
            )?);
        }
        let mut features = Tensor2::zeros(dim, region_count);
        for region in 0..region_count {
            for d in 0..dim {
                let v = r.f32("feature value")?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("feature of image {:?}, region {}", image_id, region),
                    });
                }
                features.set(d, region, S::from_f64(f64::from(v)));
            }
        }
        let whole = region_count.checked_sub(1).ok_or_else(|| Error::Parse {
            path: pathstr.clone(),
            line: map.len() + 1,
            msg: format!("record {:?} has zero regions", image_id),
        })?;
        let set = RegionSet::new(image_id.clone(), boxes, features, whole)?;
        map.insert(image_id, set);
    }
    if map.is_empty() {
        return Err(Error::NoRecords(pathstr));
    }
    Ok((map, dim))
}

/// Writes records in the given order; bytes are deterministic.
pub fn write_features<'a, S: Scalar + 'a>(
    path: impl AsRef<Path>,
    feature_dim: usize,
    sets: impl IntoIterator<Item = &'a RegionSet<S>>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&FEATURE_MAGIC)?;
    out.write_all(&FEATURE_VERSION.to_le_bytes())?;
    out.write_all(&(feature_dim as u32).to_le_bytes())?;
    for set in sets {
        if set.feature_dim() != feature_dim {
            return Err(Error::FeatureDimMismatch {
                expected: feature_dim,
                found: set.feature_dim(),
            });
        }
        if set.whole_image_index != set.len() - 1 {
            return Err(Error::InvalidConfig(format!(
                "record {:?}: whole-image region must be last for serialization",
                set.image_id
            )));
        }
        out.write_all(&(set.image_id.len() as u32).to_le_bytes())?;
        out.write_all(set.image_id.as_bytes())?;
        out.write_all(&(set.len() as u32).to_le_bytes())?;
        for b in &set.boxes {
            for v in [b.x1, b.y1, b.x2, b.y2] {
                out.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        for region in 0..set.len() {
            for d in 0..feature_dim {
                out.write_all(&(set.features.get(d, region).as_f64() as f32).to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
