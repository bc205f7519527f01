//! Mask export: 8-bit binary PGM (P5), value = round(255·weight).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::weightmap::PixelWeightMap;

pub fn export_mask(map: &PixelWeightMap, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", map.width, map.height)?;
    let bytes: Vec<u8> = map
        .weights
        .iter()
        .map(|&w| (255.0 * w.clamp(0.0, 1.0)).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

/// Re-parses an exported mask; weights come back quantized to 1/255 steps.
pub fn read_mask(path: impl AsRef<Path>) -> Result<PixelWeightMap> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let parse_err = |msg: &str| Error::Parse {
        path: pathstr.clone(),
        line: 0,
        msg: msg.to_string(),
    };

    // header: "P5\n{w} {h}\n255\n"
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| parse_err("bad header"))?);
    }
    if fields.len() < 4 || fields[0] != "P5" {
        return Err(parse_err("not a binary PGM"));
    }
    let width: usize = fields[1].parse().map_err(|_| parse_err("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| parse_err("bad height"))?;
    if fields[3] != "255" {
        return Err(parse_err("max value must be 255"));
    }
    pos += 1; // single whitespace after maxval
    let data = &bytes[pos..];
    if data.len() != width * height {
        return Err(Error::Truncated {
            path: pathstr,
            what: "pixel data",
        });
    }
    Ok(PixelWeightMap {
        width,
        height,
        weights: data.iter().map(|&b| f64::from(b) / 255.0).collect(),
    })
}
