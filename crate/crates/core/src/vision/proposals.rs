//! Proposal files: JSON lines, one image per line, with candidate boxes and
//! their objectness scores.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::boxes::BoundingBox;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub id: String,
    pub w: f64,
    pub h: f64,
    pub boxes: Vec<[f64; 4]>,
    pub scores: Vec<f64>,
}

impl ProposalRecord {
    pub fn bounding_boxes(&self) -> Result<Vec<BoundingBox>> {
        self.boxes
            .iter()
            .map(|b| BoundingBox::new(b[0], b[1], b[2], b[3]))
            .collect()
    }
}

pub fn read_proposals(path: impl AsRef<Path>) -> Result<Vec<ProposalRecord>> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ProposalRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: pathstr.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if rec.boxes.len() != rec.scores.len() {
            return Err(Error::Parse {
                path: pathstr.clone(),
                line: i + 1,
                msg: format!(
                    "{} boxes but {} scores",
                    rec.boxes.len(),
                    rec.scores.len()
                ),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_proposals(path: impl AsRef<Path>, records: &[ProposalRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for rec in records {
        writeln!(out, "{}", serde_json::to_string(rec)?)?;
    }
    out.flush()?;
    Ok(())
}
