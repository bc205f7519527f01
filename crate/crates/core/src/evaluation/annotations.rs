//! Relevant-region annotation files: JSON lines,
//! `{"qid": …, "boxes": [[x1,y1,x2,y2], …]}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vision::BoundingBox;

use super::weightmap::RegionAnnotation;

#[derive(Serialize, Deserialize)]
struct AnnotationJson {
    qid: String,
    boxes: Vec<[f64; 4]>,
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<RegionAnnotation>> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ann: AnnotationJson = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: pathstr.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if ann.boxes.is_empty() {
            return Err(Error::Parse {
                path: pathstr.clone(),
                line: i + 1,
                msg: format!("annotation {:?} has no boxes", ann.qid),
            });
        }
        let boxes = ann
            .boxes
            .iter()
            .map(|b| BoundingBox::new(b[0], b[1], b[2], b[3]))
            .collect::<Result<Vec<_>>>()?;
        out.push(RegionAnnotation {
            qid: ann.qid,
            boxes,
        });
    }
    Ok(out)
}

pub fn write_annotations(
    path: impl AsRef<Path>,
    annotations: &[RegionAnnotation],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for ann in annotations {
        let json = AnnotationJson {
            qid: ann.qid.clone(),
            boxes: ann.boxes.iter().map(|b| [b.x1, b.y1, b.x2, b.y2]).collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&json)?)?;
    }
    out.flush()?;
    Ok(())
}
