//! Word-vector table and its text file format.
//!
//! File layout: a header line `dim N count M`, then one entry per line,
//! `word v1 v2 … vN`, whitespace separated.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug)]
pub struct EmbeddingTable<S> {
    dim: usize,
    entries: HashMap<String, Vec<S>>,
    misses: AtomicU64,
}

impl<S: Scalar> EmbeddingTable<S> {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entries: HashMap::new(),
            misses: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<S>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape {
                context: "embedding insert",
                left: format!("table dim {}", self.dim),
                right: format!("vector length {}", vector.len()),
            });
        }
        self.entries.insert(word.into(), vector);
        Ok(())
    }

    /// Looks a word up; a missing word is recorded as a miss and the caller
    /// substitutes the zero vector.
    pub fn lookup(&self, word: &str) -> Option<&[S]> {
        match self.entries.get(word) {
            Some(v) => Some(v.as_slice()),
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    pub fn miss_count(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let pathstr = path.display().to_string();
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse {
                path: pathstr.clone(),
                line: 1,
                msg: "missing header".into(),
            })??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (dim, count) = match parts.as_slice() {
            ["dim", d, "count", c] => {
                let dim = d.parse::<usize>().map_err(|e| Error::Parse {
                    path: pathstr.clone(),
                    line: 1,
                    msg: format!("bad dim: {}", e),
                })?;
                let count = c.parse::<usize>().map_err(|e| Error::Parse {
                    path: pathstr.clone(),
                    line: 1,
                    msg: format!("bad count: {}", e),
                })?;
                (dim, count)
            }
            _ => {
                return Err(Error::Parse {
                    path: pathstr,
                    line: 1,
                    msg: format!("expected `dim N count M` header, got {:?}", header),
                })
            }
        };
        let mut table = EmbeddingTable::new(dim);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().ok_or_else(|| Error::Parse {
                path: pathstr.clone(),
                line: lineno,
                msg: "empty entry".into(),
            })?;
            let mut vec = Vec::with_capacity(dim);
            for f in fields {
                let v = f.parse::<f64>().map_err(|e| Error::Parse {
                    path: pathstr.clone(),
                    line: lineno,
                    msg: format!("bad float {:?}: {}", f, e),
                })?;
                vec.push(S::from_f64(v));
            }
            if vec.len() != dim {
                return Err(Error::Parse {
                    path: pathstr.clone(),
                    line: lineno,
                    msg: format!("expected {} values, got {}", dim, vec.len()),
                });
            }
            table.entries.insert(word.to_string(), vec);
        }
        if table.len() != count {
            return Err(Error::Parse {
                path: pathstr,
                line: 1,
                msg: format!("header count {} but {} entries", count, table.len()),
            });
        }
        Ok(table)
    }

    /// Writes entries sorted by word so output bytes are deterministic.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "dim {} count {}", self.dim, self.entries.len())?;
        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        for word in words {
            write!(out, "{}", word)?;
            for v in &self.entries[word] {
                write!(out, " {}", v.as_f64())?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}
