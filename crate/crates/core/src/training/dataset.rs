//! Multiple-choice dataset files and their encoded in-memory form.
//!
//! JSON lines, one question per line:
//! `{"qid": …, "image": …, "question_tokens": […], "choices":
//!   [{"answer_tokens": […], "fraction": 0.6}, …]}`.
//! Question tokens follow the annotated-question token schema; bare strings
//! fall back to the heuristic tagger.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::language::questions::resolve_tokens;
use crate::language::{
    encode_qa, AnnotatedToken, EmbeddingTable, LanguageEncoding, LanguageScheme, Lexicons,
    TokenSpec,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McChoice {
    pub answer_tokens: Vec<String>,
    pub fraction: f64,
}

/// One question as read from disk, before language encoding.
#[derive(Debug, Clone)]
pub struct RawExample {
    pub qid: String,
    pub image_id: String,
    pub question: Vec<AnnotatedToken>,
    pub choices: Vec<McChoice>,
}

#[derive(Serialize, Deserialize)]
struct ExampleJson {
    qid: String,
    image: String,
    question_tokens: Vec<TokenSpec>,
    choices: Vec<McChoice>,
}

/// One question with per-choice encodings, annotator fractions, and the
/// designated correct choice (argmax fraction, ties to the lowest index).
#[derive(Debug, Clone)]
pub struct McExample<S> {
    pub qid: String,
    pub image_id: String,
    pub question_surfaces: Vec<String>,
    pub encodings: Vec<LanguageEncoding<S>>,
    pub fractions: Vec<f64>,
    pub correct_index: usize,
}

impl<S> McExample<S> {
    pub fn choice_count(&self) -> usize {
        self.encodings.len()
    }
}

pub fn read_dataset(path: impl AsRef<Path>, lexicons: &Lexicons) -> Result<Vec<RawExample>> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: ExampleJson = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: pathstr.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if ex.choices.len() < 2 {
            return Err(Error::TooFewChoices {
                qid: ex.qid,
                got: ex.choices.len(),
            });
        }
        for c in &ex.choices {
            if !(0.0..=1.0).contains(&c.fraction) {
                return Err(Error::Parse {
                    path: pathstr.clone(),
                    line: i + 1,
                    msg: format!("annotator fraction {} outside [0,1]", c.fraction),
                });
            }
            if c.answer_tokens.is_empty() {
                return Err(Error::Parse {
                    path: pathstr.clone(),
                    line: i + 1,
                    msg: "choice with no answer tokens".into(),
                });
            }
        }
        out.push(RawExample {
            qid: ex.qid,
            image_id: ex.image,
            question: resolve_tokens(&ex.question_tokens, lexicons),
            choices: ex.choices,
        });
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, examples: &[RawExample]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for ex in examples {
        let json = ExampleJson {
            qid: ex.qid.clone(),
            image: ex.image_id.clone(),
            question_tokens: ex
                .question
                .iter()
                .map(|t| TokenSpec::Annotated {
                    surface: t.surface.clone(),
                    pos: t.pos,
                    dep: t.dep,
                })
                .collect(),
            choices: ex.choices.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&json)?)?;
    }
    out.flush()?;
    Ok(())
}

/// Encodes every choice of every example under the given scheme.
pub fn encode_examples<S: Scalar>(
    raw: &[RawExample],
    table: &EmbeddingTable<S>,
    scheme: LanguageScheme,
) -> Result<Vec<McExample<S>>> {
    raw.iter()
        .map(|ex| {
            let encodings = ex
                .choices
                .iter()
                .map(|c| encode_qa(&ex.question, &c.answer_tokens, table, scheme))
                .collect::<Result<Vec<_>>>()?;
            let fractions: Vec<f64> = ex.choices.iter().map(|c| c.fraction).collect();
            let mut correct_index = 0;
            for (i, &f) in fractions.iter().enumerate() {
                if f > fractions[correct_index] {
                    correct_index = i;
                }
            }
            Ok(McExample {
                qid: ex.qid.clone(),
                image_id: ex.image_id.clone(),
                question_surfaces: ex.question.iter().map(|t| t.surface.clone()).collect(),
                encodings,
                fractions,
                correct_index,
            })
        })
        .collect()
}
