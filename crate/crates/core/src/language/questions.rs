//! Annotated-question files: JSON lines, one object per question.
//!
//! Each line is `{"id": …, "tokens": [{"surface": …, "pos": …, "dep": …}, …]}`.
//! Tokens may also be plain strings (or the whole question a `"text"` field),
//! in which case the heuristic tagger fills in the annotations.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tagger::{fallback_tag, tokenize, Lexicons};
use super::{AnnotatedToken, Dep, Pos};
use crate::error::{Error, Result};

/// One token as it appears on the wire: annotated, or a bare word that
/// needs the fallback tagger.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TokenSpec {
    Annotated {
        surface: String,
        pos: Pos,
        dep: Dep,
    },
    Word(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedQuestion {
    pub id: String,
    pub tokens: Vec<AnnotatedToken>,
}

#[derive(Serialize, Deserialize)]
struct QuestionJson {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<TokenSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

/// Builds annotated tokens from wire tokens. If any token lacks annotations
/// the whole question goes through the fallback tagger.
pub fn resolve_tokens(specs: &[TokenSpec], lexicons: &Lexicons) -> Vec<AnnotatedToken> {
    let all_annotated = specs
        .iter()
        .all(|t| matches!(t, TokenSpec::Annotated { .. }));
    if all_annotated {
        specs
            .iter()
            .enumerate()
            .map(|(i, t)| match t {
                TokenSpec::Annotated { surface, pos, dep } => {
                    AnnotatedToken::new(surface.clone(), *pos, *dep, i)
                }
                TokenSpec::Word(_) => unreachable!(),
            })
            .collect()
    } else {
        let words: Vec<String> = specs
            .iter()
            .map(|t| match t {
                TokenSpec::Annotated { surface, .. } => surface.clone(),
                TokenSpec::Word(w) => w.clone(),
            })
            .collect();
        fallback_tag(&words, lexicons)
    }
}

pub fn read_questions(
    path: impl AsRef<Path>,
    lexicons: &Lexicons,
) -> Result<Vec<AnnotatedQuestion>> {
    let path = path.as_ref();
    let pathstr = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QuestionJson = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: pathstr.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        let tokens = match (&q.tokens, &q.text) {
            (Some(specs), _) => resolve_tokens(specs, lexicons),
            (None, Some(text)) => fallback_tag(&tokenize(text), lexicons),
            (None, None) => {
                return Err(Error::Parse {
                    path: pathstr.clone(),
                    line: i + 1,
                    msg: "question needs `tokens` or `text`".into(),
                })
            }
        };
        out.push(AnnotatedQuestion { id: q.id, tokens });
    }
    Ok(out)
}

pub fn write_questions(path: impl AsRef<Path>, questions: &[AnnotatedQuestion]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for q in questions {
        let json = QuestionJson {
            id: q.id.clone(),
            tokens: Some(
                q.tokens
                    .iter()
                    .map(|t| TokenSpec::Annotated {
                        surface: t.surface.clone(),
                        pos: t.pos,
                        dep: t.dep,
                    })
                    .collect(),
            ),
            text: None,
        };
        writeln!(out, "{}", serde_json::to_string(&json)?)?;
    }
    out.flush()?;
    Ok(())
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            path: String::new(),
            line: 0,
            msg: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotated_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        let qs = vec![AnnotatedQuestion {
            id: "q0".into(),
            tokens: vec![
                AnnotatedToken::new("what", Pos::Other, Dep::Other, 0),
                AnnotatedToken::new("color", Pos::Noun, Dep::Nsubj, 1),
            ],
        }];
        write_questions(&path, &qs).unwrap();
        let back = read_questions(&path, &Lexicons::default()).unwrap();
        assert_eq!(back, qs);
    }

    #[test]
    fn raw_text_goes_through_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        std::fs::write(&path, "{\"id\":\"q1\",\"text\":\"Is the dog real?\"}\n").unwrap();
        let lex = Lexicons::with_nouns(vec!["dog".to_string()]);
        let back = read_questions(&path, &lex).unwrap();
        assert_eq!(back[0].tokens.len(), 4);
        assert_eq!(back[0].tokens[1].pos, Pos::Det);
        assert_eq!(back[0].tokens[2].dep, Dep::Nsubj);
    }

    #[test]
    fn word_list_goes_through_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        std::fs::write(&path, "{\"id\":\"q2\",\"tokens\":[\"what\",\"is\",\"this\"]}\n").unwrap();
        let back = read_questions(&path, &Lexicons::default()).unwrap();
        assert_eq!(back[0].tokens[0].surface, "what");
        assert_eq!(back[0].tokens[2].pos, Pos::Det);
    }

    #[test]
    fn bad_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        std::fs::write(&path, "{\"id\":\"q0\",\"tokens\":[]}\nnot json\n").unwrap();
        let err = read_questions(&path, &Lexicons::default()).unwrap_err();
        assert!(err.to_string().contains(":2:"), "got {}", err);
    }
}
