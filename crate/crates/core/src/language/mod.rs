//! Binned word-vector encoding of a question/answer pair.
//!
//! A parsed question is split into four bins: the first two words (question
//! type), the nominal subject, the other nouns, and the remaining words with
//! determiners dropped. Each bin is the mean of its members' word vectors, an
//! empty bin is the zero vector, and the candidate answer contributes a fifth
//! bin. The flat concatenation feeds the language stack. A two-bin scheme
//! (question mean + answer mean) is kept for the ablation baseline.

pub mod embeddings;
pub mod questions;
pub mod tagger;

pub use embeddings::EmbeddingTable;
pub use questions::{read_questions, write_questions, AnnotatedQuestion, TokenSpec};
pub use tagger::{fallback_tag, tokenize, Lexicons};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Det,
    Other,
}

/// Dependency role; only the nominal subject matters for binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dep {
    Nsubj,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub pos: Pos,
    pub dep: Dep,
    pub position: usize,
}

impl AnnotatedToken {
    pub fn new(surface: impl Into<String>, pos: Pos, dep: Dep, position: usize) -> Self {
        AnnotatedToken {
            surface: surface.into(),
            pos,
            dep,
            position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageScheme {
    FiveBin,
    TwoBin,
}

impl LanguageScheme {
    pub fn bin_count(self) -> usize {
        match self {
            LanguageScheme::FiveBin => 5,
            LanguageScheme::TwoBin => 2,
        }
    }

    /// Length of the flat encoding for a given word-vector dimension.
    pub fn encoding_dim(self, word_dim: usize) -> usize {
        self.bin_count() * word_dim
    }
}

/// Question token indices per bin. A token lands in the first bin whose rule
/// matches, in order 1→2→3→4; determiners that reach bin 4's rule are
/// dropped instead.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenBins {
    pub question_type: Vec<usize>,
    pub subject: Vec<usize>,
    pub other_nouns: Vec<usize>,
    pub remaining: Vec<usize>,
    pub excluded_determiners: Vec<usize>,
}

/// Assigns question tokens to the four bins.
pub fn bin_tokens(question: &[AnnotatedToken]) -> TokenBins {
    let mut bins = TokenBins::default();
    for (i, tok) in question.iter().enumerate() {
        if tok.position <= 1 {
            bins.question_type.push(i);
        } else if tok.dep == Dep::Nsubj {
            bins.subject.push(i);
        } else if tok.pos == Pos::Noun {
            bins.other_nouns.push(i);
        } else if tok.pos != Pos::Det {
            bins.remaining.push(i);
        } else {
            bins.excluded_determiners.push(i);
        }
    }
    bins
}

/// Fixed-length concatenation of bin-averaged word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageEncoding<S> {
    pub scheme: LanguageScheme,
    pub bins: Vec<Vec<S>>,
    pub flat: Vec<S>,
}

impl<S: Scalar> LanguageEncoding<S> {
    fn from_bins(scheme: LanguageScheme, bins: Vec<Vec<S>>) -> Self {
        let flat = bins.iter().flatten().copied().collect();
        LanguageEncoding { scheme, bins, flat }
    }

    pub fn dim(&self) -> usize {
        self.flat.len()
    }
}

/// Mean of the members' embeddings; unknown words contribute zero vectors
/// (and count as misses on the table). An empty bin is exactly zero.
fn mean_embedding<'a, S: Scalar>(
    words: impl Iterator<Item = &'a str>,
    table: &EmbeddingTable<S>,
) -> Vec<S> {
    let mut acc = vec![S::zero(); table.dim()];
    let mut count = 0usize;
    for w in words {
        count += 1;
        if let Some(vec) = table.lookup(w) {
            for (a, &v) in acc.iter_mut().zip(vec) {
                *a += v;
            }
        }
    }
    if count > 0 {
        let n = S::from_f64(count as f64);
        for a in &mut acc {
            *a /= n;
        }
    }
    acc
}

/// Encodes one question/answer pair under the given scheme.
pub fn encode_qa<S: Scalar>(
    question: &[AnnotatedToken],
    answer: &[String],
    table: &EmbeddingTable<S>,
    scheme: LanguageScheme,
) -> Result<LanguageEncoding<S>> {
    if answer.is_empty() {
        return Err(Error::Empty("answer words"));
    }
    let answer_bin = mean_embedding(answer.iter().map(String::as_str), table);
    let bins = match scheme {
        LanguageScheme::FiveBin => {
            let assigned = bin_tokens(question);
            let surf = |ids: &[usize]| {
                mean_embedding(ids.iter().map(|&i| question[i].surface.as_str()), table)
            };
            vec![
                surf(&assigned.question_type),
                surf(&assigned.subject),
                surf(&assigned.other_nouns),
                surf(&assigned.remaining),
                answer_bin,
            ]
        }
        LanguageScheme::TwoBin => {
            let q = mean_embedding(question.iter().map(|t| t.surface.as_str()), table);
            vec![q, answer_bin]
        }
    };
    Ok(LanguageEncoding::from_bins(scheme, bins))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(surface: &str, pos: Pos, dep: Dep, position: usize) -> AnnotatedToken {
        AnnotatedToken::new(surface, pos, dep, position)
    }

    fn fire_hydrant_question() -> Vec<AnnotatedToken> {
        vec![
            tok("what", Pos::Other, Dep::Other, 0),
            tok("color", Pos::Noun, Dep::Other, 1),
            tok("is", Pos::Verb, Dep::Other, 2),
            tok("the", Pos::Det, Dep::Other, 3),
            tok("fire", Pos::Noun, Dep::Other, 4),
            tok("hydrant", Pos::Noun, Dep::Nsubj, 5),
        ]
    }

    fn surfaces(q: &[AnnotatedToken], ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| q[i].surface.clone()).collect()
    }

    #[test]
    fn bins_the_fire_hydrant_question() {
        let q = fire_hydrant_question();
        let bins = bin_tokens(&q);
        assert_eq!(surfaces(&q, &bins.question_type), ["what", "color"]);
        assert_eq!(surfaces(&q, &bins.subject), ["hydrant"]);
        assert_eq!(surfaces(&q, &bins.other_nouns), ["fire"]);
        assert_eq!(surfaces(&q, &bins.remaining), ["is"]);
        assert_eq!(surfaces(&q, &bins.excluded_determiners), ["the"]);
    }

    #[test]
    fn two_word_question_leaves_later_bins_empty() {
        let q = vec![
            tok("is", Pos::Verb, Dep::Other, 0),
            tok("there", Pos::Other, Dep::Other, 1),
        ];
        let bins = bin_tokens(&q);
        assert_eq!(bins.question_type, vec![0, 1]);
        assert!(bins.subject.is_empty());
        assert!(bins.other_nouns.is_empty());
        assert!(bins.remaining.is_empty());
    }

    #[test]
    fn single_token_question() {
        let q = vec![tok("why", Pos::Other, Dep::Other, 0)];
        let bins = bin_tokens(&q);
        assert_eq!(bins.question_type, vec![0]);
        assert!(bins.subject.is_empty());
    }

    fn tiny_table() -> EmbeddingTable<f64> {
        let mut t = EmbeddingTable::new(2);
        t.insert("what", vec![1.0, 0.0]).unwrap();
        t.insert("color", vec![0.0, 1.0]).unwrap();
        t.insert("red", vec![2.0, 2.0]).unwrap();
        t
    }

    #[test]
    fn encode_hand_mean() {
        let q = vec![
            tok("what", Pos::Other, Dep::Other, 0),
            tok("color", Pos::Noun, Dep::Other, 1),
        ];
        let table = tiny_table();
        let enc = encode_qa(&q, &["red".to_string()], &table, LanguageScheme::FiveBin).unwrap();
        assert_eq!(enc.bins[0], vec![0.5, 0.5]);
        assert_eq!(enc.bins[4], vec![2.0, 2.0]);
        assert_eq!(enc.flat.len(), 10);
    }

    #[test]
    fn unknown_question_words_yield_zero_bins() {
        let q = vec![
            tok("zork", Pos::Other, Dep::Other, 0),
            tok("blorp", Pos::Noun, Dep::Nsubj, 1),
        ];
        let table = tiny_table();
        let before = table.miss_count();
        let enc = encode_qa(&q, &["red".to_string()], &table, LanguageScheme::FiveBin).unwrap();
        assert!(enc.bins[0].iter().all(|&v| v == 0.0));
        assert_eq!(table.miss_count(), before + 2);
        assert_eq!(enc.flat.len(), 10);
    }

    #[test]
    fn five_bin_flat_length_is_five_times_dim() {
        let table = EmbeddingTable::<f64>::new(300);
        let q = fire_hydrant_question();
        let enc = encode_qa(&q, &["yellow".to_string()], &table, LanguageScheme::FiveBin).unwrap();
        assert_eq!(enc.flat.len(), 1500);
        let enc2 = encode_qa(&q, &["yellow".to_string()], &table, LanguageScheme::TwoBin).unwrap();
        assert_eq!(enc2.flat.len(), 600);
    }

    #[test]
    fn singleton_bin_equals_the_embedding_exactly() {
        let table = tiny_table();
        let q = vec![
            tok("is", Pos::Verb, Dep::Other, 0),
            tok("it", Pos::Other, Dep::Other, 1),
            tok("color", Pos::Noun, Dep::Nsubj, 2),
        ];
        let enc = encode_qa(&q, &["red".to_string()], &table, LanguageScheme::FiveBin).unwrap();
        assert_eq!(enc.bins[1], vec![0.0, 1.0]);
    }

    #[test]
    fn encoding_ignores_order_within_a_bin() {
        let mut table = EmbeddingTable::new(2);
        table.insert("a1", vec![1.0, 0.0]).unwrap();
        table.insert("a2", vec![0.0, 3.0]).unwrap();
        let q1 = vec![
            tok("is", Pos::Other, Dep::Other, 0),
            tok("it", Pos::Other, Dep::Other, 1),
            tok("a1", Pos::Other, Dep::Other, 2),
            tok("a2", Pos::Other, Dep::Other, 3),
        ];
        let mut q2 = q1.clone();
        q2.swap(2, 3);
        q2[2].position = 2;
        q2[3].position = 3;
        let ans = vec!["a1".to_string()];
        let e1 = encode_qa(&q1, &ans, &table, LanguageScheme::FiveBin).unwrap();
        let e2 = encode_qa(&q2, &ans, &table, LanguageScheme::FiveBin).unwrap();
        assert_eq!(e1.flat, e2.flat);
    }

    #[test]
    fn empty_answer_is_rejected() {
        let table = tiny_table();
        let q = fire_hydrant_question();
        assert!(encode_qa(&q, &[], &table, LanguageScheme::FiveBin).is_err());
    }

    #[test]
    fn multi_word_answer_is_averaged() {
        let table = tiny_table();
        let q = vec![tok("is", Pos::Other, Dep::Other, 0)];
        let ans = vec!["what".to_string(), "color".to_string()];
        let enc = encode_qa(&q, &ans, &table, LanguageScheme::FiveBin).unwrap();
        assert_eq!(enc.bins[4], vec![0.5, 0.5]);
    }
}
