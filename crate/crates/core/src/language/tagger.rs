//! Heuristic tagger for raw (unparsed) question text.

use std::collections::HashSet;

use super::{AnnotatedToken, Dep, Pos};

/// Determiners seen in question text; nouns are caller-supplied since no
/// parser is available on this path.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub nouns: HashSet<String>,
    pub determiners: HashSet<String>,
}

pub const DEFAULT_DETERMINERS: [&str; 9] =
    ["a", "an", "the", "few", "some", "this", "that", "these", "those"];

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons {
            nouns: HashSet::new(),
            determiners: DEFAULT_DETERMINERS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Lexicons {
    pub fn with_nouns<I: IntoIterator<Item = String>>(nouns: I) -> Self {
        Lexicons {
            nouns: nouns.into_iter().collect(),
            ..Lexicons::default()
        }
    }
}

/// Lowercases and strips punctuation; empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Tags tokens from the lexicons alone. The last noun is taken as the
/// nominal subject.
pub fn fallback_tag(tokens: &[String], lexicons: &Lexicons) -> Vec<AnnotatedToken> {
    let last_noun = tokens
        .iter()
        .rposition(|t| lexicons.nouns.contains(t.as_str()));
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let pos = if lexicons.determiners.contains(t.as_str()) {
                Pos::Det
            } else if lexicons.nouns.contains(t.as_str()) {
                Pos::Noun
            } else {
                Pos::Other
            };
            let dep = if Some(i) == last_noun {
                Dep::Nsubj
            } else {
                Dep::Other
            };
            AnnotatedToken::new(t.clone(), pos, dep, i)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn determiner_lexicon_membership() {
        let tagged = fallback_tag(&words(&["the"]), &Lexicons::default());
        assert_eq!(tagged[0].pos, Pos::Det);
    }

    #[test]
    fn last_noun_becomes_subject() {
        let lex = Lexicons::with_nouns(words(&["color", "dog"]));
        let tagged = fallback_tag(&words(&["what", "color", "is", "the", "dog"]), &lex);
        assert_eq!(tagged[4].dep, Dep::Nsubj);
        assert_eq!(tagged[4].pos, Pos::Noun);
        assert_eq!(tagged[1].dep, Dep::Other);
        assert_eq!(tagged[1].pos, Pos::Noun);
    }

    #[test]
    fn empty_lexicons_tag_everything_other() {
        let lex = Lexicons {
            nouns: HashSet::new(),
            determiners: HashSet::new(),
        };
        let tagged = fallback_tag(&words(&["what", "is", "this"]), &lex);
        assert!(tagged.iter().all(|t| t.pos == Pos::Other && t.dep == Dep::Other));
    }

    #[test]
    fn tokenize_strips_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("What color is the Dog?"),
            words(&["what", "color", "is", "the", "dog"])
        );
    }
}
