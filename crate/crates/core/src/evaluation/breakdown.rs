//! Per-question-type accuracy breakdown.
//!
//! A type rule matches on the question's leading tokens; each question is
//! assigned the first matching rule, and the final rule is always the
//! catch-all. The default ruleset is overridable from a text file: one rule
//! per line, `label<TAB>pattern`, pattern tokens separated by spaces with
//! `|` alternatives, `*` for the catch-all.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::training::McExample;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeRule {
    pub label: String,
    /// Per-position alternative sets over leading tokens; empty = catch-all.
    pub pattern: Vec<Vec<String>>,
}

impl TypeRule {
    fn matches(&self, surfaces: &[String]) -> bool {
        if self.pattern.len() > surfaces.len() {
            return false;
        }
        self.pattern
            .iter()
            .zip(surfaces)
            .all(|(alts, tok)| alts.iter().any(|a| a == tok))
    }
}

pub const CATCH_ALL_LABEL: &str = "none of the above";

fn rule(label: &str, pattern: &[&str]) -> TypeRule {
    TypeRule {
        label: label.to_string(),
        pattern: pattern
            .iter()
            .map(|p| p.split('|').map(str::to_string).collect())
            .collect(),
    }
}

pub fn default_type_rules() -> Vec<TypeRule> {
    vec![
        rule("what color", &["what", "color"]),
        rule("what time", &["what", "time"]),
        rule("what brand", &["what", "brand"]),
        rule("identify scene: what room/sport", &["what", "room|sport"]),
        rule("identify: what kind/type/animal", &["what", "kind|type|animal"]),
        rule("reading: what does/number/name", &["what", "does|number|name"]),
        rule("relational: what is the man/woman", &["what", "is", "the", "man|woman"]),
        rule("relational: what is in/on", &["what", "is", "in|on"]),
        rule("how many", &["how", "many"]),
        rule("is/are/was", &["is|are|was"]),
        rule("interpret: can/could/does/has", &["can|could|does|has"]),
        rule("why/how", &["why|how"]),
        rule("where", &["where"]),
        rule("which/who", &["which|who"]),
        rule(CATCH_ALL_LABEL, &[]),
    ]
}

/// Parses an override ruleset; appends the catch-all if the file lacks one.
pub fn parse_type_rules(text: &str) -> Result<Vec<TypeRule>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, pattern) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: "type rules".into(),
            line: i + 1,
            msg: "expected `label<TAB>pattern`".into(),
        })?;
        let pattern = pattern.trim();
        let pattern = if pattern == "*" {
            Vec::new()
        } else {
            pattern
                .split_whitespace()
                .map(|p| p.split('|').map(str::to_string).collect())
                .collect()
        };
        rules.push(TypeRule {
            label: label.trim().to_string(),
            pattern,
        });
    }
    if rules.is_empty() {
        return Err(Error::Parse {
            path: "type rules".into(),
            line: 0,
            msg: "no rules".into(),
        });
    }
    if !rules.last().unwrap().pattern.is_empty() {
        rules.push(TypeRule {
            label: CATCH_ALL_LABEL.into(),
            pattern: Vec::new(),
        });
    }
    Ok(rules)
}

pub fn assign_type<'a>(rules: &'a [TypeRule], surfaces: &[String]) -> &'a str {
    for r in rules {
        if r.matches(surfaces) {
            return &r.label;
        }
    }
    CATCH_ALL_LABEL
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeStats {
    pub label: String,
    pub total: usize,
    pub correct: usize,
}

impl TypeStats {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Counts per-type totals and correct predictions, in rule order. Types with
/// no questions are dropped, so frequencies sum to 100%.
pub fn question_type_breakdown<S: Scalar>(
    examples: &[&McExample<S>],
    predictions: &[usize],
    rules: &[TypeRule],
) -> Result<Vec<TypeStats>> {
    if examples.len() != predictions.len() {
        return Err(Error::Shape {
            context: "type breakdown",
            left: format!("{} examples", examples.len()),
            right: format!("{} predictions", predictions.len()),
        });
    }
    let mut stats: Vec<TypeStats> = rules
        .iter()
        .map(|r| TypeStats {
            label: r.label.clone(),
            total: 0,
            correct: 0,
        })
        .collect();
    for (ex, &pred) in examples.iter().zip(predictions) {
        let label = assign_type(rules, &ex.question_surfaces);
        let entry = stats
            .iter_mut()
            .find(|s| s.label == label)
            .expect("assigned label exists in rules");
        entry.total += 1;
        if ex.fractions.get(pred).copied().unwrap_or(0.0) >= super::CONSENSUS_THRESHOLD {
            entry.correct += 1;
        }
    }
    Ok(stats.into_iter().filter(|s| s.total > 0).collect())
}

/// Tab-separated report: one row per type plus the overall row, one accuracy
/// column per evaluated variant, frequency last.
pub fn write_breakdown_tsv(
    path: impl AsRef<Path>,
    columns: &[(String, Vec<TypeStats>)],
    total_questions: usize,
) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::Empty("breakdown columns"));
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "type")?;
    for (name, _) in columns {
        write!(out, "\t{}", name)?;
    }
    writeln!(out, "\tfreq")?;

    // overall row
    write!(out, "overall")?;
    for (_, stats) in columns {
        let correct: usize = stats.iter().map(|s| s.correct).sum();
        let total: usize = stats.iter().map(|s| s.total).sum();
        let acc = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        write!(out, "\t{:.2}", 100.0 * acc)?;
    }
    writeln!(out, "\t100.0%")?;

    // per-type rows follow the first column's order
    for s in &columns[0].1 {
        write!(out, "{}", s.label)?;
        for (_, stats) in columns {
            match stats.iter().find(|t| t.label == s.label) {
                Some(t) => write!(out, "\t{:.2}", 100.0 * t.accuracy())?,
                None => write!(out, "\t-")?,
            }
        }
        writeln!(out, "\t{:.1}%", 100.0 * s.total as f64 / total_questions as f64)?;
    }
    out.flush()?;
    Ok(())
}
