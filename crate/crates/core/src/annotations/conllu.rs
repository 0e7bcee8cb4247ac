//! CoNLL-U dependency sentences.
//!
//! Only id, form, upos, head and deprel are kept. Multiword-token ranges
//! (`3-4`) and empty nodes (`5.1`) are skipped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ItemKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyToken {
    pub id: usize,
    pub form: String,
    pub upos: String,
    pub head: usize,
    pub deprel: String,
}

pub type DependencySentence = Vec<DependencyToken>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: non-numeric {column} `{value}`")]
    NonNumeric {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: token id {found} out of sequence, expected {expected}")]
    IdSequence {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: head {head} out of range for a {len}-token sentence")]
    HeadOutOfRange { line: usize, head: usize, len: usize },
    #[error("line {line}: token {id} is its own head")]
    SelfHead { line: usize, id: usize },
    #[error("sentence ending at line {line} has no root token")]
    NoRoot { line: usize },
    #[error("line {line}: head/deprel mismatch: head 0 must carry `root` and only head 0 may")]
    RootLabel { line: usize },
    #[error("sentence ending at line {line} has a head cycle through token {id}")]
    Cycle { line: usize, id: usize },
    #[error("line {line}: invalid item comment: {value}")]
    BadItem { line: usize, value: String },
    #[error("line {line}: sentence precedes any `# item = ...` comment")]
    UnkeyedSentence { line: usize },
}

fn parse_usize(line: usize, column: &'static str, value: &str) -> Result<usize, ConlluError> {
    value.parse().map_err(|_| ConlluError::NonNumeric {
        line,
        column,
        value: value.to_owned(),
    })
}

struct PendingSentence {
    tokens: Vec<(usize, DependencyToken)>,
}

impl PendingSentence {
    fn new() -> Self {
        Self { tokens: Vec::new() }
    }

    fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Validates heads, root labelling and acyclicity.
    fn finish(self, end_line: usize) -> Result<DependencySentence, ConlluError> {
        let len = self.tokens.len();
        let mut roots = 0;
        for (line, tok) in &self.tokens {
            if tok.head > len {
                return Err(ConlluError::HeadOutOfRange {
                    line: *line,
                    head: tok.head,
                    len,
                });
            }
            if tok.head == tok.id {
                return Err(ConlluError::SelfHead {
                    line: *line,
                    id: tok.id,
                });
            }
            if (tok.head == 0) != (tok.deprel == "root") {
                return Err(ConlluError::RootLabel { line: *line });
            }
            roots += usize::from(tok.head == 0);
        }
        if roots == 0 {
            return Err(ConlluError::NoRoot { line: end_line });
        }
        let tokens: Vec<DependencyToken> = self.tokens.into_iter().map(|(_, t)| t).collect();
        for start in &tokens {
            let mut cur = start.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > len {
                    return Err(ConlluError::Cycle {
                        line: end_line,
                        id: start.id,
                    });
                }
                cur = tokens[cur - 1].head;
            }
        }
        Ok(tokens)
    }
}

/// Streams sentences together with the last `# item = ...` comment seen.
fn parse_keyed(text: &str) -> Result<Vec<(Option<ItemKey>, DependencySentence)>, ConlluError> {
    let mut out = Vec::new();
    let mut current_key: Option<ItemKey> = None;
    let mut pending = PendingSentence::new();
    let mut sentence_key: Option<ItemKey> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !pending.is_empty() {
                let done = std::mem::replace(&mut pending, PendingSentence::new());
                out.push((sentence_key.take(), done.finish(line_no - 1)?));
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((name, value)) = comment.split_once('=') {
                if name.trim() == "item" {
                    let key = value.trim().parse::<ItemKey>().map_err(|_| ConlluError::BadItem {
                        line: line_no,
                        value: value.trim().to_owned(),
                    })?;
                    current_key = Some(key);
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::ColumnCount {
                line: line_no,
                found: cols.len(),
            });
        }
        let id_col = cols[0];
        if id_col.contains('-') || id_col.contains('.') {
            continue;
        }
        let id = parse_usize(line_no, "id", id_col)?;
        let head = parse_usize(line_no, "head", cols[6])?;
        if pending.is_empty() {
            sentence_key = current_key.clone();
        }
        let expected = pending.tokens.len() + 1;
        if id != expected {
            return Err(ConlluError::IdSequence {
                line: line_no,
                expected,
                found: id,
            });
        }
        pending.tokens.push((
            line_no,
            DependencyToken {
                id,
                form: cols[1].to_owned(),
                upos: cols[3].to_owned(),
                head,
                deprel: cols[7].to_owned(),
            },
        ));
    }
    if !pending.is_empty() {
        out.push((sentence_key, pending.finish(last_line)?));
    }
    Ok(out)
}

/// Parses every sentence in the text, in order.
pub fn parse_conllu(text: &str) -> Result<Vec<DependencySentence>, ConlluError> {
    Ok(parse_keyed(text)?.into_iter().map(|(_, s)| s).collect())
}

/// Parses a file whose sentences are grouped under `# item = <dialogue_id>/<turn_index>`
/// comments. Consecutive sentences under one comment belong to the same item.
pub fn parse_conllu_items(text: &str) -> Result<Vec<(ItemKey, Vec<DependencySentence>)>, ConlluError> {
    let mut out: Vec<(ItemKey, Vec<DependencySentence>)> = Vec::new();
    let mut first_line_of = text.lines();
    for (key, sent) in parse_keyed(text)? {
        let Some(key) = key else {
            let line = first_line_of
                .position(|l| !l.trim().is_empty() && !l.starts_with('#'))
                .map_or(1, |p| p + 1);
            return Err(ConlluError::UnkeyedSentence { line });
        };
        match out.last_mut() {
            Some((k, sents)) if *k == key => sents.push(sent),
            _ => out.push((key, vec![sent])),
        }
    }
    Ok(out)
}

/// Renders sentences back to CoNLL-U with placeholder columns.
pub fn render_conllu(sentences: &[DependencySentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for t in s {
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_\n",
                t.id, t.form, t.upos, t.head, t.deprel
            ));
        }
        out.push('\n');
    }
    out
}
