//! Penn-Treebank style bracketed constituency trees.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A constituency tree node. Preterminals carry `leaf_token` and have no
/// children; internal nodes have at least one child and no token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituencyNode {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ConstituencyNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_token: Option<String>,
}

impl ConstituencyNode {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            children: Vec::new(),
            leaf_token: Some(token.into()),
        }
    }

    pub fn internal(label: impl Into<String>, children: Vec<ConstituencyNode>) -> Self {
        Self {
            label: label.into(),
            children,
            leaf_token: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf_token.is_some()
    }

    /// Surface tokens, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.leaf_token {
            Some(tok) => out.push(tok),
            None => self.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self.leaf_token {
            Some(_) => 1,
            None => self.children.iter().map(Self::leaf_count).sum(),
        }
    }

    /// Canonical single-line rendering; inverse of [`parse_bracketed`].
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ConstituencyNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        match &self.leaf_token {
            Some(tok) => write!(f, " {}", encode_token(tok))?,
            None => {
                for c in &self.children {
                    write!(f, " {c}")?;
                }
            }
        }
        write!(f, ")")
    }
}

const ESCAPES: [(&str, &str); 6] = [
    ("-LRB-", "("),
    ("-RRB-", ")"),
    ("-LCB-", "{"),
    ("-RCB-", "}"),
    ("-LSB-", "["),
    ("-RSB-", "]"),
];

/// Escapes are replaced wherever they occur in a token, so `-LRB-a` decodes
/// to `(a` and renders back the same way.
fn decode_token(tok: &str) -> String {
    ESCAPES
        .iter()
        .fold(tok.to_owned(), |acc, (esc, lit)| acc.replace(esc, lit))
}

fn encode_token(tok: &str) -> String {
    ESCAPES
        .iter()
        .fold(tok.to_owned(), |acc, (esc, lit)| acc.replace(lit, esc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketErrorKind {
    Unbalanced,
    EmptyLabel,
    /// A bracket holding both a surface token and subtrees, or several tokens.
    MixedLeaf,
    /// A labeled bracket with neither token nor children.
    EmptyNode,
    /// Bare material outside any bracket.
    StrayToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} at offset {offset}: {message}")]
pub struct BracketError {
    pub kind: BracketErrorKind,
    /// Byte offset into the input.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<(usize, Tok<'a>)> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let c = rest.chars().next()?;
        Some(match c {
            '(' => (self.pos, Tok::Open),
            ')' => (self.pos, Tok::Close),
            _ => {
                let end = rest
                    .find(|ch: char| ch.is_whitespace() || ch == '(' || ch == ')')
                    .unwrap_or(rest.len());
                (self.pos, Tok::Atom(&rest[..end]))
            }
        })
    }

    fn bump(&mut self, tok: Tok<'a>) {
        self.pos += match tok {
            Tok::Open | Tok::Close => 1,
            Tok::Atom(a) => a.len(),
        };
    }

    /// Offset of the last non-whitespace byte, used for end-of-input errors.
    fn eof_offset(&self) -> usize {
        let trimmed = self.src.trim_end();
        trimmed
            .char_indices()
            .last()
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    fn err(kind: BracketErrorKind, offset: usize, message: impl Into<String>) -> BracketError {
        BracketError {
            kind,
            offset,
            message: message.into(),
        }
    }

    fn unexpected_eof(&self) -> BracketError {
        Self::err(
            BracketErrorKind::Unbalanced,
            self.eof_offset(),
            "input ended inside an open bracket",
        )
    }

    /// Parses one tree; the current token must be `(`.
    fn tree(&mut self) -> Result<ConstituencyNode, BracketError> {
        let (open_at, _) = self.peek().expect("caller checked for `(`");
        self.bump(Tok::Open);
        let label = match self.peek() {
            Some((_, Tok::Atom(a))) => {
                self.bump(Tok::Atom(a));
                a.to_owned()
            }
            Some((at, _)) => {
                return Err(Self::err(
                    BracketErrorKind::EmptyLabel,
                    at,
                    format!("bracket opened at {open_at} has no label"),
                ))
            }
            None => return Err(self.unexpected_eof()),
        };
        match self.peek() {
            None => Err(self.unexpected_eof()),
            Some((at, Tok::Close)) => Err(Self::err(
                BracketErrorKind::EmptyNode,
                at,
                format!("node `{label}` has neither token nor children"),
            )),
            Some((_, Tok::Atom(tok))) => {
                self.bump(Tok::Atom(tok));
                match self.peek() {
                    Some((_, Tok::Close)) => {
                        self.bump(Tok::Close);
                        Ok(ConstituencyNode::leaf(label, decode_token(tok)))
                    }
                    Some((at, _)) => Err(Self::err(
                        BracketErrorKind::MixedLeaf,
                        at,
                        format!("leaf `{label}` has a token followed by more material"),
                    )),
                    None => Err(self.unexpected_eof()),
                }
            }
            Some((_, Tok::Open)) => {
                let mut children = Vec::new();
                loop {
                    match self.peek() {
                        Some((_, Tok::Open)) => children.push(self.tree()?),
                        Some((_, Tok::Close)) => {
                            self.bump(Tok::Close);
                            return Ok(ConstituencyNode::internal(label, children));
                        }
                        Some((at, Tok::Atom(_))) => {
                            return Err(Self::err(
                                BracketErrorKind::MixedLeaf,
                                at,
                                format!("node `{label}` mixes subtrees and a bare token"),
                            ))
                        }
                        None => return Err(self.unexpected_eof()),
                    }
                }
            }
        }
    }
}

/// Parses zero or more top-level trees in input order. `-LRB-`/`-RRB-`
/// (and the curly/square variants) are decoded in leaf tokens.
pub fn parse_bracketed(text: &str) -> Result<Vec<ConstituencyNode>, BracketError> {
    let mut lx = Lexer { src: text, pos: 0 };
    let mut trees = Vec::new();
    while let Some((at, tok)) = lx.peek() {
        match tok {
            Tok::Open => trees.push(lx.tree()?),
            Tok::Close => {
                return Err(Lexer::err(
                    BracketErrorKind::Unbalanced,
                    at,
                    "closing bracket without a matching opening bracket",
                ))
            }
            Tok::Atom(a) => {
                return Err(Lexer::err(
                    BracketErrorKind::StrayToken,
                    at,
                    format!("token `{a}` outside any bracket"),
                ))
            }
        }
    }
    Ok(trees)
}
