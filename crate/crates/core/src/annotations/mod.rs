//! Syntactic annotation layers consumed by the phenomena analysis.
//!
//! A parse directory holds up to three files:
//!
//! * `parses.constituency.txt`: bracketed trees, one per line, with a blank
//!   line between items;
//! * `parses.constituency.index`: one `<dialogue_id>/<turn_index>` per line,
//!   naming the item blocks of the tree file in order;
//! * `parses.conllu`: CoNLL-U with `# item = <dialogue_id>/<turn_index>`
//!   comments.

pub mod bracketed;
pub mod conllu;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use bracketed::{parse_bracketed, BracketError, BracketErrorKind, ConstituencyNode};
pub use conllu::{parse_conllu, parse_conllu_items, ConlluError, DependencySentence, DependencyToken};

use crate::corpus::ItemKey;
use crate::diagnostics::{Diagnostic, Diagnostics};

pub const CONSTITUENCY_FILE: &str = "parses.constituency.txt";
pub const CONSTITUENCY_INDEX_FILE: &str = "parses.constituency.index";
pub const CONLLU_FILE: &str = "parses.conllu";

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: item block {block}: {source}", path.display())]
    Bracketed {
        path: PathBuf,
        block: usize,
        #[source]
        source: BracketError,
    },
    #[error("{}: {source}", path.display())]
    Conllu {
        path: PathBuf,
        #[source]
        source: ConlluError,
    },
    #[error("{}: {message}", path.display())]
    Index { path: PathBuf, message: String },
    #[error("no annotation files found in {}", .0.display())]
    Empty(PathBuf),
}

/// Both annotation layers for one response. Either layer may be absent;
/// when both are present they agree sentence by sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub item_key: ItemKey,
    pub constituency: Option<Vec<ConstituencyNode>>,
    pub dependency: Option<Vec<DependencySentence>>,
}

impl ParsedResponse {
    /// Checks that the two layers describe the same sentences and tokens.
    pub fn validate(&self) -> Result<(), String> {
        let (Some(trees), Some(deps)) = (&self.constituency, &self.dependency) else {
            return Ok(());
        };
        if trees.is_empty() {
            return Err(format!("{}: no sentences", self.item_key));
        }
        if trees.len() != deps.len() {
            return Err(format!(
                "{}: {} constituency trees but {} dependency sentences",
                self.item_key,
                trees.len(),
                deps.len()
            ));
        }
        for (i, (tree, sent)) in trees.iter().zip(deps).enumerate() {
            let leaves = tree.leaves();
            if leaves.len() != sent.len() {
                return Err(format!(
                    "{}: sentence {} has {} leaves but {} dependency tokens",
                    self.item_key,
                    i + 1,
                    leaves.len(),
                    sent.len()
                ));
            }
            if let Some((leaf, tok)) = leaves.iter().zip(sent).find(|(l, t)| **l != t.form) {
                return Err(format!(
                    "{}: sentence {} leaf `{leaf}` does not match dependency form `{}`",
                    self.item_key,
                    i + 1,
                    tok.form
                ));
            }
        }
        Ok(())
    }

    /// Paired sentences, when both layers are present.
    pub fn sentences(&self) -> Option<Vec<(&ConstituencyNode, &DependencySentence)>> {
        let trees = self.constituency.as_ref()?;
        let deps = self.dependency.as_ref()?;
        Some(trees.iter().zip(deps).collect())
    }
}

/// Parsed annotations for a whole response set, keyed by item.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseIndex {
    constituency: BTreeMap<ItemKey, Vec<ConstituencyNode>>,
    dependency: BTreeMap<ItemKey, Vec<DependencySentence>>,
    rejected: BTreeMap<ItemKey, String>,
}

impl ParseIndex {
    /// Builds from already-parsed layers, running join validation. Items
    /// whose layers disagree are rejected (one diagnostic each) and report
    /// as missing afterwards.
    pub fn from_layers(
        constituency: BTreeMap<ItemKey, Vec<ConstituencyNode>>,
        dependency: BTreeMap<ItemKey, Vec<DependencySentence>>,
    ) -> (Self, Diagnostics) {
        let mut index = ParseIndex {
            constituency,
            dependency,
            rejected: BTreeMap::new(),
        };
        let mut diags = Diagnostics::new();
        let keys: Vec<ItemKey> = index.constituency.keys().cloned().collect();
        for key in keys {
            let parsed = ParsedResponse {
                item_key: key.clone(),
                constituency: index.constituency.get(&key).cloned(),
                dependency: index.dependency.get(&key).cloned(),
            };
            if let Err(msg) = parsed.validate() {
                diags.push(Diagnostic::error(msg.clone()));
                index.constituency.remove(&key);
                index.dependency.remove(&key);
                index.rejected.insert(key, msg);
            }
        }
        (index, diags)
    }

    /// Parses the text of the three files. Any of them may be `None`.
    pub fn from_texts(
        constituency: Option<(&str, &str)>,
        conllu: Option<&str>,
    ) -> Result<(Self, Diagnostics), AnnotationError> {
        Self::from_texts_at(Path::new("."), constituency, conllu)
    }

    fn from_texts_at(
        dir: &Path,
        constituency: Option<(&str, &str)>,
        conllu: Option<&str>,
    ) -> Result<(Self, Diagnostics), AnnotationError> {
        let mut trees = BTreeMap::new();
        if let Some((tree_text, index_text)) = constituency {
            trees = read_constituency(dir, tree_text, index_text)?;
        }
        let mut deps = BTreeMap::new();
        if let Some(text) = conllu {
            let path = dir.join(CONLLU_FILE);
            let items = parse_conllu_items(text).map_err(|source| AnnotationError::Conllu {
                path: path.clone(),
                source,
            })?;
            for (key, sents) in items {
                if deps.insert(key.clone(), sents).is_some() {
                    return Err(AnnotationError::Index {
                        path,
                        message: format!("item {key} appears in more than one place"),
                    });
                }
            }
        }
        Ok(Self::from_layers(trees, deps))
    }

    /// Loads whichever annotation files exist in `dir`.
    pub fn load_dir(dir: &Path) -> Result<(Self, Diagnostics), AnnotationError> {
        let read = |name: &str| -> Result<Option<String>, AnnotationError> {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(AnnotationError::Io { path, source }),
            }
        };
        let trees = read(CONSTITUENCY_FILE)?;
        let index = read(CONSTITUENCY_INDEX_FILE)?;
        let conllu = read(CONLLU_FILE)?;
        let constituency = match (&trees, &index) {
            (Some(t), Some(i)) => Some((t.as_str(), i.as_str())),
            (None, None) => None,
            (Some(_), None) => {
                return Err(AnnotationError::Index {
                    path: dir.join(CONSTITUENCY_INDEX_FILE),
                    message: "tree file present without its index file".into(),
                })
            }
            (None, Some(_)) => {
                return Err(AnnotationError::Index {
                    path: dir.join(CONSTITUENCY_FILE),
                    message: "index file present without its tree file".into(),
                })
            }
        };
        if constituency.is_none() && conllu.is_none() {
            return Err(AnnotationError::Empty(dir.to_path_buf()));
        }
        let (index, diags) = Self::from_texts_at(dir, constituency, conllu.as_deref())?;
        Ok((index, diags.with_source(dir)))
    }

    pub fn response(&self, key: &ItemKey) -> Option<ParsedResponse> {
        let constituency = self.constituency.get(key).cloned();
        let dependency = self.dependency.get(key).cloned();
        if constituency.is_none() && dependency.is_none() {
            return None;
        }
        Some(ParsedResponse {
            item_key: key.clone(),
            constituency,
            dependency,
        })
    }

    pub fn constituency(&self, key: &ItemKey) -> Option<&[ConstituencyNode]> {
        self.constituency.get(key).map(Vec::as_slice)
    }

    pub fn dependency(&self, key: &ItemKey) -> Option<&[DependencySentence]> {
        self.dependency.get(key).map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = &ItemKey> {
        let mut all: Vec<&ItemKey> = self.constituency.keys().chain(self.dependency.keys()).collect();
        all.sort();
        all.dedup();
        all.into_iter()
    }
}

/// Splits the tree file into blank-line separated blocks and pairs them
/// with the index lines.
fn read_constituency(
    dir: &Path,
    tree_text: &str,
    index_text: &str,
) -> Result<BTreeMap<ItemKey, Vec<ConstituencyNode>>, AnnotationError> {
    let tree_path = dir.join(CONSTITUENCY_FILE);
    let index_path = dir.join(CONSTITUENCY_INDEX_FILE);
    let mut keys = Vec::new();
    for (n, line) in index_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let key = line.parse::<ItemKey>().map_err(|e| AnnotationError::Index {
            path: index_path.clone(),
            message: format!("line {}: {e}", n + 1),
        })?;
        keys.push(key);
    }
    let blocks = split_blocks(tree_text);
    if blocks.len() != keys.len() {
        return Err(AnnotationError::Index {
            path: index_path,
            message: format!(
                "{} index entries but {} tree blocks",
                keys.len(),
                blocks.len()
            ),
        });
    }
    let mut out = BTreeMap::new();
    for (block_no, (key, block)) in keys.into_iter().zip(blocks).enumerate() {
        let trees = parse_bracketed(&block).map_err(|source| AnnotationError::Bracketed {
            path: tree_path.clone(),
            block: block_no + 1,
            source,
        })?;
        if out.insert(key.clone(), trees).is_some() {
            return Err(AnnotationError::Index {
                path: index_path,
                message: format!("item {key} listed more than once"),
            });
        }
    }
    Ok(out)
}

fn split_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push_str(line);
            current.push('\n');
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}
