//! Dialogues, knowledge snippets, gold references and model responses.
//!
//! Everything is read from JSON Lines. Dialogues live in one file (one
//! dialogue per line); knowledge snippets, references and responses are
//! sidecar files keyed by `(dialogue_id, turn_index)` of the answer turn.
//!
//! Loaders never drop a record silently: each rejected line yields exactly
//! one error [`Diagnostic`], and the load fails with all of them attached.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{Diagnostic, Diagnostics};

/// Identifies one scored answer turn.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemKey {
    pub dialogue_id: String,
    pub turn_index: usize,
}

impl ItemKey {
    pub fn new(dialogue_id: impl Into<String>, turn_index: usize) -> Self {
        Self {
            dialogue_id: dialogue_id.into(),
            turn_index,
        }
    }
}

impl fmt::Display for ItemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.dialogue_id, self.turn_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid item key `{0}`, expected <dialogue_id>/<turn_index>")]
pub struct ItemKeyParseError(pub String);

impl FromStr for ItemKey {
    type Err = ItemKeyParseError;

    /// Splits at the last `/`, so dialogue ids may themselves contain slashes.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (id, idx) = s
            .rsplit_once('/')
            .ok_or_else(|| ItemKeyParseError(s.to_owned()))?;
        if id.is_empty() {
            return Err(ItemKeyParseError(s.to_owned()));
        }
        let turn_index = idx.parse().map_err(|_| ItemKeyParseError(s.to_owned()))?;
        Ok(ItemKey::new(id, turn_index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(rename = "i")]
    pub turn_index: usize,
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub dialogue_id: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    /// Checks id, text, index and role-alternation invariants. Turns are
    /// sorted by index first; file order does not matter.
    pub fn validate(mut self) -> Result<Self, String> {
        if self.dialogue_id.trim().is_empty() {
            return Err("empty dialogue_id".into());
        }
        let id = self.dialogue_id.clone();
        self.turns.sort_by_key(|t| t.turn_index);
        for pair in self.turns.windows(2) {
            if pair[0].turn_index == pair[1].turn_index {
                return Err(format!(
                    "duplicate turn index: {id}/turn {}",
                    pair[0].turn_index
                ));
            }
        }
        for (pos, turn) in self.turns.iter().enumerate() {
            if turn.turn_index != pos {
                return Err(format!(
                    "turn indices must be 0..{} without gaps: {id} is missing turn {pos}",
                    self.turns.len()
                ));
            }
            if turn.text.trim().is_empty() {
                return Err(format!("empty text: {id}/turn {pos}"));
            }
            let expected = if pos % 2 == 0 {
                Role::Question
            } else {
                Role::Answer
            };
            if turn.role != expected {
                return Err(format!(
                    "role alternation violated: {id}/turn {pos} is {:?}, expected {:?}",
                    turn.role, expected
                ));
            }
        }
        if self.turns.len() < 2 {
            return Err(format!("{id} has no question/answer pair"));
        }
        Ok(self)
    }

    /// Item keys of all answer turns.
    pub fn answer_keys(&self) -> impl Iterator<Item = ItemKey> + '_ {
        self.turns
            .iter()
            .filter(|t| t.role == Role::Answer)
            .map(|t| ItemKey::new(self.dialogue_id.clone(), t.turn_index))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeSnippet {
    pub snippet_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSet {
    #[serde(flatten)]
    pub item_key: ItemKey,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct KnowledgeRecord {
    dialogue_id: String,
    turn_index: usize,
    snippet_id: String,
    #[serde(default)]
    title: String,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ResponseRecord {
    dialogue_id: String,
    turn_index: usize,
    text: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("validation failed with {count} error(s):\n{0}", count = .0.errors().count())]
    Invalid(Diagnostics),
}

/// A successfully loaded value plus the warnings raised along the way.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub diagnostics: Diagnostics,
}

/// Immutable, validated corpus. Iteration is ordered by dialogue id then
/// turn index regardless of file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    dialogues: BTreeMap<String, Dialogue>,
    knowledge: BTreeMap<ItemKey, KnowledgeSnippet>,
    references: BTreeMap<ItemKey, ReferenceSet>,
}

/// Input files for [`load_corpus`].
#[derive(Debug, Clone, Default)]
pub struct CorpusPaths {
    pub dialogues: PathBuf,
    pub knowledge: Option<PathBuf>,
    pub references: Option<PathBuf>,
}

impl CorpusPaths {
    pub fn new(dialogues: impl Into<PathBuf>) -> Self {
        Self {
            dialogues: dialogues.into(),
            ..Default::default()
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Iterates `(line_number, line)` over non-blank lines. Read errors are
/// reported as diagnostics so line numbering stays intact.
fn jsonl_lines<R: BufRead>(reader: R, diags: &mut Diagnostics) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        match line {
            Ok(l) if l.trim().is_empty() => {}
            Ok(l) => out.push((idx + 1, l)),
            Err(e) => diags.push(Diagnostic::error(format!("unreadable line: {e}")).at_line(idx + 1)),
        }
    }
    out
}

fn parse_line<T: serde::de::DeserializeOwned>(line: &str) -> Result<T, String> {
    serde_json::from_str(line).map_err(|e| {
        if e.is_data() {
            format!("missing or malformed field: {e}")
        } else {
            format!("malformed JSON: {e}")
        }
    })
}

/// Parses a dialogue JSONL stream. Returns the accepted dialogues and one
/// diagnostic per rejected line.
pub fn parse_dialogues<R: BufRead>(reader: R) -> (Vec<Dialogue>, Diagnostics) {
    let mut diags = Diagnostics::new();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line_no, line) in jsonl_lines(reader, &mut diags) {
        let dialogue = parse_line::<Dialogue>(&line).and_then(Dialogue::validate);
        match dialogue {
            Ok(d) if !seen.insert(d.dialogue_id.clone()) => diags.push(
                Diagnostic::error(format!(
                    "duplicate (dialogue_id, turn_index): dialogue {} already defined",
                    d.dialogue_id
                ))
                .at_line(line_no),
            ),
            Ok(d) => out.push(d),
            Err(msg) => diags.push(Diagnostic::error(msg).at_line(line_no)),
        }
    }
    (out, diags)
}

impl Corpus {
    pub fn from_dialogues(dialogues: impl IntoIterator<Item = Dialogue>) -> Self {
        Self {
            dialogues: dialogues
                .into_iter()
                .map(|d| (d.dialogue_id.clone(), d))
                .collect(),
            ..Default::default()
        }
    }

    /// Parses the dialogues file content only (no sidecars).
    pub fn from_jsonl_str(text: &str) -> Result<Loaded<Corpus>, CorpusError> {
        let (dialogues, mut diags) = parse_dialogues(text.as_bytes());
        if diags.has_errors() {
            return Err(CorpusError::Invalid(diags));
        }
        if dialogues.is_empty() {
            diags.push(Diagnostic::warning("corpus is empty: zero dialogues loaded"));
        }
        Ok(Loaded {
            value: Corpus::from_dialogues(dialogues),
            diagnostics: diags,
        })
    }

    pub fn dialogues(&self) -> impl Iterator<Item = &Dialogue> {
        self.dialogues.values()
    }

    pub fn dialogue(&self, id: &str) -> Option<&Dialogue> {
        self.dialogues.get(id)
    }

    pub fn dialogue_count(&self) -> usize {
        self.dialogues.len()
    }

    pub fn turn_count(&self) -> usize {
        self.dialogues.values().map(|d| d.turns.len()).sum()
    }

    /// All answer-turn item keys in canonical order.
    pub fn items(&self) -> impl Iterator<Item = ItemKey> + '_ {
        self.dialogues.values().flat_map(Dialogue::answer_keys)
    }

    pub fn item_count(&self) -> usize {
        self.dialogues
            .values()
            .map(|d| d.turns.len() / 2)
            .sum()
    }

    fn turn(&self, key: &ItemKey) -> Option<&Turn> {
        self.dialogues.get(&key.dialogue_id)?.turns.get(key.turn_index)
    }

    pub fn contains_item(&self, key: &ItemKey) -> bool {
        self.turn(key).is_some_and(|t| t.role == Role::Answer)
    }

    /// The user question immediately preceding the answer turn.
    pub fn question(&self, key: &ItemKey) -> Option<&str> {
        if !self.contains_item(key) {
            return None;
        }
        let prev = ItemKey::new(key.dialogue_id.clone(), key.turn_index.checked_sub(1)?);
        self.turn(&prev).map(|t| t.text.as_str())
    }

    /// The gold answer stored in the dialogue itself.
    pub fn answer(&self, key: &ItemKey) -> Option<&str> {
        self.turn(key)
            .filter(|t| t.role == Role::Answer)
            .map(|t| t.text.as_str())
    }

    /// Dialogue history before the answer turn, oldest first.
    pub fn history(&self, key: &ItemKey) -> Option<&[Turn]> {
        let d = self.dialogues.get(&key.dialogue_id)?;
        d.turns.get(..key.turn_index)
    }

    pub fn knowledge(&self, key: &ItemKey) -> Option<&KnowledgeSnippet> {
        self.knowledge.get(key)
    }

    pub fn knowledge_count(&self) -> usize {
        self.knowledge.len()
    }

    /// Sidecar references when present; otherwise the dialogue's own answer
    /// turn serves as the single reference.
    pub fn references(&self, key: &ItemKey) -> Option<Vec<&str>> {
        match self.references.get(key) {
            Some(set) => Some(set.references.iter().map(String::as_str).collect()),
            None => self.answer(key).map(|a| vec![a]),
        }
    }

    pub fn reference_set(&self, key: &ItemKey) -> Option<&ReferenceSet> {
        self.references.get(key)
    }

    /// Attaches knowledge snippets from a JSONL stream.
    pub fn attach_knowledge<R: BufRead>(&mut self, reader: R) -> Diagnostics {
        let mut diags = Diagnostics::new();
        for (line_no, line) in jsonl_lines(reader, &mut diags) {
            let rec = match parse_line::<KnowledgeRecord>(&line) {
                Ok(r) => r,
                Err(msg) => {
                    diags.push(Diagnostic::error(msg).at_line(line_no));
                    continue;
                }
            };
            let key = ItemKey::new(rec.dialogue_id, rec.turn_index);
            let err = if !self.contains_item(&key) {
                Some(format!("knowledge for unknown item {key}"))
            } else if rec.text.trim().is_empty() {
                Some(format!("empty knowledge text for {key}"))
            } else if self.knowledge.contains_key(&key) {
                Some(format!("more than one snippet for {key}"))
            } else {
                None
            };
            match err {
                Some(msg) => diags.push(Diagnostic::error(msg).at_line(line_no)),
                None => {
                    self.knowledge.insert(
                        key,
                        KnowledgeSnippet {
                            snippet_id: rec.snippet_id,
                            title: rec.title,
                            text: rec.text,
                        },
                    );
                }
            }
        }
        diags
    }

    /// Attaches multi-reference gold answers from a JSONL stream.
    pub fn attach_references<R: BufRead>(&mut self, reader: R) -> Diagnostics {
        let mut diags = Diagnostics::new();
        for (line_no, line) in jsonl_lines(reader, &mut diags) {
            let set = match parse_line::<ReferenceSet>(&line) {
                Ok(r) => r,
                Err(msg) => {
                    diags.push(Diagnostic::error(msg).at_line(line_no));
                    continue;
                }
            };
            let key = &set.item_key;
            if !self.contains_item(key) {
                diags.push(Diagnostic::error(format!("references for unknown item {key}")).at_line(line_no));
                continue;
            }
            if set.references.is_empty() {
                diags.push(Diagnostic::error(format!("empty reference list for {key}")).at_line(line_no));
                continue;
            }
            if self.references.contains_key(key) {
                diags.push(
                    Diagnostic::error(format!("duplicate reference set for {key}")).at_line(line_no),
                );
                continue;
            }
            let distinct: BTreeSet<&String> = set.references.iter().collect();
            if distinct.len() < set.references.len() {
                diags.push(
                    Diagnostic::warning(format!("duplicate references for {key}")).at_line(line_no),
                );
            }
            self.references.insert(key.clone(), set);
        }
        diags
    }

    /// Canonical dialogues file content.
    pub fn dialogues_jsonl(&self) -> String {
        to_jsonl(self.dialogues.values())
    }

    pub fn knowledge_jsonl(&self) -> String {
        to_jsonl(self.knowledge.iter().map(|(k, s)| KnowledgeRecord {
            dialogue_id: k.dialogue_id.clone(),
            turn_index: k.turn_index,
            snippet_id: s.snippet_id.clone(),
            title: s.title.clone(),
            text: s.text.clone(),
        }))
    }

    pub fn references_jsonl(&self) -> String {
        to_jsonl(self.references.values())
    }
}

fn to_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Loads dialogues and the optional sidecars, validating cross references.
pub fn load_corpus(paths: &CorpusPaths) -> Result<Loaded<Corpus>, CorpusError> {
    let (dialogues, diags) = parse_dialogues(open(&paths.dialogues)?);
    let mut all = diags.with_source(&paths.dialogues);
    let mut corpus = Corpus::from_dialogues(dialogues);
    if let Some(path) = &paths.knowledge {
        all.extend(corpus.attach_knowledge(open(path)?).with_source(path));
    }
    if let Some(path) = &paths.references {
        all.extend(corpus.attach_references(open(path)?).with_source(path));
    }
    if all.has_errors() {
        return Err(CorpusError::Invalid(all));
    }
    if corpus.dialogue_count() == 0 {
        all.push(
            Diagnostic::warning("corpus is empty: zero dialogues loaded").in_source(&paths.dialogues),
        );
    }
    Ok(Loaded {
        value: corpus,
        diagnostics: all,
    })
}

/// One model's outputs keyed by item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSet {
    pub model_name: String,
    pub responses: BTreeMap<ItemKey, String>,
}

impl ResponseSet {
    pub fn new(model_name: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            responses: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn get(&self, key: &ItemKey) -> Option<&str> {
        self.responses.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ItemKey, &str)> {
        self.responses.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// Fraction of corpus items that have a response.
    pub fn coverage(&self, corpus: &Corpus) -> f64 {
        let total = corpus.item_count();
        if total == 0 {
            0.0
        } else {
            self.responses.len() as f64 / total as f64
        }
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(self.responses.iter().map(|(k, t)| ResponseRecord {
            dialogue_id: k.dialogue_id.clone(),
            turn_index: k.turn_index,
            text: t.clone(),
        }))
    }

    /// Parses a responses stream against a loaded corpus.
    pub fn from_reader<R: BufRead>(
        reader: R,
        model_name: &str,
        corpus: &Corpus,
    ) -> Result<Loaded<ResponseSet>, CorpusError> {
        let mut diags = Diagnostics::new();
        if model_name.trim().is_empty() {
            diags.push(Diagnostic::error("model name must not be empty"));
            return Err(CorpusError::Invalid(diags));
        }
        let mut set = ResponseSet::new(model_name);
        for (line_no, line) in jsonl_lines(reader, &mut diags) {
            let rec = match parse_line::<ResponseRecord>(&line) {
                Ok(r) => r,
                Err(msg) => {
                    diags.push(Diagnostic::error(msg).at_line(line_no));
                    continue;
                }
            };
            let key = ItemKey::new(rec.dialogue_id, rec.turn_index);
            if !corpus.contains_item(&key) {
                diags.push(Diagnostic::error(format!("response for unknown item {key}")).at_line(line_no));
                continue;
            }
            if set.responses.contains_key(&key) {
                diags.push(Diagnostic::error(format!("duplicate response for {key}")).at_line(line_no));
                continue;
            }
            if rec.text.trim().is_empty() {
                diags.push(Diagnostic::warning(format!("empty response for {key}")).at_line(line_no));
            }
            set.responses.insert(key, rec.text);
        }
        if diags.has_errors() {
            return Err(CorpusError::Invalid(diags));
        }
        let coverage = set.coverage(corpus);
        if coverage < 1.0 {
            diags.push(Diagnostic::warning(format!(
                "{model_name}: responses cover {:.1}% of corpus items ({} of {})",
                coverage * 100.0,
                set.len(),
                corpus.item_count()
            )));
        }
        Ok(Loaded {
            value: set,
            diagnostics: diags,
        })
    }
}

pub fn load_responses(
    path: &Path,
    model_name: &str,
    corpus: &Corpus,
) -> Result<Loaded<ResponseSet>, CorpusError> {
    ResponseSet::from_reader(open(path)?, model_name, corpus).map(|mut l| {
        l.diagnostics = l.diagnostics.with_source(path);
        l
    })
    .map_err(|e| match e {
        CorpusError::Invalid(d) => CorpusError::Invalid(d.with_source(path)),
        other => other,
    })
}
