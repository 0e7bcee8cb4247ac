//! Python bindings for groundeval.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use groundeval::annotations::{self, ConstituencyNode, DependencyToken, ParseIndex};
use groundeval::corpus::CorpusError;
use groundeval::humaneval;
use groundeval::metrics::{self, MetricConfig, QuestionSubtraction};
use groundeval::phenomena::{self, AlignmentLevel, PhenomenaConfig, StructureClass};
use groundeval::textnorm::{self, NormalizeOptions, OverlapMode, TextConfig, TokenBag};
use groundeval::ItemKey;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn corpus_err(e: CorpusError) -> PyErr {
    match e {
        CorpusError::Io { .. } => PyOSError::new_err(e.to_string()),
        CorpusError::Invalid(_) => value_err(e),
    }
}

fn to_python<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn text_config(strip_articles: bool, set_overlap: bool) -> TextConfig {
    TextConfig {
        normalize: NormalizeOptions { strip_articles },
        overlap: if set_overlap { OverlapMode::Set } else { OverlapMode::Multiset },
    }
}

#[pyclass(name = "Overlap", frozen, get_all, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyOverlap {
    overlap: usize,
    precision: f64,
    recall: f64,
    f1: f64,
}

#[pymethods]
impl PyOverlap {
    fn __repr__(&self) -> String {
        format!(
            "Overlap(overlap={}, precision={}, recall={}, f1={})",
            self.overlap, self.precision, self.recall, self.f1
        )
    }
}

impl From<textnorm::Overlap> for PyOverlap {
    fn from(o: textnorm::Overlap) -> Self {
        Self {
            overlap: o.overlap,
            precision: o.precision,
            recall: o.recall,
            f1: o.f1,
        }
    }
}

#[pyclass(name = "ChiSquareResult", frozen, get_all, from_py_object)]
#[derive(Clone, Copy)]
struct PyChiSquare {
    statistic: f64,
    df: usize,
    p_value: f64,
    significant: bool,
}

#[pymethods]
impl PyChiSquare {
    fn __repr__(&self) -> String {
        format!(
            "ChiSquareResult(statistic={}, df={}, p_value={:e}, significant={})",
            self.statistic,
            self.df,
            self.p_value,
            if self.significant { "True" } else { "False" }
        )
    }
}

/// A constituency tree node.
#[pyclass(name = "Tree", frozen, from_py_object)]
#[derive(Clone)]
struct PyTree(ConstituencyNode);

#[pymethods]
impl PyTree {
    #[getter]
    fn label(&self) -> &str {
        &self.0.label
    }

    #[getter]
    fn token(&self) -> Option<&str> {
        self.0.leaf_token.as_deref()
    }

    #[getter]
    fn children(&self) -> Vec<PyTree> {
        self.0.children.iter().cloned().map(PyTree).collect()
    }

    fn leaves(&self) -> Vec<String> {
        self.0.leaves().into_iter().map(str::to_owned).collect()
    }

    fn render(&self) -> String {
        self.0.render()
    }

    fn __repr__(&self) -> String {
        format!("Tree({:?})", self.0.render())
    }
}

#[pyfunction]
#[pyo3(signature = (text, strip_articles = true))]
fn normalize(text: &str, strip_articles: bool) -> Vec<String> {
    textnorm::normalize_with(text, NormalizeOptions { strip_articles })
}

#[pyfunction]
#[pyo3(signature = (a, b, set_overlap = false))]
fn bag_overlap(a: Vec<String>, b: Vec<String>, set_overlap: bool) -> PyOverlap {
    let mode = if set_overlap { OverlapMode::Set } else { OverlapMode::Multiset };
    textnorm::overlap_with_mode(&TokenBag::from_tokens(a), &TokenBag::from_tokens(b), mode).into()
}

#[pyfunction]
#[pyo3(signature = (response, references, strip_articles = true, set_overlap = false))]
fn token_f1(response: &str, references: Vec<String>, strip_articles: bool, set_overlap: bool) -> f64 {
    metrics::token_f1_with(response, &references, text_config(strip_articles, set_overlap))
}

#[pyfunction]
#[pyo3(signature = (response, references, strip_articles = true))]
fn exact_match(response: &str, references: Vec<String>, strip_articles: bool) -> f64 {
    metrics::exact_match_with(response, &references, NormalizeOptions { strip_articles })
}

#[pyfunction]
#[pyo3(signature = (response, references, strip_articles = true))]
fn rouge_l(response: &str, references: Vec<String>, strip_articles: bool) -> f64 {
    metrics::rouge_l_with(response, &references, NormalizeOptions { strip_articles })
}

/// Corpus BLEU-4 on a 0-100 scale; `references[i]` holds every reference
/// for `candidates[i]`.
#[pyfunction]
#[pyo3(signature = (candidates, references, strip_articles = true))]
fn corpus_bleu(candidates: Vec<String>, references: Vec<Vec<String>>, strip_articles: bool) -> PyResult<f64> {
    metrics::corpus_bleu_with(&candidates, &references, NormalizeOptions { strip_articles }).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (response, knowledge, strip_articles = true, set_overlap = false))]
fn knowledge_f1(response: &str, knowledge: &str, strip_articles: bool, set_overlap: bool) -> PyOverlap {
    metrics::knowledge_f1_with(response, knowledge, text_config(strip_articles, set_overlap)).into()
}

#[pyfunction]
#[pyo3(signature = (question, response, knowledge, occurrence = false, strip_articles = true, set_overlap = false))]
fn knowledge_f1_pp(
    question: &str,
    response: &str,
    knowledge: &str,
    occurrence: bool,
    strip_articles: bool,
    set_overlap: bool,
) -> PyOverlap {
    let config = MetricConfig {
        text: text_config(strip_articles, set_overlap),
        subtraction: if occurrence {
            QuestionSubtraction::Occurrence
        } else {
            QuestionSubtraction::Type
        },
    };
    metrics::knowledge_f1_pp_with(question, response, knowledge, config).into()
}

/// Alignment of a response against its question; precision is relative to
/// the response.
#[pyfunction]
#[pyo3(signature = (question, response, strip_articles = true, set_overlap = false))]
fn lexical_alignment(question: &str, response: &str, strip_articles: bool, set_overlap: bool) -> PyOverlap {
    let s = phenomena::lexical_alignment_with(question, response, text_config(strip_articles, set_overlap));
    PyOverlap {
        overlap: s.overlap,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
    }
}

/// "high" or "low", comparing alignment recall with the threshold.
#[pyfunction]
#[pyo3(signature = (question, response, threshold = phenomena::DEFAULT_ALIGNMENT_THRESHOLD))]
fn alignment_level(question: &str, response: &str, threshold: f64) -> PyResult<&'static str> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(PyValueError::new_err("threshold must lie in [0, 1]"));
    }
    let score = phenomena::lexical_alignment(question, response);
    Ok(match phenomena::classify_alignment_level(&score, threshold) {
        AlignmentLevel::High => "high",
        AlignmentLevel::Low => "low",
    })
}

#[pyfunction]
fn parse_bracketed(text: &str) -> PyResult<Vec<PyTree>> {
    annotations::parse_bracketed(text)
        .map(|ts| ts.into_iter().map(PyTree).collect())
        .map_err(value_err)
}

type ConlluRow = (usize, String, String, usize, String);

/// Sentences as lists of `(id, form, upos, head, deprel)` tuples.
#[pyfunction]
fn parse_conllu(text: &str) -> PyResult<Vec<Vec<ConlluRow>>> {
    let sents = annotations::parse_conllu(text).map_err(value_err)?;
    Ok(sents
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|DependencyToken { id, form, upos, head, deprel }| (id, form, upos, head, deprel))
                .collect()
        })
        .collect())
}

/// "fragment", "short" or "long" for the trees of one response.
#[pyfunction]
fn classify_structure(bracketed: &str) -> PyResult<&'static str> {
    let trees = annotations::parse_bracketed(bracketed).map_err(value_err)?;
    match phenomena::classify_trees(&trees) {
        Some(StructureClass::Fragment) => Ok("fragment"),
        Some(StructureClass::Short) => Ok("short"),
        Some(StructureClass::Long) => Ok("long"),
        None => Err(PyValueError::new_err("no trees")),
    }
}

#[pyfunction]
fn detect_pronoun(conllu: &str) -> PyResult<bool> {
    let sents = annotations::parse_conllu(conllu).map_err(value_err)?;
    Ok(phenomena::sentences_have_pronoun(&sents))
}

#[pyfunction]
fn chi_square_gof(observed: Vec<f64>, expected: Vec<f64>) -> PyResult<PyChiSquare> {
    let r = humaneval::chi_square_gof(&observed, &expected).map_err(value_err)?;
    Ok(PyChiSquare {
        statistic: r.statistic,
        df: r.df,
        p_value: r.p_value,
        significant: r.significant_at_05,
    })
}

#[pyfunction]
fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    humaneval::chi_square_sf(statistic, df)
}

/// Percentage of items whose labels have a strict majority.
#[pyfunction]
fn majority_agreement(items: Vec<Vec<String>>) -> f64 {
    humaneval::majority_agreement(&items)
}

/// A loaded dialogue corpus.
#[pyclass(name = "Corpus", frozen)]
struct PyCorpus(groundeval::Corpus);

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    #[pyo3(signature = (dialogues, knowledge = None, references = None))]
    fn load(dialogues: PathBuf, knowledge: Option<PathBuf>, references: Option<PathBuf>) -> PyResult<Self> {
        let paths = groundeval::CorpusPaths {
            dialogues,
            knowledge,
            references,
        };
        let loaded = groundeval::load_corpus(&paths).map_err(corpus_err)?;
        Ok(Self(loaded.value))
    }

    /// Item keys as `(dialogue_id, turn_index)` pairs.
    fn items(&self) -> Vec<(String, usize)> {
        self.0.items().map(|k| (k.dialogue_id, k.turn_index)).collect()
    }

    fn question(&self, dialogue_id: &str, turn_index: usize) -> Option<String> {
        self.0.question(&ItemKey::new(dialogue_id, turn_index)).map(str::to_owned)
    }

    fn references(&self, dialogue_id: &str, turn_index: usize) -> Option<Vec<String>> {
        self.0
            .references(&ItemKey::new(dialogue_id, turn_index))
            .map(|v| v.into_iter().map(str::to_owned).collect())
    }

    /// Scores a responses file; returns the summary row as a dict.
    fn score<'py>(&self, py: Python<'py>, responses: PathBuf, model: &str) -> PyResult<Bound<'py, PyAny>> {
        let set = groundeval::load_responses(&responses, model, &self.0).map_err(corpus_err)?.value;
        let scores = metrics::score_model(&set, &self.0, &MetricConfig::default()).map_err(value_err)?;
        to_python(py, &scores.summary)
    }

    /// Profiles a responses file; returns the summary row as a dict.
    #[pyo3(signature = (responses, model, parses = None))]
    fn profile<'py>(
        &self,
        py: Python<'py>,
        responses: PathBuf,
        model: &str,
        parses: Option<PathBuf>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let set = groundeval::load_responses(&responses, model, &self.0).map_err(corpus_err)?.value;
        let index = match parses {
            Some(dir) => Some(ParseIndex::load_dir(&dir).map_err(value_err)?.0),
            None => None,
        };
        let report = phenomena::profile_model(&set, &self.0, index.as_ref(), &PhenomenaConfig::default())
            .map_err(value_err)?;
        to_python(py, &report.summary)
    }

    fn __len__(&self) -> usize {
        self.0.item_count()
    }
}

#[pymodule]
#[pyo3(name = "groundeval")]
fn groundeval_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyOverlap>()?;
    m.add_class::<PyChiSquare>()?;
    m.add_class::<PyTree>()?;
    m.add_class::<PyCorpus>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(bag_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(token_f1, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_l, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(knowledge_f1, m)?)?;
    m.add_function(wrap_pyfunction!(knowledge_f1_pp, m)?)?;
    m.add_function(wrap_pyfunction!(lexical_alignment, m)?)?;
    m.add_function(wrap_pyfunction!(alignment_level, m)?)?;
    m.add_function(wrap_pyfunction!(parse_bracketed, m)?)?;
    m.add_function(wrap_pyfunction!(parse_conllu, m)?)?;
    m.add_function(wrap_pyfunction!(classify_structure, m)?)?;
    m.add_function(wrap_pyfunction!(detect_pronoun, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_gof, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_sf, m)?)?;
    m.add_function(wrap_pyfunction!(majority_agreement, m)?)?;
    Ok(())
}
