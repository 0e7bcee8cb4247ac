//! Table rendering for summaries: markdown, TSV and JSON.
//!
//! Cells keep full-precision values; rounding happens only here, and is
//! round-half-to-even on the exact binary value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const DAGGER: char = '†';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Markdown,
    Tsv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Markdown => "md",
            OutputFormat::Tsv => "tsv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "tsv" => Ok(OutputFormat::Tsv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellValue {
    Text { text: String },
    Number { value: f64, decimals: u8 },
    /// A percentage, optionally followed by its raw count: `70% (883)`.
    Percent {
        value: f64,
        decimals: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(flatten)]
    pub value: CellValue,
    #[serde(default)]
    pub significant: bool,
}

impl Cell {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            value: CellValue::Text { text: text.into() },
            significant: false,
        }
    }

    pub fn number(value: f64, decimals: u8) -> Self {
        Self {
            value: CellValue::Number { value, decimals },
            significant: false,
        }
    }

    /// Bare percentage with one decimal, the table default.
    pub fn pct(value: f64) -> Self {
        Self::number(value, 1)
    }

    pub fn pct_count(value: f64, count: u64) -> Self {
        Self {
            value: CellValue::Percent {
                value,
                decimals: 0,
                count: Some(count),
            },
            significant: false,
        }
    }

    pub fn pct_sign(value: f64, decimals: u8) -> Self {
        Self {
            value: CellValue::Percent {
                value,
                decimals,
                count: None,
            },
            significant: false,
        }
    }

    pub fn missing() -> Self {
        Self::text("n/a")
    }

    pub fn opt_number(value: Option<f64>, decimals: u8) -> Self {
        value.map_or_else(Self::missing, |v| Self::number(v, decimals))
    }

    pub fn with_dagger(mut self, significant: bool) -> Self {
        self.significant = significant;
        self
    }

    pub fn display(&self) -> String {
        let mut s = match &self.value {
            CellValue::Text { text } => text.clone(),
            CellValue::Number { value, decimals } => format!("{:.*}", *decimals as usize, value),
            CellValue::Percent {
                value,
                decimals,
                count,
            } => match count {
                Some(c) => format!("{:.*}% ({c})", *decimals as usize, value),
                None => format!("{:.*}%", *decimals as usize, value),
            },
        };
        if self.significant {
            s.push(DAGGER);
        }
        s
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("duplicate column header `{0}`")]
    DuplicateHeader(String),
    #[error("malformed table JSON: {0}")]
    Json(String),
}

impl ReportTable {
    pub fn new<S: Into<String>>(title: impl Into<String>, headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            title: title.into(),
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.headers.len() {
                return Err(ReportError::Ragged {
                    row: i,
                    expected: self.headers.len(),
                    found: row.len(),
                });
            }
        }
        Ok(())
    }

    /// Structured JSON form used for saved summaries; lossless.
    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (h, c) in self.headers.iter().zip(row) {
                    let mut cell = serde_json::to_value(c).expect("cell serializes");
                    cell.as_object_mut()
                        .expect("cell is an object")
                        .insert("display".into(), Value::String(c.display()));
                    obj.insert(h.clone(), cell);
                }
                Value::Object(obj)
            })
            .collect();
        serde_json::json!({
            "title": self.title,
            "columns": self.headers,
            "rows": rows,
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self, ReportError> {
        let bad = |m: &str| ReportError::Json(m.to_owned());
        let title = v["title"].as_str().ok_or_else(|| bad("missing title"))?.to_owned();
        let headers: Vec<String> = v["columns"]
            .as_array()
            .ok_or_else(|| bad("missing columns"))?
            .iter()
            .map(|h| h.as_str().map(str::to_owned).ok_or_else(|| bad("non-string column")))
            .collect::<Result<_, _>>()?;
        let mut table = ReportTable::new(title, headers.clone());
        for row in v["rows"].as_array().ok_or_else(|| bad("missing rows"))? {
            let obj = row.as_object().ok_or_else(|| bad("row is not an object"))?;
            let cells = headers
                .iter()
                .map(|h| {
                    let mut cell = obj.get(h).cloned().ok_or_else(|| bad("row lacks a column"))?;
                    if let Some(o) = cell.as_object_mut() {
                        o.remove("display");
                    }
                    serde_json::from_value::<Cell>(cell).map_err(|e| ReportError::Json(e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push_row(cells);
        }
        Ok(table)
    }

    pub fn from_json_str(s: &str) -> Result<Vec<Self>, ReportError> {
        let v: Value = serde_json::from_str(s).map_err(|e| ReportError::Json(e.to_string()))?;
        match &v {
            Value::Array(items) => items.iter().map(Self::from_json_value).collect(),
            _ => Ok(vec![Self::from_json_value(&v)?]),
        }
    }
}

fn markdown_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn tsv_escape(s: &str) -> String {
    s.replace(['\t', '\n'], " ")
}

/// Renders one table. Markdown and TSV carry no title line; JSON does.
pub fn render_table(table: &ReportTable, format: OutputFormat) -> Result<String, ReportError> {
    table.validate()?;
    let mut out = String::new();
    match format {
        OutputFormat::Markdown => {
            let line = |cells: Vec<String>| format!("| {} |\n", cells.join(" | "));
            out.push_str(&line(table.headers.iter().map(|h| markdown_escape(h)).collect()));
            out.push('|');
            for _ in &table.headers {
                out.push_str("---|");
            }
            out.push('\n');
            for row in &table.rows {
                out.push_str(&line(row.iter().map(|c| markdown_escape(&c.display())).collect()));
            }
            // drop the final newline so single tables compose cleanly
            out.pop();
        }
        OutputFormat::Tsv => {
            let headers: Vec<String> = table.headers.iter().map(|h| tsv_escape(h)).collect();
            out.push_str(&headers.join("\t"));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|c| tsv_escape(&c.display())).collect();
                out.push_str(&cells.join("\t"));
                out.push('\n');
            }
        }
        OutputFormat::Json => {
            let mut seen = std::collections::BTreeSet::new();
            if let Some(dup) = table.headers.iter().find(|h| !seen.insert(h.as_str())) {
                return Err(ReportError::DuplicateHeader(dup.clone()));
            }
            out = serde_json::to_string_pretty(&table.to_json_value()).expect("json renders");
        }
    }
    Ok(out)
}

/// Renders several tables into one document.
pub fn render_tables(tables: &[ReportTable], format: OutputFormat) -> Result<String, ReportError> {
    match format {
        OutputFormat::Json => {
            for t in tables {
                render_table(t, format)?;
            }
            let all: Vec<Value> = tables.iter().map(ReportTable::to_json_value).collect();
            let mut s = serde_json::to_string_pretty(&all).expect("json renders");
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Markdown => {
            let mut out = String::new();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                if !t.title.is_empty() {
                    out.push_str(&format!("### {}\n\n", t.title));
                }
                out.push_str(&render_table(t, format)?);
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Tsv => {
            let mut out = String::new();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&render_table(t, format)?);
            }
            Ok(out)
        }
    }
}

/// Concatenates rows of tables sharing title and headers, keeping first-seen
/// order.
pub fn merge_tables(tables: Vec<ReportTable>) -> Vec<ReportTable> {
    let mut out: Vec<ReportTable> = Vec::new();
    for t in tables {
        match out
            .iter_mut()
            .find(|o| o.title == t.title && o.headers == t.headers)
        {
            Some(existing) => existing.rows.extend(t.rows),
            None => out.push(t),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_markdown() {
        let mut t = ReportTable::new("", ["h"]);
        t.push_row(vec![Cell::text("v")]);
        assert_eq!(render_table(&t, OutputFormat::Markdown).unwrap(), "| h |\n|---|\n| v |");
    }

    #[test]
    fn percentages_and_daggers() {
        assert_eq!(Cell::pct(57.8).display(), "57.8");
        assert_eq!(Cell::pct(57.84).display(), "57.8");
        assert_eq!(Cell::pct_count(70.0, 883).with_dagger(true).display(), "70% (883)†");
        assert_eq!(Cell::number(44.7449, 2).display(), "44.74");
        assert_eq!(Cell::missing().display(), "n/a");
    }

    #[test]
    fn rounding_is_half_to_even() {
        assert_eq!(Cell::number(0.25, 1).display(), "0.2");
        assert_eq!(Cell::number(0.75, 1).display(), "0.8");
        assert_eq!(Cell::number(2.5, 0).display(), "2");
        assert_eq!(Cell::number(3.5, 0).display(), "4");
        assert_eq!(Cell::number(12.125, 2).display(), "12.12");
    }

    #[test]
    fn tsv_has_one_header_line() {
        let mut t = ReportTable::new("T", ["a", "b"]);
        t.push_row(vec![Cell::pct(1.0), Cell::text("x")]);
        t.push_row(vec![Cell::pct(2.0), Cell::text("y")]);
        assert_eq!(render_table(&t, OutputFormat::Tsv).unwrap(), "a\tb\n1.0\tx\n2.0\ty\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut t = ReportTable::new("T", ["a", "b"]);
        t.push_row(vec![Cell::pct(1.0)]);
        assert!(matches!(
            render_table(&t, OutputFormat::Markdown),
            Err(ReportError::Ragged { row: 0, expected: 2, found: 1 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let mut t = ReportTable::new("Prefs", ["Model", "All (#)", "F1"]);
        t.push_row(vec![
            Cell::text("DPR+GPT-3"),
            Cell::pct_count(70.64, 883).with_dagger(true),
            Cell::number(0.1 + 0.2, 2),
        ]);
        let s = render_table(&t, OutputFormat::Json).unwrap();
        let back = ReportTable::from_json_str(&s).unwrap();
        assert_eq!(back, vec![t.clone()]);
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["rows"][0]["All (#)"]["display"], "71% (883)†");
    }

    #[test]
    fn duplicate_headers_rejected_for_json() {
        let t = ReportTable::new("T", ["a", "a"]);
        assert!(matches!(render_table(&t, OutputFormat::Json), Err(ReportError::DuplicateHeader(_))));
    }

    #[test]
    fn merge_concatenates_rows() {
        let mut a = ReportTable::new("T", ["m"]);
        a.push_row(vec![Cell::text("x")]);
        let mut b = a.clone();
        b.rows[0] = vec![Cell::text("y")];
        let c = ReportTable::new("U", ["m"]);
        let merged = merge_tables(vec![a, c, b]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].rows.len(), 2);
    }
}
