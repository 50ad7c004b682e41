//! Line-delimited JSON datasets.
//!
//! Pairwise records come in two modes, told apart by their fields (or an
//! explicit `"mode"`):
//!
//! ```text
//! vary_answer:  {"id", "question", "documents": [..], "answer_a", "answer_b"}
//! vary_context: {"id", "question", "answer", "documents_a": [..], "documents_b": [..]}
//! ```
//!
//! Attribution records: `{"id", "question", "answer", "documents": [..],
//! "correct_doc_index"}`. Unknown fields are ignored. Blank lines are
//! skipped; line numbers in errors are 1-based.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PairwiseRecord {
    /// Condition A and B are two answers scored against one context.
    VaryAnswer {
        id: String,
        question: String,
        documents: Vec<String>,
        answer_a: String,
        answer_b: String,
    },
    /// Condition A and B are two contexts for one answer.
    VaryContext {
        id: String,
        question: String,
        answer: String,
        documents_a: Vec<String>,
        documents_b: Vec<String>,
    },
}

impl PairwiseRecord {
    pub fn id(&self) -> &str {
        match self {
            PairwiseRecord::VaryAnswer { id, .. } | PairwiseRecord::VaryContext { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub documents: Vec<String>,
    pub correct_doc_index: usize,
}

pub trait Record: Sized {
    fn id(&self) -> &str;
    fn from_json(obj: &Map<String, Value>, line: usize) -> Result<Self, HarnessError>;
}

impl Record for PairwiseRecord {
    fn id(&self) -> &str {
        PairwiseRecord::id(self)
    }

    fn from_json(obj: &Map<String, Value>, line: usize) -> Result<Self, HarnessError> {
        let mode = match obj.get("mode") {
            Some(Value::String(m)) => m.clone(),
            Some(_) => return Err(schema(line, "mode", "must be a string")),
            None if obj.contains_key("answer_a") || obj.contains_key("answer_b") => "vary_answer".into(),
            None if obj.contains_key("documents_a") || obj.contains_key("documents_b") => {
                "vary_context".into()
            }
            None => {
                return Err(schema(
                    line,
                    "answer_a",
                    "record needs answer_a/answer_b or documents_a/documents_b",
                ))
            }
        };
        match mode.as_str() {
            "vary_answer" => Ok(PairwiseRecord::VaryAnswer {
                id: string_field(obj, "id", line)?,
                question: string_field(obj, "question", line)?,
                documents: documents_field(obj, "documents", line)?,
                answer_a: string_field(obj, "answer_a", line)?,
                answer_b: string_field(obj, "answer_b", line)?,
            }),
            "vary_context" => Ok(PairwiseRecord::VaryContext {
                id: string_field(obj, "id", line)?,
                question: string_field(obj, "question", line)?,
                answer: string_field(obj, "answer", line)?,
                documents_a: documents_field(obj, "documents_a", line)?,
                documents_b: documents_field(obj, "documents_b", line)?,
            }),
            other => Err(schema(line, "mode", &format!("unknown mode {other:?}"))),
        }
    }
}

impl Record for AttributionRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn from_json(obj: &Map<String, Value>, line: usize) -> Result<Self, HarnessError> {
        let documents = documents_field(obj, "documents", line)?;
        let correct_doc_index = match obj.get("correct_doc_index") {
            Some(v) => v
                .as_u64()
                .ok_or_else(|| schema(line, "correct_doc_index", "must be a non-negative integer"))?
                as usize,
            None => return Err(schema(line, "correct_doc_index", "missing")),
        };
        if correct_doc_index >= documents.len() {
            return Err(schema(
                line,
                "correct_doc_index",
                &format!("{correct_doc_index} out of range for {} documents", documents.len()),
            ));
        }
        Ok(AttributionRecord {
            id: string_field(obj, "id", line)?,
            question: string_field(obj, "question", line)?,
            answer: string_field(obj, "answer", line)?,
            documents,
            correct_doc_index,
        })
    }
}

fn schema(line: usize, field: &str, message: &str) -> HarnessError {
    HarnessError::Schema {
        line,
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn string_field(obj: &Map<String, Value>, field: &str, line: usize) -> Result<String, HarnessError> {
    match obj.get(field) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(schema(line, field, "must not be empty")),
        Some(_) => Err(schema(line, field, "must be a string")),
        None => Err(schema(line, field, "missing")),
    }
}

fn documents_field(obj: &Map<String, Value>, field: &str, line: usize) -> Result<Vec<String>, HarnessError> {
    let Some(value) = obj.get(field) else {
        return Err(schema(line, field, "missing"));
    };
    let Value::Array(items) = value else {
        return Err(schema(line, field, "must be an array of strings"));
    };
    items
        .iter()
        .map(|v| match v {
            Value::String(s) => Ok(s.clone()),
            _ => Err(schema(line, field, "must be an array of strings")),
        })
        .collect()
}

/// A line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFailure {
    pub line: usize,
    pub error: HarnessError,
}

pub fn parse_records<R: Record, B: BufRead>(reader: B) -> (Vec<R>, Vec<LineFailure>) {
    let mut records: Vec<R> = Vec::new();
    let mut failures = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let parsed = line
            .map_err(|e| HarnessError::Io(e.to_string()))
            .and_then(|text| parse_line::<R>(&text, line_no));
        match parsed {
            Ok(None) => {}
            Ok(Some(record)) => {
                if seen.insert(record.id().to_string()) {
                    records.push(record);
                } else {
                    failures.push(LineFailure {
                        line: line_no,
                        error: HarnessError::DuplicateId {
                            line: line_no,
                            id: record.id().to_string(),
                        },
                    });
                }
            }
            Err(error) => failures.push(LineFailure { line: line_no, error }),
        }
    }
    (records, failures)
}

fn parse_line<R: Record>(text: &str, line: usize) -> Result<Option<R>, HarnessError> {
    if text.trim().is_empty() {
        return Ok(None);
    }
    let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
        line,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(HarnessError::Parse {
            line,
            message: "expected a JSON object".into(),
        });
    };
    R::from_json(&obj, line).map(Some)
}

/// Reads every record, collecting bad lines instead of stopping at them.
pub fn load_dataset_lenient<R: Record>(path: &Path) -> Result<(Vec<R>, Vec<LineFailure>), HarnessError> {
    let file = std::fs::File::open(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_records(std::io::BufReader::new(file)))
}

/// Reads every record; the first bad line is an error.
pub fn load_dataset<R: Record>(path: &Path) -> Result<Vec<R>, HarnessError> {
    let (records, failures) = load_dataset_lenient(path)?;
    match failures.into_iter().next() {
        Some(f) => Err(f.error),
        None => Ok(records),
    }
}
