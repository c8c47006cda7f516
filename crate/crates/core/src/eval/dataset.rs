use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalExample {
    pub id: String,
    pub query: String,
    pub article: String,
    pub gold_answers: Vec<String>,
    pub dataset_tag: String,
}

pub const DEFAULT_DATASET_TAG: &str = "default";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Examples read from a file, plus the lines skipped in lenient mode.
#[derive(Debug, Clone, Default)]
pub struct LoadedExamples {
    pub examples: Vec<EvalExample>,
    pub skipped: Vec<(usize, String)>,
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    names
        .iter()
        .find_map(|n| obj.get(*n).filter(|v| !v.is_null()))
}

fn string_field(
    obj: &serde_json::Map<String, Value>,
    names: &[&str],
) -> Result<Option<String>, String> {
    match field(obj, names) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(_) => Err(format!("field `{}` must be a string", names[0])),
    }
}

/// Maps one JSON record to an example.
///
/// Field map: `_id` | `id` → id (default `line-N`); `input` | `query` →
/// query; `context` | `article` → article; `answers` (list, or a single
/// string) → gold answers; `dataset` → dataset tag (default `default`).
pub fn parse_record(line_no: usize, line: &str) -> Result<EvalExample, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("record is not a JSON object".into());
    };
    let id = string_field(&obj, &["_id", "id"])?.unwrap_or_else(|| format!("line-{line_no}"));
    let query = string_field(&obj, &["input", "query"])?.ok_or("missing `input`/`query`")?;
    let article =
        string_field(&obj, &["context", "article"])?.ok_or("missing `context`/`article`")?;
    let gold_answers: Vec<String> = match field(&obj, &["answers"]) {
        None => return Err("missing `answers`".into()),
        Some(Value::String(s)) => vec![s.clone()],
        Some(Value::Array(xs)) => xs
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_owned)
                    .ok_or("`answers` must hold strings")
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err("`answers` must be a list of strings".into()),
    };
    let dataset_tag =
        string_field(&obj, &["dataset"])?.unwrap_or_else(|| DEFAULT_DATASET_TAG.into());
    if gold_answers.is_empty() {
        return Err("`answers` is empty".into());
    }
    if query.trim().is_empty() {
        return Err("query is empty".into());
    }
    if article.trim().is_empty() {
        return Err("article is empty".into());
    }
    Ok(EvalExample {
        id,
        query,
        article,
        gold_answers,
        dataset_tag,
    })
}

/// Reads JSONL examples. Blank lines are ignored. Malformed lines abort the
/// read unless `lenient`, in which case they are skipped and reported.
pub fn read_examples(reader: impl BufRead, lenient: bool) -> Result<LoadedExamples, DatasetError> {
    let mut out = LoadedExamples::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(line_no, &line) {
            Ok(ex) => out.examples.push(ex),
            Err(message) if lenient => {
                tracing::warn!(line = line_no, %message, "skipping malformed example");
                out.skipped.push((line_no, message));
            }
            Err(message) => {
                return Err(DatasetError::Parse {
                    line: line_no,
                    message,
                })
            }
        }
    }
    Ok(out)
}

pub fn load_examples(path: &Path, lenient: bool) -> Result<LoadedExamples, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_examples(BufReader::new(file), lenient)
}
