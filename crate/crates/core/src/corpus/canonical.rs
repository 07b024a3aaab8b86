//! Canonical JSONL: one example object per line, preceded by a `_meta` header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Dataset, Example};
use crate::{Error, Result};

const REQUIRED: [&str; 5] = ["id", "passage", "query", "options", "answer_index"];

/// Header record written as the first line of every canonical file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub source_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Meta {
    pub fn for_dataset(dataset: &Dataset) -> Self {
        Meta {
            tool: "narc".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            source_tag: dataset.source_tag.clone(),
            subcommand: None,
            seed: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "_meta")]
    meta: Meta,
}

pub fn write_canonical(dataset: &Dataset, path: &Path, meta: Option<&Meta>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_canonical_to(dataset, &mut w, meta).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Serialize to any writer. Without an explicit `meta`, a default header is
/// written so the source tag survives the round trip.
pub fn write_canonical_to<W: Write>(
    dataset: &Dataset,
    w: &mut W,
    meta: Option<&Meta>,
) -> Result<()> {
    let meta = meta.cloned().unwrap_or_else(|| Meta::for_dataset(dataset));
    let io = |e| Error::io("<writer>", e);
    serde_json::to_writer(&mut *w, &Header { meta }).map_err(|e| Error::Invalid(e.to_string()))?;
    w.write_all(b"\n").map_err(io)?;
    for example in &dataset.examples {
        serde_json::to_writer(&mut *w, example).map_err(|e| Error::Invalid(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn read_canonical(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dataset = read_canonical_str(&text)?;
    if dataset.source_tag.is_empty() {
        dataset.source_tag = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(dataset)
}

pub fn read_canonical_str(text: &str) -> Result<Dataset> {
    let mut examples = Vec::new();
    let mut source_tag = String::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| Error::line(lineno, format!("invalid JSON: {e}")))?;
        let Some(obj) = value.as_object() else {
            return Err(Error::line(lineno, "expected a JSON object"));
        };
        if let Some(meta) = obj.get("_meta") {
            if let Some(tag) = meta.get("source_tag").and_then(Value::as_str) {
                source_tag = tag.to_string();
            }
            continue;
        }
        if let Some(field) = REQUIRED.iter().find(|f| !obj.contains_key(**f)) {
            return Err(Error::line(lineno, format!("missing field {field}")));
        }
        let example: Example =
            serde_json::from_value(value).map_err(|e| Error::line(lineno, e.to_string()))?;
        example
            .validate()
            .map_err(|e| Error::line(lineno, e.to_string()))?;
        examples.push(example);
    }
    let dataset = Dataset {
        examples,
        source_tag,
    };
    dataset.validate()?;
    Ok(dataset)
}
