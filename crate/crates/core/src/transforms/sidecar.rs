use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::{Provenance, TransformId};
use crate::corpus::{split_sentences, Dataset, Example};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SidecarReport {
    /// Ids without a sidecar entry, passed through unchanged.
    pub missing: Vec<String>,
    /// Ids whose P5 passage is not a subsequence of the original sentences.
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct SidecarLine {
    id: String,
    passage: String,
}

/// Read a `{id, passage}` JSONL sidecar. `_meta` lines are skipped.
pub fn read_passage_sidecar(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::line(i + 1, format!("invalid JSON: {e}")))?;
        if value.get("_meta").is_some() {
            continue;
        }
        let entry: SidecarLine =
            serde_json::from_value(value).map_err(|e| Error::line(i + 1, e.to_string()))?;
        if out.insert(entry.id.clone(), entry.passage).is_some() {
            return Err(Error::line(i + 1, format!("duplicate id {}", entry.id)));
        }
    }
    Ok(out)
}

fn normalized_sentences(text: &str) -> Vec<String> {
    split_sentences(text)
        .into_iter()
        .map(|r| text[r].split_whitespace().collect::<Vec<_>>().join(" "))
        .collect()
}

/// True when every sentence of `selected` appears in `original`, in order.
pub(crate) fn is_sentence_subsequence(selected: &str, original: &str) -> bool {
    let original = normalized_sentences(original);
    let mut it = original.iter();
    normalized_sentences(selected)
        .iter()
        .all(|s| it.by_ref().any(|o| o == s))
}

/// P4 and P5 from externally produced passages.
pub fn sidecar_passage(
    dataset: &Dataset,
    sidecar: &HashMap<String, String>,
    transform_id: TransformId,
    allow_missing: bool,
) -> Result<(Dataset, SidecarReport)> {
    if !matches!(transform_id, TransformId::P4 | TransformId::P5) {
        return Err(Error::invalid(format!(
            "sidecar passages implement P4 and P5, not {transform_id}"
        )));
    }
    let mut report = SidecarReport {
        missing: dataset
            .examples
            .iter()
            .filter(|e| !sidecar.contains_key(&e.id))
            .map(|e| e.id.clone())
            .collect(),
        ..Default::default()
    };
    if !report.missing.is_empty() && !allow_missing {
        return Err(Error::invalid(format!(
            "sidecar has no passage for {} example(s): {}",
            report.missing.len(),
            report.missing.join(", ")
        )));
    }
    let mut examples = Vec::with_capacity(dataset.len());
    for ex in &dataset.examples {
        let Some(passage) = sidecar.get(&ex.id) else {
            examples.push(ex.clone());
            continue;
        };
        if transform_id == TransformId::P5 && !is_sentence_subsequence(passage, &ex.passage) {
            report.warnings.push(ex.id.clone());
        }
        let mut provenance = Provenance::new(transform_id);
        provenance.notes = "passage from sidecar".to_string();
        examples.push(Example {
            passage: passage.clone(),
            provenance: Some(provenance),
            ..ex.clone()
        });
    }
    Ok((
        Dataset {
            examples,
            source_tag: transform_id.to_string(),
        },
        report,
    ))
}
