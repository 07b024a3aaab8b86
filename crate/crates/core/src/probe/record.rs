use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// Which attention module a record was exported from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    /// Output-layer weights over passage tokens (a vector).
    Output,
    /// Passage-by-query affinity matrix.
    QueryAware,
    /// Passage-by-passage self-affinity matrix.
    #[serde(rename = "self")]
    SelfMatching,
}

impl Layer {
    pub fn tag(self) -> &'static str {
        match self {
            Layer::Output => "output",
            Layer::QueryAware => "query_aware",
            Layer::SelfMatching => "self",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Layer> {
        [Layer::Output, Layer::QueryAware, Layer::SelfMatching]
            .into_iter()
            .find(|l| l.tag() == tag)
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Attention exported for one example. Matrices are row-major with one row
/// per passage token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub id: String,
    pub layer: Layer,
    pub passage_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_len: Option<usize>,
    pub weights: Vec<f64>,
}

impl AttentionRecord {
    pub fn output(id: impl Into<String>, weights: Vec<f64>) -> Self {
        AttentionRecord {
            id: id.into(),
            layer: Layer::Output,
            passage_len: weights.len(),
            query_len: None,
            weights,
        }
    }

    pub fn query_aware(
        id: impl Into<String>,
        passage_len: usize,
        query_len: usize,
        weights: Vec<f64>,
    ) -> Self {
        AttentionRecord {
            id: id.into(),
            layer: Layer::QueryAware,
            passage_len,
            query_len: Some(query_len),
            weights,
        }
    }

    pub fn self_matching(id: impl Into<String>, passage_len: usize, weights: Vec<f64>) -> Self {
        AttentionRecord {
            id: id.into(),
            layer: Layer::SelfMatching,
            passage_len,
            query_len: None,
            weights,
        }
    }

    /// Columns per row: 1 for output vectors.
    pub fn cols(&self) -> usize {
        match self.layer {
            Layer::Output => 1,
            Layer::QueryAware => self.query_len.unwrap_or(0),
            Layer::SelfMatching => self.passage_len,
        }
    }

    pub fn expected_len(&self) -> usize {
        self.passage_len * self.cols()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.weights[r * c..(r + 1) * c]
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer == Layer::QueryAware && self.query_len.is_none() {
            return Err(Error::invalid("query_aware record needs query_len"));
        }
        if self.weights.len() != self.expected_len() {
            return Err(Error::invalid(format!(
                "expected {} weights, got {}",
                self.expected_len(),
                self.weights.len()
            )));
        }
        if let Some(i) = self.weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::invalid(format!("weight {i} is not finite")));
        }
        Ok(())
    }

    /// Non-negative and summing to one within `tolerance`.
    pub fn is_normalized(&self, tolerance: f64) -> bool {
        self.weights.iter().all(|w| *w >= 0.0)
            && (self.weights.iter().sum::<f64>() - 1.0).abs() <= tolerance
    }
}

/// Parse attention JSONL. Each line carries `id`, `layer`, `passage_len`,
/// `query_len` (query_aware only) and the flat row-major `weights`.
pub fn load_attention_str(text: &str) -> Result<Vec<AttentionRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| Error::line(lineno, format!("invalid JSON: {e}")))?;
        if value.get("_meta").is_some() {
            continue;
        }
        let tag = value
            .get("layer")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::line(lineno, "missing field layer"))?;
        if Layer::from_tag(tag).is_none() {
            return Err(Error::line(lineno, format!("unknown layer tag {tag:?}")));
        }
        let record: AttentionRecord =
            serde_json::from_value(value).map_err(|e| Error::line(lineno, e.to_string()))?;
        record
            .validate()
            .map_err(|e| Error::line(lineno, e.to_string()))?;
        if !seen.insert((record.id.clone(), record.layer)) {
            return Err(Error::line(
                lineno,
                format!("duplicate {} record for {}", record.layer, record.id),
            ));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_attention(path: &Path) -> Result<Vec<AttentionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_attention_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_line() {
        let recs = load_attention_str(
            r#"{"id":"e1","layer":"output","passage_len":3,"weights":[0.2,0.5,0.3]}"#,
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].layer, Layer::Output);
        assert!(recs[0].is_normalized(1e-4));
    }

    #[test]
    fn wrong_weight_count() {
        let err = load_attention_str(
            r#"{"id":"e1","layer":"output","passage_len":3,"weights":[0.2,0.5]}"#,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "line 1: expected 3 weights, got 2");
    }

    #[test]
    fn query_aware_is_row_major() {
        let recs = load_attention_str(
            r#"{"id":"e1","layer":"query_aware","passage_len":2,"query_len":2,"weights":[1,2,3,4]}"#,
        )
        .unwrap();
        assert_eq!(recs[0].row(0), [1.0, 2.0]);
        assert_eq!(recs[0].row(1), [3.0, 4.0]);
    }

    #[test]
    fn unknown_layer() {
        let err = load_attention_str(
            "\n{\"id\":\"e1\",\"layer\":\"cross\",\"passage_len\":1,\"weights\":[1]}",
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "line 2: unknown layer tag \"cross\"");
    }

    #[test]
    fn self_matrix_is_square() {
        let err =
            load_attention_str(r#"{"id":"e","layer":"self","passage_len":2,"weights":[1,2,3]}"#)
                .unwrap_err();
        assert!(err.to_string().contains("expected 4 weights"));
    }

    #[test]
    fn duplicates_rejected() {
        let line = r#"{"id":"e","layer":"output","passage_len":1,"weights":[1]}"#;
        assert!(load_attention_str(&format!("{line}\n{line}")).is_err());
    }

    #[test]
    fn unnormalized_detected() {
        let r = AttentionRecord::output("e", vec![0.5, 0.6]);
        assert!(!r.is_normalized(1e-4));
        let r = AttentionRecord::output("e", vec![1.2, -0.2]);
        assert!(!r.is_normalized(1e-4));
    }
}
