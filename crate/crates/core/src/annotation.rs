//! Human annotations for P5 (relevant sentences) and O3(H) (most confusing
//! option): types, validation, an append-only JSONL store and aggregation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_sentences, Dataset, Example};
use crate::transforms::{drop_options, Provenance, SeededRng, TransformId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    SentenceSelection,
    ConfusingOption,
}

impl AnnotationKind {
    /// Task name used on the command line.
    pub fn task(self) -> &'static str {
        match self {
            AnnotationKind::SentenceSelection => "p5",
            AnnotationKind::ConfusingOption => "o3h",
        }
    }
}

impl fmt::Display for AnnotationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.task())
    }
}

impl FromStr for AnnotationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p5" | "sentence_selection" => Ok(AnnotationKind::SentenceSelection),
            "o3h" | "o3(h)" | "confusing_option" => Ok(AnnotationKind::ConfusingOption),
            _ => Err(Error::invalid(format!(
                "unknown annotation kind {s:?} (expected p5 or o3h)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Sentences(Vec<usize>),
    Option(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub example_id: String,
    pub annotator: String,
    pub kind: AnnotationKind,
    pub payload: Payload,
    /// UTC seconds.
    pub timestamp: i64,
}

/// A rejected annotation, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl FieldError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        FieldError {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl Annotation {
    /// Check the payload against the example it refers to.
    pub fn validate(&self, ex: &Example) -> std::result::Result<(), FieldError> {
        if self.annotator.trim().is_empty() {
            return Err(FieldError::new("annotator", "must not be empty"));
        }
        if self.example_id != ex.id {
            return Err(FieldError::new(
                "example_id",
                format!("does not match example {}", ex.id),
            ));
        }
        match (self.kind, &self.payload) {
            (AnnotationKind::SentenceSelection, Payload::Sentences(indices)) => {
                if indices.is_empty() {
                    return Err(FieldError::new("payload", "select at least one sentence"));
                }
                if indices.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(FieldError::new(
                        "payload",
                        "sentence indices must be strictly increasing",
                    ));
                }
                let count = split_sentences(&ex.passage).len();
                if let Some(bad) = indices.iter().find(|&&i| i >= count) {
                    return Err(FieldError::new(
                        "payload",
                        format!("sentence index {bad} out of range ({count} sentences)"),
                    ));
                }
                Ok(())
            }
            (AnnotationKind::ConfusingOption, Payload::Option(i)) => {
                if *i == ex.answer_index {
                    return Err(FieldError::new("payload", "cannot mark the correct option"));
                }
                if *i >= ex.options.len() {
                    return Err(FieldError::new(
                        "payload",
                        format!(
                            "option index {i} out of range ({} options)",
                            ex.options.len()
                        ),
                    ));
                }
                Ok(())
            }
            (AnnotationKind::SentenceSelection, Payload::Option(_)) => Err(FieldError::new(
                "payload",
                "expected a list of sentence indices",
            )),
            (AnnotationKind::ConfusingOption, Payload::Sentences(_)) => {
                Err(FieldError::new("payload", "expected a single option index"))
            }
        }
    }
}

/// Parse a JSONL annotation store. Blank lines are skipped; a missing file is
/// an empty store.
pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ann: Annotation =
            serde_json::from_str(&line).map_err(|e| Error::line(i + 1, e.to_string()))?;
        out.push(ann);
    }
    Ok(out)
}

/// Append-only annotation store backed by a JSONL file.
///
/// Each accepted annotation is written and synced before `append` returns, so
/// a crash loses at most the annotation being submitted.
#[derive(Debug)]
pub struct AnnotationStore {
    path: PathBuf,
    annotations: Vec<Annotation>,
    keys: HashSet<(String, String, AnnotationKind)>,
}

#[derive(Debug, thiserror::Error)]
pub enum AppendError {
    #[error("duplicate annotation for ({0}, {1})")]
    Duplicate(String, String),
    #[error(transparent)]
    Store(#[from] Error),
}

impl AnnotationStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let annotations = read_annotations(&path)?;
        let keys = annotations.iter().map(key).collect();
        Ok(AnnotationStore {
            path,
            annotations,
            keys,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn contains(&self, example_id: &str, annotator: &str, kind: AnnotationKind) -> bool {
        self.keys
            .contains(&(example_id.to_string(), annotator.to_string(), kind))
    }

    pub fn append(&mut self, ann: Annotation) -> std::result::Result<(), AppendError> {
        let k = key(&ann);
        if self.keys.contains(&k) {
            return Err(AppendError::Duplicate(ann.example_id, ann.annotator));
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut line = serde_json::to_string(&ann).expect("annotation serializes");
        line.push('\n');
        file.write_all(line.as_bytes())
            .and_then(|_| file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        self.keys.insert(k);
        self.annotations.push(ann);
        Ok(())
    }
}

fn key(a: &Annotation) -> (String, String, AnnotationKind) {
    (a.example_id.clone(), a.annotator.clone(), a.kind)
}

/// Majority payload; ties go to the payload with the earliest timestamp, then
/// to the one seen first.
pub fn majority<'a>(annotations: impl IntoIterator<Item = &'a Annotation>) -> Option<&'a Payload> {
    let mut tally: Vec<(&Payload, usize, i64)> = Vec::new();
    for a in annotations {
        match tally.iter_mut().find(|(p, _, _)| *p == &a.payload) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 = entry.2.min(a.timestamp);
            }
            None => tally.push((&a.payload, 1, a.timestamp)),
        }
    }
    let mut best: Option<(&Payload, usize, i64)> = None;
    for t in tally {
        if best.is_none_or(|b| t.1 > b.1 || (t.1 == b.1 && t.2 < b.2)) {
            best = Some(t);
        }
    }
    best.map(|b| b.0)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApplyReport {
    /// Ids left unchanged because nobody annotated them.
    pub unannotated: Vec<String>,
}

/// Build the P5 or O3(H) dataset from stored annotations.
pub fn apply_annotations(
    dataset: &Dataset,
    annotations: &[Annotation],
    kind: AnnotationKind,
    allow_missing: bool,
) -> Result<(Dataset, ApplyReport)> {
    let mut grouped: HashMap<&str, Vec<&Annotation>> = HashMap::new();
    for a in annotations.iter().filter(|a| a.kind == kind) {
        if dataset.get(&a.example_id).is_none() {
            return Err(Error::invalid(format!(
                "unknown example id: {}",
                a.example_id
            )));
        }
        grouped.entry(a.example_id.as_str()).or_default().push(a);
    }

    let unannotated: Vec<String> = dataset
        .examples
        .iter()
        .filter(|e| !grouped.contains_key(e.id.as_str()))
        .map(|e| e.id.clone())
        .collect();
    if !unannotated.is_empty() && !allow_missing {
        return Err(Error::invalid(format!(
            "{} unannotated example(s): {}",
            unannotated.len(),
            unannotated.join(", ")
        )));
    }

    let mut out = Vec::with_capacity(dataset.len());
    for ex in &dataset.examples {
        let Some(group) = grouped.get(ex.id.as_str()) else {
            out.push(ex.clone());
            continue;
        };
        let payload = majority(group.iter().copied()).expect("group is non-empty");
        let probe = Annotation {
            example_id: ex.id.clone(),
            annotator: "store".into(),
            kind,
            payload: payload.clone(),
            timestamp: 0,
        };
        probe
            .validate(ex)
            .map_err(|e| Error::invalid(format!("{}: {e}", ex.id)))?;
        out.push(match payload {
            Payload::Sentences(indices) => select_sentences(ex, indices),
            Payload::Option(i) => {
                let mut rng = SeededRng::new(0).stream(&ex.id);
                drop_options(ex, ex.options.len() - 1, &mut rng, Some(*i))?
            }
        });
    }
    let tag = match kind {
        AnnotationKind::SentenceSelection => TransformId::P5.to_string(),
        AnnotationKind::ConfusingOption => "O3(H)".to_string(),
    };
    Ok((Dataset::new(out, tag)?, ApplyReport { unannotated }))
}

/// P5 passage: the chosen sentences in original order, joined by one space.
pub fn select_sentences(ex: &Example, indices: &[usize]) -> Example {
    let sentences = split_sentences(&ex.passage);
    let wanted: BTreeSet<usize> = indices.iter().copied().collect();
    let passage = wanted
        .iter()
        .filter_map(|&i| sentences.get(i))
        .map(|r| ex.passage[r.clone()].trim())
        .collect::<Vec<_>>()
        .join(" ");
    let mut provenance = Provenance::new(TransformId::P5);
    provenance.notes = format!("sentences {indices:?}");
    Example {
        passage,
        provenance: Some(provenance),
        ..ex.clone()
    }
}
