//! The fourteen easy variants, each a deterministic example or dataset rewrite
//! that records where it put the answer and query.

mod options;
mod rng;
mod sidecar;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Dataset, Example, Span};
use crate::declarative::{to_declarative, ParseTree};
use crate::{Error, Result};

pub use options::{drop_options, options_foreign, remove_options};
pub use rng::SeededRng;
pub use sidecar::{read_passage_sidecar, sidecar_passage, SidecarReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    Q1,
    Q2,
    O1,
    O2,
    O3,
}

impl TransformId {
    pub const ALL: [TransformId; 14] = [
        TransformId::P1,
        TransformId::P2,
        TransformId::P3,
        TransformId::P4,
        TransformId::P5,
        TransformId::P6,
        TransformId::P7,
        TransformId::P8,
        TransformId::P9,
        TransformId::Q1,
        TransformId::Q2,
        TransformId::O1,
        TransformId::O2,
        TransformId::O3,
    ];
}

impl fmt::Display for TransformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TransformId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransformId::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let valid: Vec<String> = TransformId::ALL.iter().map(|t| t.to_string()).collect();
                Error::invalid(format!(
                    "unknown transform id {s:?}; valid ids: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// What a transform did to an example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub transform_id: TransformId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_span: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_span: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl Provenance {
    pub fn new(transform_id: TransformId) -> Self {
        Provenance {
            transform_id,
            answer_span: None,
            query_span: None,
            seed: None,
            notes: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendMode {
    /// P1
    Answer,
    /// P2
    QueryAnswer,
    /// P3
    Declarative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplaceMode {
    /// P6
    QueryAnswer,
    /// P7
    Declarative,
    /// P8
    AnswerOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HintMode {
    /// Q1
    Answer,
    /// Q2
    NotAnswer,
}

/// Text assembled from segments joined by single spaces, remembering where
/// each segment landed.
#[derive(Default)]
struct Assembler {
    text: String,
}

impl Assembler {
    fn push(&mut self, segment: &str) -> Range<usize> {
        if segment.is_empty() {
            return self.text.len()..self.text.len();
        }
        if !self.text.is_empty() {
            self.text.push(' ');
        }
        let start = self.text.len();
        self.text.push_str(segment);
        start..self.text.len()
    }

    /// Push `segment`, returning the byte range of `inner` within it.
    fn push_with(
        &mut self,
        segment: &str,
        inner: Option<Range<usize>>,
    ) -> (Range<usize>, Option<Range<usize>>) {
        let outer = self.push(segment);
        let inner = inner.map(|r| outer.start + r.start..outer.start + r.end);
        (outer, inner)
    }
}

fn span_of(passage: &str, bytes: Range<usize>) -> Option<Span> {
    let tokens = tokenize(passage);
    let r = tokens.tokens_within(bytes);
    (r.start < r.end).then(|| Span::new(r.start, r.end))
}

fn with_provenance(ex: &Example, provenance: Provenance) -> Example {
    Example {
        provenance: Some(provenance),
        ..ex.clone()
    }
}

fn truncated(text: &str, max_chars: usize) -> String {
    match text.char_indices().nth(max_chars) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_string(),
    }
}

/// P1, P2, P3: add answer material after the passage.
pub fn append_to_passage(
    ex: &Example,
    mode: AppendMode,
    parse: Option<&ParseTree>,
) -> Result<Example> {
    let answer = ex.answer();
    let mut asm = Assembler::default();
    asm.push(ex.passage.trim_end());
    let (id, answer_bytes, query_bytes) = match mode {
        AppendMode::Answer => (TransformId::P1, Some(asm.push(answer)), None),
        AppendMode::QueryAnswer => {
            let q = asm.push(ex.query.trim());
            (TransformId::P2, Some(asm.push(answer)), Some(q))
        }
        AppendMode::Declarative => {
            let decl = to_declarative(&ex.query, answer, parse)?;
            let (sentence, answer_bytes) = asm.push_with(&decl.sentence, decl.answer_range);
            (TransformId::P3, answer_bytes, Some(sentence))
        }
    };
    finish_passage(ex, id, asm.text, answer_bytes, query_bytes, String::new())
}

/// P6, P7, P8: throw the passage away.
pub fn replace_passage(
    ex: &Example,
    mode: ReplaceMode,
    parse: Option<&ParseTree>,
) -> Result<Example> {
    let answer = ex.answer();
    let mut asm = Assembler::default();
    let (id, answer_bytes, query_bytes) = match mode {
        ReplaceMode::QueryAnswer => {
            let q = asm.push(ex.query.trim());
            (TransformId::P6, Some(asm.push(answer)), Some(q))
        }
        ReplaceMode::Declarative => {
            let decl = to_declarative(&ex.query, answer, parse)?;
            let (sentence, answer_bytes) = asm.push_with(&decl.sentence, decl.answer_range);
            (TransformId::P7, answer_bytes, Some(sentence))
        }
        ReplaceMode::AnswerOnly => (TransformId::P8, Some(asm.push(answer)), None),
    };
    let notes = format!("original passage: {}", truncated(&ex.passage, 80));
    finish_passage(ex, id, asm.text, answer_bytes, query_bytes, notes)
}

/// P9: a hint sentence before the passage and the answer sentence after it.
pub fn hint_sandwich(ex: &Example) -> Result<Example> {
    let query = ex.query.trim();
    let mut asm = Assembler::default();
    asm.push(&format!(
        "The answer to {query} is at the end of the passage."
    ));
    asm.push(ex.passage.trim());
    let prefix = format!("The answer to {query} is ");
    let last = asm.push(&format!("{prefix}{}.", ex.answer()));
    let query_start = last.start + "The answer to ".len();
    let answer_start = last.start + prefix.len();
    let answer_bytes = answer_start..answer_start + ex.answer().len();
    let query_bytes = query_start..query_start + query.len();
    finish_passage(
        ex,
        TransformId::P9,
        asm.text,
        Some(answer_bytes),
        Some(query_bytes),
        String::new(),
    )
}

fn finish_passage(
    ex: &Example,
    id: TransformId,
    passage: String,
    answer_bytes: Option<Range<usize>>,
    query_bytes: Option<Range<usize>>,
    notes: String,
) -> Result<Example> {
    let provenance = Provenance {
        transform_id: id,
        answer_span: answer_bytes.and_then(|r| span_of(&passage, r)),
        query_span: query_bytes.and_then(|r| span_of(&passage, r)),
        seed: None,
        notes,
    };
    Ok(Example {
        passage,
        provenance: Some(provenance),
        ..ex.clone()
    })
}

/// Q1, Q2: extend the query with a hint.
pub fn query_hint(ex: &Example, mode: HintMode) -> Result<Example> {
    let query = ex.query.trim_end();
    let (id, query) = match mode {
        HintMode::Answer => (
            TransformId::Q1,
            format!("{query} Answer is {}.", ex.answer()),
        ),
        HintMode::NotAnswer => {
            if ex.options.len() < 2 {
                return Err(Error::invalid(format!(
                    "{}: Q2 needs at least 2 options",
                    ex.id
                )));
            }
            let wrong: Vec<&str> = ex
                .options
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != ex.answer_index)
                .map(|(_, o)| o.as_str())
                .collect();
            (
                TransformId::Q2,
                format!("{query} Answer is not {}.", wrong.join(", ")),
            )
        }
    };
    Ok(Example {
        query,
        ..with_provenance(ex, Provenance::new(id))
    })
}

/// O1: every option becomes the declarative form of (query, option).
pub fn options_declarative(ex: &Example, parse: Option<&ParseTree>) -> Result<Example> {
    let options = ex
        .options
        .iter()
        .map(|o| to_declarative(&ex.query, o, parse).map(|d| d.sentence))
        .collect::<Result<Vec<_>>>()?;
    Ok(Example {
        options,
        ..with_provenance(ex, Provenance::new(TransformId::O1))
    })
}

/// Everything a dataset-level run may need besides the dataset itself.
#[derive(Debug, Default, Clone)]
pub struct TransformRequest<'a> {
    pub seed: u64,
    /// Options to keep for O3.
    pub keep: Option<usize>,
    pub parses: Option<&'a HashMap<String, ParseTree>>,
    pub sidecar: Option<&'a HashMap<String, String>>,
    pub allow_missing: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransformReport {
    /// Examples passed through unchanged because their sidecar entry was missing.
    pub passed_through: Vec<String>,
    /// P5 sidecar passages that are not a subsequence of the original sentences.
    pub warnings: Vec<String>,
}

/// Apply one transform to a whole dataset, preserving example order and count.
pub fn transform_dataset(
    dataset: &Dataset,
    id: TransformId,
    req: &TransformRequest,
) -> Result<(Dataset, TransformReport)> {
    let parse_for = |ex: &Example| req.parses.and_then(|p| p.get(&ex.id));
    let per_example = |f: &(dyn Fn(&Example) -> Result<Example> + Sync)| -> Result<Vec<Example>> {
        dataset.examples.par_iter().map(f).collect()
    };
    let mut report = TransformReport::default();
    let examples = match id {
        TransformId::P1 => per_example(&|e| append_to_passage(e, AppendMode::Answer, None))?,
        TransformId::P2 => per_example(&|e| append_to_passage(e, AppendMode::QueryAnswer, None))?,
        TransformId::P3 => {
            per_example(&|e| append_to_passage(e, AppendMode::Declarative, parse_for(e)))?
        }
        TransformId::P6 => per_example(&|e| replace_passage(e, ReplaceMode::QueryAnswer, None))?,
        TransformId::P7 => {
            per_example(&|e| replace_passage(e, ReplaceMode::Declarative, parse_for(e)))?
        }
        TransformId::P8 => per_example(&|e| replace_passage(e, ReplaceMode::AnswerOnly, None))?,
        TransformId::P9 => per_example(&hint_sandwich)?,
        TransformId::Q1 => per_example(&|e| query_hint(e, HintMode::Answer))?,
        TransformId::Q2 => per_example(&|e| query_hint(e, HintMode::NotAnswer))?,
        TransformId::O1 => per_example(&|e| options_declarative(e, parse_for(e)))?,
        TransformId::O2 => options_foreign(dataset, SeededRng::new(req.seed))?.examples,
        TransformId::O3 => {
            let keep = req
                .keep
                .ok_or_else(|| Error::invalid("O3 requires the number of options to keep"))?;
            let rng = SeededRng::new(req.seed);
            per_example(&|e| {
                let mut stream = rng.stream(&e.id);
                let mut out = drop_options(e, keep, &mut stream, None)?;
                if let Some(p) = out.provenance.as_mut() {
                    p.seed = Some(req.seed);
                }
                Ok(out)
            })?
        }
        TransformId::P4 | TransformId::P5 => {
            let sidecar = req
                .sidecar
                .ok_or_else(|| Error::invalid(format!("{id} requires a sidecar file")))?;
            let (out, sidecar_report) = sidecar_passage(dataset, sidecar, id, req.allow_missing)?;
            report.passed_through = sidecar_report.missing;
            report.warnings = sidecar_report.warnings;
            out.examples
        }
    };
    Ok((
        Dataset {
            examples,
            source_tag: id.to_string(),
        },
        report,
    ))
}
