//! Question-to-statement conversion.
//!
//! Three methods, tried in order:
//!
//! 1. **Blank substitution** for cloze queries: the first run of `_` takes the
//!    answer, later runs are dropped.
//! 2. **Parse rules** when a constituency parse of the query is available. The
//!    wh-phrase is removed, subject-auxiliary inversion is undone and the answer
//!    is placed in the gap:
//!
//!    | query shape                          | result                                   |
//!    |--------------------------------------|------------------------------------------|
//!    | wh-subject: `WH VP`                  | `ANSWER VP`                              |
//!    | do-support: `WH do/does/did NP VB …` | `NP VB+tense [objects] ANSWER …`         |
//!    | other aux: `WH AUX NP [VP …]`        | `NP AUX [VP-head objects] ANSWER …`      |
//!    | adverbial wh (`WHADVP`, `WHADJP`)    | answer goes last instead of after the verb |
//!
//!    Material before the wh-phrase (`According to the passage, …`) is kept as a
//!    prefix, the result is capitalized and closed with `.`.
//! 3. **Heuristic fallback** with no parse: strip a leading wh-word and the
//!    auxiliary after it, then append `is ANSWER` when no verb is left, else
//!    ` ANSWER`.

mod ptb;
mod rules;

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use ptb::{parse_ptb, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BlankSubstitution,
    ParseRule,
    HeuristicFallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclarativeResult {
    pub sentence: String,
    pub method: Method,
    /// Set when the fallback found neither a blank nor a wh-word.
    pub warning: bool,
    /// Byte range of the verbatim answer inside `sentence`; `None` when
    /// terminator normalization had to cut into it.
    pub answer_range: Option<Range<usize>>,
}

/// Read a `{id, parse}` JSONL sidecar of bracketed query parses.
pub fn read_parse_sidecar(path: &Path) -> Result<HashMap<String, ParseTree>> {
    #[derive(Deserialize)]
    struct Line {
        id: String,
        parse: String,
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Line {
            line: lineno,
            message: format!("invalid JSON: {e}"),
        })?;
        if value.get("_meta").is_some() {
            continue;
        }
        let entry: Line = serde_json::from_value(value).map_err(|e| Error::Line {
            line: lineno,
            message: e.to_string(),
        })?;
        let tree = parse_ptb(&entry.parse).map_err(|e| Error::Line {
            line: lineno,
            message: format!("{}: {e}", entry.id),
        })?;
        if out.insert(entry.id.clone(), tree).is_some() {
            return Err(Error::Line {
                line: lineno,
                message: format!("duplicate id {}", entry.id),
            });
        }
    }
    Ok(out)
}

pub fn has_blank(query: &str) -> bool {
    query.contains('_')
}

/// Rewrite `(query, answer)` as one declarative sentence.
pub fn to_declarative(
    query: &str,
    answer: &str,
    parse: Option<&ParseTree>,
) -> Result<DeclarativeResult> {
    let answer = answer.trim();
    if query.trim().is_empty() {
        return Err(Error::invalid("query must not be empty"));
    }
    if answer.is_empty() {
        return Err(Error::invalid("answer must not be empty"));
    }
    let built = if has_blank(query) {
        rules::substitute_blank(query, answer)
    } else if let Some(built) = parse.and_then(|tree| rules::apply_parse(query, answer, tree)) {
        built
    } else {
        rules::fallback(query, answer)
    };
    Ok(built.finish())
}
