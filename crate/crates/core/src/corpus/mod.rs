//! Canonical example model, RACE loading, tokenization and sentence splitting.

mod canonical;
mod race;
mod sentences;
mod tokenize;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::transforms::Provenance;
use crate::{Error, Result};

pub use canonical::{
    read_canonical, read_canonical_str, write_canonical, write_canonical_to, Meta,
};
pub use race::load_race_dir;
pub use sentences::split_sentences;
pub use tokenize::{tokenize, tokens_match, TokenizedText};

/// One multiple-choice item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub passage: String,
    pub query: String,
    pub options: Vec<String>,
    pub answer_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Example {
    pub fn answer(&self) -> &str {
        &self.options[self.answer_index]
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid("example id must not be empty"));
        }
        if self.options.len() < 2 {
            return Err(Error::invalid(format!(
                "{}: at least 2 options required, got {}",
                self.id,
                self.options.len()
            )));
        }
        if self.answer_index >= self.options.len() {
            return Err(Error::invalid(format!(
                "{}: answer_index {} out of range for {} options",
                self.id,
                self.answer_index,
                self.options.len()
            )));
        }
        if let Some(i) = self.options.iter().position(|o| o.is_empty()) {
            return Err(Error::invalid(format!("{}: option {i} is empty", self.id)));
        }
        Ok(())
    }
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when `0 <= start < end <= token_count`.
    pub fn fits(&self, token_count: usize) -> bool {
        self.start < self.end && self.end <= token_count
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub source_tag: String,
}

impl Dataset {
    pub fn new(examples: Vec<Example>, source_tag: impl Into<String>) -> Result<Self> {
        let dataset = Dataset {
            examples,
            source_tag: source_tag.into(),
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.examples.len());
        for example in &self.examples {
            example.validate()?;
            if !seen.insert(example.id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate example id {}",
                    example.id
                )));
            }
        }
        Ok(())
    }
}
