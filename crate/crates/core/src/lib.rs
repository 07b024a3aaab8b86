//! Non-adversarial variants of multiple-choice reading-comprehension data and
//! quantitative probes for the attention layers of external RC models.
//!
//! The crate is organized around the canonical [`corpus::Example`]:
//!
//! * [`corpus`] loads RACE-format directories, tokenizes, splits sentences and
//!   reads/writes the canonical JSONL format.
//! * [`declarative`] turns (query, answer) pairs into declarative sentences.
//! * [`transforms`] builds the fourteen easy variants with provenance spans.
//! * [`baseline`] is the bag-of-words sanity baseline plus accuracy statistics.
//! * [`probe`] scores exported attention (uniform-mass tests and n-gram MRRs).
//! * [`annotation`] holds the annotation records, store and aggregation used by
//!   the human-in-the-loop variants.

pub mod annotation;
pub mod baseline;
pub mod corpus;
pub mod declarative;
mod error;
pub mod probe;
pub mod transforms;

pub use error::{Error, Result};
