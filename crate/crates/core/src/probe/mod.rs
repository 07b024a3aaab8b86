//! Quantitative probes of exported attention.
//!
//! * Output layer: is the attention mass on the answer (or query) span below
//!   the uniform share `len(span) / len(passage)`, and where does the answer
//!   n-gram rank among all n-grams by summed weight?
//! * Query-aware layer: rank of the query and answer n-grams by the Frobenius
//!   norm of their affinity rows.
//! * Self-matching layer: rank of the last sentence of a hint-sandwiched
//!   passage by the Frobenius norm of the first-sentence x window block.
//!
//! Ranks are competition ranks, so tied windows share the best rank.

mod metrics;
mod record;
mod report;

pub use metrics::{
    affinity_ngram_mrr, output_ngram_mrr, self_match_mrr, uniform_mass_test,
    uniform_mass_test_with, UniformMass, DEFAULT_EQUALITY_TOLERANCE,
};
pub use record::{load_attention, load_attention_str, AttentionRecord, Layer};
pub use report::{
    first_and_last_sentence, run_probe, Aggregates, Entry, Metric, MetricCounts, ProbeOptions,
    ProbeReport, Value,
};
