//! Per-record attention metrics.
//!
//! Window scores are always summed left to right from scratch, never via
//! prefix sums, so genuinely tied windows produce bit-identical scores and
//! share a rank.

use super::{AttentionRecord, Layer};
use crate::corpus::Span;
use crate::{Error, Result};

/// Sums within this distance of the uniform share count as equal to it.
pub const DEFAULT_EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMass {
    pub mass: f64,
    /// `mass < span_len / passage_len`; equality is not flagged.
    pub below_uniform: bool,
}

fn expect_layer(record: &AttentionRecord, layer: Layer) -> Result<()> {
    if record.layer != layer {
        return Err(Error::invalid(format!(
            "{}: expected a {layer} record, got {}",
            record.id, record.layer
        )));
    }
    record.validate()
}

fn check_span(record: &AttentionRecord, span: Span) -> Result<()> {
    if !span.fits(record.passage_len) {
        return Err(Error::invalid(format!(
            "{}: span [{}, {}) out of range for passage length {}",
            record.id, span.start, span.end, record.passage_len
        )));
    }
    Ok(())
}

fn check_targets(record: &AttentionRecord, targets: &[Span]) -> Result<usize> {
    let first = targets
        .first()
        .ok_or_else(|| Error::invalid(format!("{}: no target span", record.id)))?;
    for t in targets {
        check_span(record, *t)?;
        if t.len() != first.len() {
            return Err(Error::invalid(format!(
                "{}: target spans differ in length",
                record.id
            )));
        }
    }
    Ok(first.len())
}

/// Total output-layer weight on `span`, compared with the uniform share.
pub fn uniform_mass_test(record: &AttentionRecord, span: Span) -> Result<UniformMass> {
    uniform_mass_test_with(record, span, DEFAULT_EQUALITY_TOLERANCE)
}

pub fn uniform_mass_test_with(
    record: &AttentionRecord,
    span: Span,
    equality_tolerance: f64,
) -> Result<UniformMass> {
    expect_layer(record, Layer::Output)?;
    check_span(record, span)?;
    let mass: f64 = record.weights[span.start..span.end].iter().sum();
    let uniform = span.len() as f64 / record.passage_len as f64;
    Ok(UniformMass {
        mass,
        below_uniform: mass < uniform - equality_tolerance,
    })
}

/// Competition rank (1 + number of strictly better windows) of the best target.
fn best_rank(scores: &[f64], targets: impl IntoIterator<Item = usize>) -> usize {
    let best = targets
        .into_iter()
        .map(|i| scores[i])
        .fold(f64::NEG_INFINITY, f64::max);
    1 + scores.iter().filter(|&&s| s > best).count()
}

/// Reciprocal rank of the answer n-gram among all passage n-grams of the same
/// length, scored by summed output-layer weight. With several occurrences of
/// the answer, the best-ranked one counts.
pub fn output_ngram_mrr(record: &AttentionRecord, targets: &[Span]) -> Result<f64> {
    expect_layer(record, Layer::Output)?;
    let n = check_targets(record, targets)?;
    let scores: Vec<f64> = record.weights.windows(n).map(|w| w.iter().sum()).collect();
    Ok(1.0 / best_rank(&scores, targets.iter().map(|t| t.start)) as f64)
}

/// Reciprocal rank of the target n-gram (query or answer occurrence) among all
/// windows of its length, scored by the Frobenius norm of the affinity rows
/// the window covers.
pub fn affinity_ngram_mrr(record: &AttentionRecord, targets: &[Span]) -> Result<f64> {
    expect_layer(record, Layer::QueryAware)?;
    let w = check_targets(record, targets)?;
    let scores: Vec<f64> = (0..=record.passage_len - w)
        .map(|i| {
            (i..i + w)
                .flat_map(|r| record.row(r))
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(1.0 / best_rank(&scores, targets.iter().map(|t| t.start)) as f64)
}

/// Reciprocal rank of the last sentence among length-K windows that do not
/// start inside the first sentence, scored by the Frobenius norm of the
/// self-affinity block (first-sentence rows x window columns).
pub fn self_match_mrr(
    record: &AttentionRecord,
    first_sentence_len: usize,
    last_sentence: Span,
) -> Result<f64> {
    expect_layer(record, Layer::SelfMatching)?;
    check_span(record, last_sentence)?;
    let n = first_sentence_len;
    let k = last_sentence.len();
    let len = record.passage_len;
    if n == 0 || n > len {
        return Err(Error::invalid(format!(
            "{}: first sentence length {n} invalid for passage length {len}",
            record.id
        )));
    }
    if k > len - n {
        return Err(Error::invalid(format!(
            "{}: no candidate window",
            record.id
        )));
    }
    if last_sentence.start < n {
        return Err(Error::invalid(format!(
            "{}: last sentence starts inside the first sentence",
            record.id
        )));
    }
    let candidates = n..=len - k;
    let scores: Vec<f64> = candidates
        .clone()
        .map(|i| {
            (0..n)
                .flat_map(|r| &record.row(r)[i..i + k])
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(1.0 / best_rank(&scores, [last_sentence.start - n]) as f64)
}
