use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::metrics::{
    affinity_ngram_mrr, output_ngram_mrr, self_match_mrr, uniform_mass_test_with,
    DEFAULT_EQUALITY_TOLERANCE,
};
use super::{AttentionRecord, Layer};
use crate::corpus::{split_sentences, tokenize, Dataset, Example, Span, TokenizedText};
use crate::transforms::TransformId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BelowUniformAnswer,
    BelowUniformQuery,
    MrrOutputAnswer,
    MrrAffinityQuery,
    MrrAffinityAnswer,
    MrrSelfLastSentence,
}

impl Metric {
    pub fn for_layer(layer: Layer) -> &'static [Metric] {
        match layer {
            Layer::Output => &[
                Metric::BelowUniformAnswer,
                Metric::BelowUniformQuery,
                Metric::MrrOutputAnswer,
            ],
            Layer::QueryAware => &[Metric::MrrAffinityQuery, Metric::MrrAffinityAnswer],
            Layer::SelfMatching => &[Metric::MrrSelfLastSentence],
        }
    }

    pub fn layer(self) -> Layer {
        match self {
            Metric::BelowUniformAnswer | Metric::BelowUniformQuery | Metric::MrrOutputAnswer => {
                Layer::Output
            }
            Metric::MrrAffinityQuery | Metric::MrrAffinityAnswer => Layer::QueryAware,
            Metric::MrrSelfLastSentence => Layer::SelfMatching,
        }
    }

    /// Column heading in the summary table.
    pub fn column(self) -> &'static str {
        match self {
            Metric::BelowUniformAnswer => "< UAA",
            Metric::BelowUniformQuery => "< UAQ",
            Metric::MrrOutputAnswer | Metric::MrrSelfLastSentence => "MRR",
            Metric::MrrAffinityQuery => "MRR(Q)",
            Metric::MrrAffinityAnswer => "MRR(A)",
        }
    }

    fn is_fraction(self) -> bool {
        matches!(self, Metric::BelowUniformAnswer | Metric::BelowUniformQuery)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub layer: Layer,
    /// Subset of the layer's metrics; empty means all of them.
    pub metrics: Vec<Metric>,
    /// Allowed |sum - 1| for an output vector to count as normalized.
    pub normalization_tolerance: f64,
    pub equality_tolerance: f64,
}

impl ProbeOptions {
    pub fn new(layer: Layer) -> Self {
        ProbeOptions {
            layer,
            metrics: Vec::new(),
            normalization_tolerance: 1e-4,
            equality_tolerance: DEFAULT_EQUALITY_TOLERANCE,
        }
    }
}

/// A per-example metric value, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Undefined(String),
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Number(x) => s.serialize_f64(*x),
            Value::Undefined(reason) => s.serialize_str(&format!("undefined({reason})")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub id: String,
    pub metric: Metric,
    pub value: Value,
    /// Attention mass on the span, for the below-uniform metrics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Aggregates {
    /// Percentage of examples whose answer mass is below uniform.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_uniform_answer_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_uniform_query_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrr_output_answer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrr_affinity_query: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrr_affinity_answer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrr_self_last_sentence: Option<f64>,
}

impl Aggregates {
    fn slot(&mut self, metric: Metric) -> &mut Option<f64> {
        match metric {
            Metric::BelowUniformAnswer => &mut self.below_uniform_answer_fraction,
            Metric::BelowUniformQuery => &mut self.below_uniform_query_fraction,
            Metric::MrrOutputAnswer => &mut self.mrr_output_answer,
            Metric::MrrAffinityQuery => &mut self.mrr_affinity_query,
            Metric::MrrAffinityAnswer => &mut self.mrr_affinity_answer,
            Metric::MrrSelfLastSentence => &mut self.mrr_self_last_sentence,
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.clone().slot(metric).to_owned()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricCounts {
    pub included: usize,
    pub excluded: usize,
    pub reasons: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub layer: Layer,
    pub total: usize,
    pub aggregates: Aggregates,
    /// Aggregates under their table headings (`< UAA`, `< UAQ`, `MRR`, ...).
    pub table: BTreeMap<String, Option<f64>>,
    pub counts: BTreeMap<Metric, MetricCounts>,
    pub entries: Vec<Entry>,
}

impl ProbeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per entry: `id,metric,value,mass`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let to_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        out.write_record(["id", "metric", "value", "mass"])
            .map_err(to_err)?;
        for e in &self.entries {
            let metric = serde_json::to_value(e.metric).expect("metric serializes");
            let value = match &e.value {
                Value::Number(x) => x.to_string(),
                Value::Undefined(r) => format!("undefined({r})"),
            };
            let mass = e.mass.map(|m| m.to_string()).unwrap_or_default();
            out.write_record([
                e.id.as_str(),
                metric.as_str().unwrap_or_default(),
                &value,
                &mass,
            ])
            .map_err(to_err)?;
        }
        out.flush().map_err(|e| Error::invalid(format!("csv: {e}")))
    }
}

/// All starts where the tokens under `span` occur again (case-insensitive).
fn occurrences(tokens: &[String], span: Span) -> Vec<Span> {
    let needle = &tokens[span.start..span.end];
    let n = span.len();
    let mut out: Vec<Span> = (0..=tokens.len().saturating_sub(n))
        .filter(|&i| tokens.len() >= n && &tokens[i..i + n] == needle)
        .map(|i| Span::new(i, i + n))
        .collect();
    if !out.contains(&span) {
        out.push(span);
    }
    out
}

/// First-sentence token count and last-sentence token span of a passage.
pub fn first_and_last_sentence(passage: &str, tokens: &TokenizedText) -> Option<(usize, Span)> {
    let sentences = split_sentences(passage);
    if sentences.len() < 2 {
        return None;
    }
    let first = tokens.tokens_within(sentences[0].clone());
    let last = tokens.tokens_within(sentences[sentences.len() - 1].clone());
    (first.start == 0 && first.end > 0 && last.start < last.end)
        .then(|| (first.end, Span::new(last.start, last.end)))
}

type Outcome = std::result::Result<(f64, Option<f64>), String>;

fn evaluate_example(
    ex: &Example,
    record: Option<&AttentionRecord>,
    metrics: &[Metric],
    opts: &ProbeOptions,
) -> Vec<(Metric, Outcome)> {
    let Some(record) = record else {
        return metrics
            .iter()
            .map(|m| (*m, Err("no_record".to_string())))
            .collect();
    };
    let tokens = tokenize(&ex.passage);
    let lowered = tokens.lowercase();
    if record.passage_len != tokens.len() {
        return metrics
            .iter()
            .map(|m| (*m, Err("passage_len_mismatch".to_string())))
            .collect();
    }
    let provenance = ex.provenance.as_ref();
    let answer_span = provenance
        .and_then(|p| p.answer_span)
        .filter(|s| s.fits(tokens.len()));
    let query_span = provenance
        .and_then(|p| p.query_span)
        .filter(|s| s.fits(tokens.len()));
    let invalid = |e: Error| format!("invalid: {e}");

    metrics
        .iter()
        .map(|&metric| {
            let outcome: Outcome = match metric {
                Metric::BelowUniformAnswer | Metric::BelowUniformQuery => {
                    let span = if metric == Metric::BelowUniformAnswer {
                        answer_span
                    } else {
                        query_span
                    };
                    match span {
                        None => Err(missing(metric)),
                        Some(_) if !record.is_normalized(opts.normalization_tolerance) => {
                            Err("unnormalized".into())
                        }
                        Some(s) => uniform_mass_test_with(record, s, opts.equality_tolerance)
                            .map(|m| (if m.below_uniform { 1.0 } else { 0.0 }, Some(m.mass)))
                            .map_err(invalid),
                    }
                }
                Metric::MrrOutputAnswer => match answer_span {
                    None => Err(missing(metric)),
                    Some(s) => output_ngram_mrr(record, &occurrences(&lowered, s))
                        .map(|v| (v, None))
                        .map_err(invalid),
                },
                Metric::MrrAffinityQuery | Metric::MrrAffinityAnswer => {
                    let span = if metric == Metric::MrrAffinityQuery {
                        query_span
                    } else {
                        answer_span
                    };
                    let query_len = tokenize(&ex.query).len();
                    match span {
                        None => Err(missing(metric)),
                        Some(_) if record.query_len != Some(query_len) => {
                            Err("query_len_mismatch".into())
                        }
                        Some(s) => affinity_ngram_mrr(record, &occurrences(&lowered, s))
                            .map(|v| (v, None))
                            .map_err(invalid),
                    }
                }
                Metric::MrrSelfLastSentence => {
                    if provenance.map(|p| p.transform_id) != Some(TransformId::P9) {
                        Err("not_p9".into())
                    } else {
                        match first_and_last_sentence(&ex.passage, &tokens) {
                            None => Err("no_sentence_boundaries".into()),
                            Some((n, last)) => self_match_mrr(record, n, last)
                                .map(|v| (v, None))
                                .map_err(invalid),
                        }
                    }
                }
            };
            (metric, outcome)
        })
        .collect()
}

fn missing(metric: Metric) -> String {
    match metric {
        Metric::BelowUniformQuery | Metric::MrrAffinityQuery => "missing_query_span".into(),
        _ => "missing_answer_span".into(),
    }
}

/// Score one layer of exported attention against a transformed dataset.
///
/// Examples that lack a needed span or a usable record are excluded from the
/// affected metrics and counted by reason. Entries are ordered by id.
pub fn run_probe(
    dataset: &Dataset,
    records: &[AttentionRecord],
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let metrics: Vec<Metric> = if opts.metrics.is_empty() {
        Metric::for_layer(opts.layer).to_vec()
    } else {
        if let Some(m) = opts.metrics.iter().find(|m| m.layer() != opts.layer) {
            return Err(Error::invalid(format!(
                "metric {m:?} does not apply to the {} layer",
                opts.layer
            )));
        }
        opts.metrics.clone()
    };

    let ids: HashSet<&str> = dataset.examples.iter().map(|e| e.id.as_str()).collect();
    let mut by_id: HashMap<&str, &AttentionRecord> = HashMap::new();
    for record in records.iter().filter(|r| r.layer == opts.layer) {
        if !ids.contains(record.id.as_str()) {
            return Err(Error::invalid(format!(
                "attention record for unknown example id {}",
                record.id
            )));
        }
        if by_id.insert(record.id.as_str(), record).is_some() {
            return Err(Error::invalid(format!(
                "duplicate {} record for {}",
                opts.layer, record.id
            )));
        }
    }

    let mut examples: Vec<&Example> = dataset.examples.iter().collect();
    examples.sort_by(|a, b| a.id.cmp(&b.id));
    let results: Vec<(String, Vec<(Metric, Outcome)>)> = examples
        .par_iter()
        .map(|ex| {
            (
                ex.id.clone(),
                evaluate_example(ex, by_id.get(ex.id.as_str()).copied(), &metrics, opts),
            )
        })
        .collect();

    let mut counts: BTreeMap<Metric, MetricCounts> = metrics
        .iter()
        .map(|m| (*m, MetricCounts::default()))
        .collect();
    let mut sums: BTreeMap<Metric, f64> = BTreeMap::new();
    let mut entries = Vec::new();
    for (id, outcomes) in results {
        for (metric, outcome) in outcomes {
            let c = counts.get_mut(&metric).expect("metric registered");
            match outcome {
                Ok((value, mass)) => {
                    c.included += 1;
                    *sums.entry(metric).or_default() += value;
                    entries.push(Entry {
                        id: id.clone(),
                        metric,
                        value: Value::Number(value),
                        mass,
                    });
                }
                Err(reason) => {
                    c.excluded += 1;
                    *c.reasons.entry(reason.clone()).or_default() += 1;
                    entries.push(Entry {
                        id: id.clone(),
                        metric,
                        value: Value::Undefined(reason),
                        mass: None,
                    });
                }
            }
        }
    }
    if counts.values().all(|c| c.included == 0) {
        return Err(Error::invalid("no usable examples for any metric"));
    }

    let mut aggregates = Aggregates::default();
    let mut table = BTreeMap::new();
    for (&metric, c) in &counts {
        let value = (c.included > 0).then(|| {
            let mean = sums.get(&metric).copied().unwrap_or(0.0) / c.included as f64;
            if metric.is_fraction() {
                100.0 * mean
            } else {
                mean
            }
        });
        *aggregates.slot(metric) = value;
        table.insert(metric.column().to_string(), value);
    }
    Ok(ProbeReport {
        layer: opts.layer,
        total: dataset.len(),
        aggregates,
        table,
        counts,
        entries,
    })
}
