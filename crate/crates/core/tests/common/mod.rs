//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use narc_core::corpus::{load_race_dir, tokenize, Dataset, Example, Span};
use narc_core::declarative::{read_parse_sidecar, to_declarative, ParseTree};
use narc_core::probe::AttentionRecord;
use narc_core::transforms::{read_passage_sidecar, TransformId, TransformRequest};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn bundled() -> Dataset {
    load_race_dir(&data_dir().join("race")).expect("bundled corpus loads")
}

pub fn bundled_parses() -> HashMap<String, ParseTree> {
    read_parse_sidecar(&data_dir().join("parses.jsonl")).expect("bundled parses load")
}

pub fn bundled_sidecar(id: TransformId) -> HashMap<String, String> {
    let name = format!("{}.jsonl", id.to_string().to_lowercase());
    read_passage_sidecar(&data_dir().join("sidecars").join(name)).expect("bundled sidecar loads")
}

/// Request used for a transform on the bundled corpus.
pub fn request<'a>(
    id: TransformId,
    parses: &'a HashMap<String, ParseTree>,
    sidecar: Option<&'a HashMap<String, String>>,
) -> TransformRequest<'a> {
    TransformRequest {
        seed: 42,
        keep: (id == TransformId::O3).then_some(3),
        parses: Some(parses),
        sidecar,
        allow_missing: false,
    }
}

fn lower_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .tokens
        .iter()
        .map(|t| t.to_lowercase())
        .collect()
}

fn tokens_at(passage: &str, span: Span) -> Result<Vec<String>, String> {
    let toks = lower_tokens(passage);
    if !span.fits(toks.len()) {
        return Err(format!("span {span:?} outside {} tokens", toks.len()));
    }
    Ok(toks[span.start..span.end].to_vec())
}

/// Check the per-example invariants of transform `id` mapping `old` to `new`.
pub fn check_example(
    id: TransformId,
    old: &Example,
    new: &Example,
    parse: Option<&ParseTree>,
    sidecar: Option<&HashMap<String, String>>,
) -> Result<(), String> {
    use TransformId::*;
    if old.id != new.id {
        return Err(format!("id changed to {}", new.id));
    }
    let prov = new.provenance.as_ref().ok_or("no provenance")?;
    if prov.transform_id != id {
        return Err(format!("transform_id {} recorded", prov.transform_id));
    }
    if new.answer_index >= new.options.len() {
        return Err("answer_index out of range".into());
    }
    if id == O1 {
        let want = to_declarative(&old.query, old.answer(), parse)
            .map_err(|e| e.to_string())?
            .sentence;
        if new.answer() != want {
            return Err(format!(
                "O1 answer {:?} is not the declarative image {want:?}",
                new.answer()
            ));
        }
        if new.options.len() != old.options.len() {
            return Err("O1 changed the option count".into());
        }
    } else if new.answer() != old.answer() {
        return Err(format!(
            "correct option changed from {:?} to {:?}",
            old.answer(),
            new.answer()
        ));
    }

    let answer_tokens = lower_tokens(old.answer());
    let query_tokens = lower_tokens(&old.query);
    if matches!(id, P1 | P2 | P3 | P6 | P7 | P8 | P9) {
        let span = prov.answer_span.ok_or("answer_span missing")?;
        if tokens_at(&new.passage, span)? != answer_tokens {
            return Err(format!("answer_span {span:?} does not cover the answer"));
        }
    }
    if matches!(id, P2 | P6 | P9) {
        let span = prov.query_span.ok_or("query_span missing")?;
        if tokens_at(&new.passage, span)? != query_tokens {
            return Err(format!("query_span {span:?} does not cover the query"));
        }
    }
    if matches!(id, P3 | P7) {
        let span = prov.query_span.ok_or("query_span missing")?;
        let answer = prov.answer_span.expect("checked above");
        if span.start > answer.start || span.end < answer.end {
            return Err("declarative query_span does not contain the answer".into());
        }
    }
    match id {
        P1 | P2 | P3 => {
            if !new.passage.starts_with(&format!("{} ", old.passage.trim())) {
                return Err("old passage is not a prefix".into());
            }
        }
        P8 if new.passage != old.answer() => return Err("P8 passage is not the answer".into()),
        P6 if new.passage != format!("{} {}", old.query.trim(), old.answer()) => {
            return Err("P6 passage is not query + answer".into())
        }
        P4 | P5 => {
            let want = sidecar
                .and_then(|s| s.get(&old.id))
                .ok_or("no sidecar entry")?;
            if &new.passage != want {
                return Err("passage differs from sidecar".into());
            }
        }
        Q1 | Q2 => {
            if new.passage != old.passage || !new.query.starts_with(old.query.trim_end()) {
                return Err("query hint changed the passage or dropped the query".into());
            }
        }
        O2 => {
            if new.options.len() != old.options.len() || new.answer_index != old.answer_index {
                return Err("O2 changed the option layout".into());
            }
            let mut seen = vec![new.answer().to_lowercase()];
            for (i, o) in new.options.iter().enumerate() {
                if i == new.answer_index {
                    continue;
                }
                if seen.contains(&o.to_lowercase()) {
                    return Err(format!(
                        "O2 replacement {o:?} repeats the answer or another replacement"
                    ));
                }
                seen.push(o.to_lowercase());
            }
        }
        O3 => {
            let mut rest = old.options.iter();
            if !new.options.iter().all(|o| rest.any(|x| x == o)) {
                return Err("O3 options are not an ordered subset".into());
            }
        }
        _ => {}
    }
    Ok(())
}

/// Check a whole transformed dataset; returns the first failure.
pub fn check_dataset(
    id: TransformId,
    old: &Dataset,
    new: &Dataset,
    parses: &HashMap<String, ParseTree>,
    sidecar: Option<&HashMap<String, String>>,
) -> Result<(), String> {
    if old.len() != new.len() {
        return Err(format!("{id}: {} examples became {}", old.len(), new.len()));
    }
    for (a, b) in old.examples.iter().zip(&new.examples) {
        check_example(id, a, b, parses.get(&a.id), sidecar)
            .map_err(|e| format!("{id} {}: {e}", a.id))?;
        if id == TransformId::O3 && b.options.len() != 3 {
            return Err(format!("O3 {}: kept {} options", a.id, b.options.len()));
        }
    }
    Ok(())
}

/// Brute-force probe definitions: score every window, sort, and read off the
/// position of the first window scoring like the best target.
pub mod oracle {
    use super::*;

    fn rank_by_sorting(scores: &[f64], targets: &[usize]) -> usize {
        let best = targets
            .iter()
            .map(|&t| scores[t])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sorted = scores.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sorted.iter().position(|&s| s == best).unwrap() + 1
    }

    pub fn below_uniform(r: &AttentionRecord, span: Span) -> (f64, bool) {
        let mut mass = 0.0;
        for i in span.start..span.end {
            mass += r.weights[i];
        }
        let share = (span.end - span.start) as f64 / r.passage_len as f64;
        (mass, share - mass > 1e-12)
    }

    pub fn output_mrr(r: &AttentionRecord, targets: &[Span]) -> f64 {
        let n = targets[0].end - targets[0].start;
        let mut scores = Vec::new();
        for s in 0..=r.passage_len - n {
            let mut sum = 0.0;
            for i in s..s + n {
                sum += r.weights[i];
            }
            scores.push(sum);
        }
        let starts: Vec<usize> = targets.iter().map(|t| t.start).collect();
        1.0 / rank_by_sorting(&scores, &starts) as f64
    }

    fn frobenius(
        r: &AttentionRecord,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> f64 {
        let width = r.weights.len() / r.passage_len;
        let mut sq = 0.0;
        for i in rows {
            for j in cols.clone() {
                let x = r.weights[i * width + j];
                sq += x * x;
            }
        }
        sq.sqrt()
    }

    pub fn affinity_mrr(r: &AttentionRecord, targets: &[Span]) -> f64 {
        let n = targets[0].end - targets[0].start;
        let q = r.weights.len() / r.passage_len;
        let scores: Vec<f64> = (0..=r.passage_len - n)
            .map(|s| frobenius(r, s..s + n, 0..q))
            .collect();
        let starts: Vec<usize> = targets.iter().map(|t| t.start).collect();
        1.0 / rank_by_sorting(&scores, &starts) as f64
    }

    pub fn self_mrr(r: &AttentionRecord, first_len: usize, last: Span) -> f64 {
        let k = last.end - last.start;
        let scores: Vec<f64> = (first_len..=r.passage_len - k)
            .map(|s| frobenius(r, 0..first_len, s..s + k))
            .collect();
        1.0 / rank_by_sorting(&scores, &[last.start - first_len]) as f64
    }
}
