mod common;

use common::oracle;
use narc_core::corpus::{tokenize, Dataset, Example, Span};
use narc_core::probe::{
    affinity_ngram_mrr, output_ngram_mrr, run_probe, self_match_mrr, uniform_mass_test,
    AttentionRecord, Layer, Metric, ProbeOptions, Value,
};
use narc_core::transforms::{transform_dataset, TransformId, TransformRequest};
use proptest::prelude::*;

/// Weights drawn from a small grid so that tied windows are common.
fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![(0u8..4).prop_map(|k| k as f64 * 0.25), 0.0f64..1.0]
}

fn output_case() -> impl Strategy<Value = (AttentionRecord, Vec<Span>)> {
    (1usize..=30)
        .prop_flat_map(|len| (prop::collection::vec(weight(), len), 1..=len))
        .prop_flat_map(|(w, n)| {
            let len = w.len();
            (Just(w), prop::collection::vec(0..=len - n, 1..3), Just(n))
        })
        .prop_map(|(w, starts, n)| {
            let total: f64 = w.iter().sum::<f64>().max(1e-9);
            let w: Vec<f64> = w.iter().map(|x| x / total).collect();
            let targets = starts.into_iter().map(|s| Span::new(s, s + n)).collect();
            (AttentionRecord::output("r", w), targets)
        })
}

fn affinity_case() -> impl Strategy<Value = (AttentionRecord, Vec<Span>)> {
    (1usize..=30, 1usize..=8)
        .prop_flat_map(|(len, q)| {
            (
                Just(len),
                Just(q),
                prop::collection::vec(weight(), len * q),
                1..=len,
            )
        })
        .prop_flat_map(|(len, q, w, n)| {
            (
                Just((len, q, w, n)),
                prop::collection::vec(0..=len - n, 1..3),
            )
        })
        .prop_map(|((len, q, w, n), starts)| {
            let targets = starts.into_iter().map(|s| Span::new(s, s + n)).collect();
            (AttentionRecord::query_aware("r", len, q, w), targets)
        })
}

fn self_case() -> impl Strategy<Value = (AttentionRecord, usize, Span)> {
    (2usize..=30)
        .prop_flat_map(|len| {
            (
                Just(len),
                prop::collection::vec(weight(), len * len),
                1..len,
            )
        })
        .prop_flat_map(|(len, w, first)| (Just((len, w, first)), first..len))
        .prop_flat_map(|((len, w, first), start)| (Just((len, w, first, start)), start + 1..=len))
        .prop_map(|((len, w, first, start), end)| {
            (
                AttentionRecord::self_matching("r", len, w),
                first,
                Span::new(start, end),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn uniform_mass_matches_oracle((rec, targets) in output_case()) {
        let got = uniform_mass_test(&rec, targets[0]).unwrap();
        let (mass, below) = oracle::below_uniform(&rec, targets[0]);
        prop_assert!((got.mass - mass).abs() <= 1e-12);
        prop_assert_eq!(got.below_uniform, below);
    }

    #[test]
    fn output_mrr_matches_oracle((rec, targets) in output_case()) {
        let got = output_ngram_mrr(&rec, &targets).unwrap();
        prop_assert!((got - oracle::output_mrr(&rec, &targets)).abs() <= 1e-12);
    }

    #[test]
    fn affinity_mrr_matches_oracle((rec, targets) in affinity_case()) {
        let got = affinity_ngram_mrr(&rec, &targets).unwrap();
        prop_assert!((got - oracle::affinity_mrr(&rec, &targets)).abs() <= 1e-12);
    }

    #[test]
    fn self_mrr_matches_oracle((rec, first, last) in self_case()) {
        let got = self_match_mrr(&rec, first, last).unwrap();
        prop_assert!((got - oracle::self_mrr(&rec, first, last)).abs() <= 1e-12);
    }

    #[test]
    fn mrr_is_a_reciprocal_rank((rec, targets) in output_case()) {
        let v = output_ngram_mrr(&rec, &targets).unwrap();
        let rank = 1.0 / v;
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!((rank - rank.round()).abs() < 1e-9);
    }
}

fn example(id: &str, passage: &str, query: &str, answer: &str) -> Example {
    Example {
        id: id.into(),
        passage: passage.into(),
        query: query.into(),
        options: vec![answer.into(), "something else".into()],
        answer_index: 0,
        provenance: None,
    }
}

fn small_dataset() -> Dataset {
    Dataset::new(
        vec![
            example(
                "a",
                "The sky was grey. Rain fell all day.",
                "What fell?",
                "rain",
            ),
            example(
                "b",
                "Sam played chess. Sam won the game easily.",
                "Who won?",
                "Sam",
            ),
        ],
        "t",
    )
    .unwrap()
}

fn transformed(id: TransformId) -> Dataset {
    let req = TransformRequest {
        seed: 0,
        keep: None,
        parses: None,
        sidecar: None,
        allow_missing: false,
    };
    transform_dataset(&small_dataset(), id, &req).unwrap().0
}

#[test]
fn uniform_attention_is_never_below_uniform() {
    let d = transformed(TransformId::P2);
    let records: Vec<AttentionRecord> = d
        .examples
        .iter()
        .map(|e| {
            let n = tokenize(&e.passage).len();
            AttentionRecord::output(e.id.clone(), vec![1.0 / n as f64; n])
        })
        .collect();
    let report = run_probe(&d, &records, &ProbeOptions::new(Layer::Output)).unwrap();
    assert_eq!(report.aggregates.below_uniform_answer_fraction, Some(0.0));
    assert_eq!(report.aggregates.below_uniform_query_fraction, Some(0.0));
    assert_eq!(report.table["< UAA"], Some(0.0));
    assert_eq!(report.table["< UAQ"], Some(0.0));
    // All windows tie, so the answer ranks first.
    assert_eq!(report.aggregates.mrr_output_answer, Some(1.0));
}

#[test]
fn peaked_attention_off_the_answer() {
    let d = transformed(TransformId::P1);
    let records: Vec<AttentionRecord> = d
        .examples
        .iter()
        .map(|e| {
            let n = tokenize(&e.passage).len();
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            AttentionRecord::output(e.id.clone(), w)
        })
        .collect();
    let report = run_probe(&d, &records, &ProbeOptions::new(Layer::Output)).unwrap();
    assert_eq!(report.aggregates.below_uniform_answer_fraction, Some(100.0));
    // P1 records no query span.
    assert_eq!(report.aggregates.below_uniform_query_fraction, None);
    assert_eq!(
        report.counts[&Metric::BelowUniformQuery].reasons["missing_query_span"],
        2
    );
    let e = report
        .entries
        .iter()
        .find(|e| e.id == "a" && e.metric == Metric::BelowUniformQuery)
        .unwrap();
    assert_eq!(e.value, Value::Undefined("missing_query_span".into()));
    let json = report.to_json();
    assert!(json.contains("\"undefined(missing_query_span)\""), "{json}");
}

#[test]
fn exclusions_are_counted() {
    let d = transformed(TransformId::P2);
    let a = &d.examples[0];
    let n = tokenize(&a.passage).len();
    let records = vec![
        AttentionRecord::output("a", vec![0.5 / n as f64; n]),
        AttentionRecord::output("b", vec![0.1; 3]),
    ];
    let report = run_probe(&d, &records, &ProbeOptions::new(Layer::Output)).unwrap();
    let c = &report.counts[&Metric::BelowUniformAnswer];
    assert_eq!(c.included, 0);
    assert_eq!(c.reasons["unnormalized"], 1);
    assert_eq!(c.reasons["passage_len_mismatch"], 1);
    // MRR ignores normalization.
    assert_eq!(report.counts[&Metric::MrrOutputAnswer].included, 1);
    let ids: Vec<&str> = report.entries.iter().map(|e| e.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn unknown_record_id_is_an_error() {
    let d = transformed(TransformId::P1);
    let err = run_probe(
        &d,
        &[AttentionRecord::output("zz", vec![1.0])],
        &ProbeOptions::new(Layer::Output),
    )
    .unwrap_err();
    assert!(err.to_string().contains("zz"));
    assert!(run_probe(&d, &[], &ProbeOptions::new(Layer::Output)).is_err());
}

#[test]
fn query_aware_ranks_query_and_answer() {
    let d = transformed(TransformId::P2);
    let records: Vec<AttentionRecord> = d
        .examples
        .iter()
        .map(|e| {
            let p = tokenize(&e.passage).len();
            let q = tokenize(&e.query).len();
            let prov = e.provenance.as_ref().unwrap();
            let (qs, ans) = (prov.query_span.unwrap(), prov.answer_span.unwrap());
            let mut w = vec![0.01; p * q];
            for r in qs.start..qs.end {
                for c in 0..q {
                    w[r * q + c] = 1.0;
                }
            }
            for r in ans.start..ans.end {
                w[r * q] = 0.5;
            }
            AttentionRecord::query_aware(e.id.clone(), p, q, w)
        })
        .collect();
    let report = run_probe(&d, &records, &ProbeOptions::new(Layer::QueryAware)).unwrap();
    assert_eq!(report.aggregates.mrr_affinity_query, Some(1.0));
    assert!(report.aggregates.mrr_affinity_answer.unwrap() < 1.0);
    assert!(report.table.contains_key("MRR(Q)") && report.table.contains_key("MRR(A)"));
}

#[test]
fn self_matching_concentrated_on_last_sentence() {
    let d = transformed(TransformId::P9);
    let records: Vec<AttentionRecord> = d
        .examples
        .iter()
        .map(|e| {
            let tokens = tokenize(&e.passage);
            let n = tokens.len();
            let (_, last) = narc_core::probe::first_and_last_sentence(&e.passage, &tokens).unwrap();
            let mut w = vec![0.001; n * n];
            for r in 0..n {
                for c in last.start..last.end {
                    w[r * n + c] = 1.0;
                }
            }
            AttentionRecord::self_matching(e.id.clone(), n, w)
        })
        .collect();
    let report = run_probe(&d, &records, &ProbeOptions::new(Layer::SelfMatching)).unwrap();
    assert_eq!(report.aggregates.mrr_self_last_sentence, Some(1.0));

    let not_p9 = transformed(TransformId::P1);
    let records: Vec<AttentionRecord> = not_p9
        .examples
        .iter()
        .map(|e| {
            let n = tokenize(&e.passage).len();
            AttentionRecord::self_matching(e.id.clone(), n, vec![0.0; n * n])
        })
        .collect();
    assert!(run_probe(&not_p9, &records, &ProbeOptions::new(Layer::SelfMatching)).is_err());
}

#[test]
fn csv_has_one_row_per_entry() {
    let d = transformed(TransformId::P2);
    let records: Vec<AttentionRecord> = d
        .examples
        .iter()
        .map(|e| {
            let n = tokenize(&e.passage).len();
            AttentionRecord::output(e.id.clone(), vec![1.0 / n as f64; n])
        })
        .collect();
    let report = run_probe(&d, &records, &ProbeOptions::new(Layer::Output)).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + report.entries.len());
    assert!(text.starts_with("id,metric,value,mass\n"));
    assert!(text.contains("a,below_uniform_answer,0,"));
}
