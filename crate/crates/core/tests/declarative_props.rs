use narc_core::corpus::tokenize;
use narc_core::declarative::{to_declarative, Method};
use proptest::prelude::*;

const WORDS: [&str; 10] = [
    "tom", "cat", "sat", "market", "red", "green", "river", "sang", "old", "house",
];
const WH: [&str; 4] = ["What", "Where", "Who", "Why"];
const AUX: [&str; 4] = ["is", "did", "can", "was"];

fn words(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(&WORDS[..]), n)
}

fn blank_query() -> impl Strategy<Value = String> {
    (
        words(0..5),
        prop::sample::select(vec!["_", "__", "_ _", "____"]),
        words(0..5),
        any::<bool>(),
    )
        .prop_map(|(pre, blank, post, dot)| {
            let mut parts: Vec<&str> = pre;
            parts.push(blank);
            parts.extend(post);
            let mut q = parts.join(" ");
            if dot {
                q.push_str(" .");
            }
            q
        })
}

fn wh_query() -> impl Strategy<Value = String> {
    (
        prop::sample::select(&WH[..]),
        prop::option::of(prop::sample::select(&AUX[..])),
        words(1..6),
    )
        .prop_map(|(wh, aux, rest)| {
            let mut parts = vec![wh];
            parts.extend(aux);
            parts.extend(rest);
            format!("{}?", parts.join(" "))
        })
}

fn answer() -> impl Strategy<Value = String> {
    words(1..4).prop_map(|w| w.join(" "))
}

fn lower_tokens(s: &str) -> Vec<String> {
    tokenize(s)
        .tokens
        .iter()
        .map(|t| t.to_lowercase())
        .collect()
}

/// One final '.' or '!', never '?' and never two terminators in a row.
fn well_terminated(s: &str) -> bool {
    let body = s.trim_end();
    let Some(last) = body.chars().last() else {
        return false;
    };
    let before = body[..body.len() - last.len_utf8()]
        .trim_end()
        .chars()
        .last();
    matches!(last, '.' | '!') && !matches!(before, Some('.' | '!' | '?'))
}

proptest! {
    #[test]
    fn blank_queries_substitute((q, a) in (blank_query(), answer())) {
        let r = to_declarative(&q, &a, None).unwrap();
        prop_assert_eq!(r.method, Method::BlankSubstitution);
        prop_assert!(r.sentence.contains(&a));
        prop_assert!(!r.sentence.contains('_'));
        prop_assert!(!r.sentence.contains("  "));
        prop_assert!(well_terminated(&r.sentence), "{:?}", r.sentence);
        let out = lower_tokens(&r.sentence);
        for t in lower_tokens(&q).iter().filter(|t| t.as_str() != "_") {
            prop_assert!(out.contains(t), "{} missing from {:?}", t, r.sentence);
        }
    }

    #[test]
    fn wh_queries_fall_back((q, a) in (wh_query(), answer())) {
        let r = to_declarative(&q, &a, None).unwrap();
        prop_assert_eq!(r.method, Method::HeuristicFallback);
        prop_assert!(!r.sentence.contains('_'));
        prop_assert!(r.sentence.contains(&a));
        prop_assert!(well_terminated(&r.sentence), "{:?}", r.sentence);
        let out = lower_tokens(&r.sentence);
        let skip: Vec<String> = WH.iter().chain(&AUX).map(|w| w.to_lowercase()).chain(["?".to_string()]).collect();
        for t in lower_tokens(&q).iter().filter(|t| !skip.contains(t)) {
            prop_assert!(out.contains(t), "{} missing from {:?}", t, r.sentence);
        }
    }

    #[test]
    fn blank_chosen_only_with_underscore(q in wh_query(), a in answer()) {
        prop_assert_ne!(to_declarative(&q, &a, None).unwrap().method, Method::BlankSubstitution);
    }

    #[test]
    fn deterministic(q in prop_oneof![blank_query(), wh_query()], a in answer()) {
        prop_assert_eq!(to_declarative(&q, &a, None).unwrap(), to_declarative(&q, &a, None).unwrap());
    }

    #[test]
    fn any_terminator_normalized(q in wh_query(), a in answer(), end in prop::sample::select(vec!["?", "!", ".", "..", "?!", ""])) {
        let r = to_declarative(&q, &format!("{a}{end}"), None).unwrap();
        prop_assert!(well_terminated(&r.sentence), "{:?}", r.sentence);
    }
}
