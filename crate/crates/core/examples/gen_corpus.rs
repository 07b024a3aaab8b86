//! Regenerate the bundled synthetic corpus under `data/`.
//!
//! ```text
//! cargo run -p narc-core --example gen_corpus -- data
//! ```
//!
//! Every passage mentions each option of each question exactly once, so a
//! bag-of-words scorer sees all options as equally supported. Option words
//! never occur in the query.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const ARTICLES: usize = 100;

const NAMES: [&str; 20] = [
    "Tom", "Anna", "Sam", "Lucy", "Ben", "Mary", "Jack", "Emma", "Peter", "Kate", "David", "Lily",
    "Mike", "Alice", "Henry", "Grace", "Leo", "Ruby", "Oscar", "Nina",
];
const TOWNS: [&str; 10] = [
    "Dover", "Bath", "York", "Leeds", "Chester", "Exeter", "Norwich", "Durham", "Lincoln", "Oxford",
];
const DAYS: [&str; 2] = ["Saturday", "Sunday"];

const ITEM_ADJ: [&str; 16] = [
    "red", "blue", "green", "yellow", "striped", "woollen", "silver", "wooden", "tiny", "huge",
    "shiny", "dusty", "bright", "plain", "spotted", "golden",
];
const ITEMS: [&str; 16] = [
    "hat", "scarf", "lamp", "kettle", "clock", "basket", "umbrella", "mirror", "notebook",
    "teapot", "jacket", "vase", "candle", "bowl", "rug", "kite",
];
const ROLE_ADJ: [&str; 12] = [
    "tall", "young", "elderly", "friendly", "cheerful", "busy", "kind", "clever", "shy", "patient",
    "smiling", "bearded",
];
const ROLES: [&str; 12] = [
    "baker",
    "farmer",
    "teacher",
    "nurse",
    "driver",
    "painter",
    "fisherman",
    "postman",
    "doctor",
    "waiter",
    "tailor",
    "sailor",
];
const PLACE_ADJ: [&str; 12] = [
    "sunny", "quiet", "windy", "crowded", "narrow", "ancient", "peaceful", "rocky", "sandy",
    "empty", "lively", "hidden",
];
const PLACES: [&str; 12] = [
    "harbour", "library", "museum", "garden", "bridge", "station", "beach", "castle", "park",
    "square", "tower", "cinema",
];

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Buy,
    Helper,
    Destination,
}

struct Question {
    query: String,
    parse: Option<String>,
    options: Vec<String>,
    answer: usize,
    /// Passage sentences for this question; `answer_sentence` indexes into it.
    sentences: Vec<String>,
    answer_sentence: usize,
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], n: usize) -> Vec<&'a str> {
    let mut v = pool.to_vec();
    v.shuffle(rng);
    v.truncate(n);
    v
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn options(rng: &mut ChaCha8Rng, kind: Kind) -> Vec<String> {
    let (adj, nouns, det): (&[&str], &[&str], &str) = match kind {
        Kind::Buy => (&ITEM_ADJ, &ITEMS, "a"),
        Kind::Helper => (&ROLE_ADJ, &ROLES, "the"),
        Kind::Destination => (&PLACE_ADJ, &PLACES, "to the"),
    };
    let a = pick(rng, adj, 4);
    let n = pick(rng, nouns, 4);
    a.iter()
        .zip(&n)
        .map(|(a, n)| format!("{det} {a} {n}"))
        .collect()
}

fn question(rng: &mut ChaCha8Rng, kind: Kind, name: &str, answer: usize) -> Question {
    let options = options(rng, kind);
    let wh = rng.random_bool(0.5);
    let (query, parse) = match (kind, wh) {
        (Kind::Buy, true) => (
            format!("What did {name} buy at the market?"),
            Some(format!(
                "(ROOT (SBARQ (WHNP (WP What)) (SQ (VBD did) (NP (NNP {name})) (VP (VB buy) (PP (IN at) (NP (DT the) (NN market))))) (. ?)))"
            )),
        ),
        (Kind::Buy, false) => (format!("{name} bought _ at the market."), None),
        (Kind::Helper, true) => (
            format!("Who helped {name} carry the bags?"),
            Some(format!(
                "(ROOT (SBARQ (WHNP (WP Who)) (SQ (VP (VBD helped) (S (NP (NNP {name})) (VP (VB carry) (NP (DT the) (NNS bags)))))) (. ?)))"
            )),
        ),
        (Kind::Helper, false) => (format!("_ helped {name} carry the bags."), None),
        (Kind::Destination, true) => (
            format!("Where did {name} go after lunch?"),
            Some(format!(
                "(ROOT (SBARQ (WHADVP (WRB Where)) (SQ (VBD did) (NP (NNP {name})) (VP (VB go) (PP (IN after) (NP (NN lunch))))) (. ?)))"
            )),
        ),
        (Kind::Destination, false) => (format!("After lunch {name} went _ ."), None),
    };
    let mut sentences: Vec<(bool, String)> = options
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let s = match (kind, i == answer) {
                (Kind::Buy, true) => format!("In the end {name} bought {o} at the market."),
                (Kind::Buy, false) => format!("{name} looked at {o} for a while."),
                (Kind::Helper, true) => {
                    format!("{} helped {name} carry the bags home.", capitalize(o))
                }
                (Kind::Helper, false) => format!("{name} also said hello to {o}."),
                (Kind::Destination, true) => format!("After lunch {name} went {o}."),
                (Kind::Destination, false) => format!("{name} thought about going {o}."),
            };
            (i == answer, s)
        })
        .collect();
    sentences.shuffle(rng);
    let answer_sentence = sentences.iter().position(|(is, _)| *is).unwrap();
    Question {
        query,
        parse,
        options,
        answer,
        sentences: sentences.into_iter().map(|(_, s)| s).collect(),
        answer_sentence,
    }
}

fn write_jsonl(path: &Path, rows: &[serde_json::Value]) {
    let mut f = fs::File::create(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    for r in rows {
        writeln!(f, "{r}").unwrap();
    }
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    let race = out.join("race");
    let sidecars = out.join("sidecars");
    for d in [&race, &sidecars] {
        if d.exists() && d == &race {
            fs::remove_dir_all(d).unwrap();
        }
        fs::create_dir_all(d).unwrap();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(20_190_601);
    // Exactly 50 answers at each index.
    let mut answers: Vec<usize> = (0..ARTICLES * 2).map(|i| i % 4).collect();
    answers.shuffle(&mut rng);

    let (mut parses, mut p4, mut p5) = (Vec::new(), Vec::new(), Vec::new());
    for a in 0..ARTICLES {
        let name = NAMES[rng.random_range(0..NAMES.len())];
        let friend = loop {
            let f = NAMES[rng.random_range(0..NAMES.len())];
            if f != name {
                break f;
            }
        };
        let town = TOWNS[rng.random_range(0..TOWNS.len())];
        let day = DAYS[rng.random_range(0..DAYS.len())];
        let second = if a % 2 == 0 {
            Kind::Helper
        } else {
            Kind::Destination
        };
        let qs = [
            question(&mut rng, Kind::Buy, name, answers[2 * a]),
            question(&mut rng, second, name, answers[2 * a + 1]),
        ];

        let intro = format!("{name} spent {day} in {town} with {friend}.");
        let mut sentences = vec![intro.clone()];
        sentences.extend(qs[0].sentences.iter().cloned());
        sentences.push("Then they had lunch together.".into());
        sentences.extend(qs[1].sentences.iter().cloned());
        sentences.push("It was a long but happy day.".into());

        let doc = format!("synthetic{:04}.txt", a + 1);
        let letters = ["A", "B", "C", "D"];
        let record = json!({
            "article": sentences.join(" "),
            "questions": qs.iter().map(|q| q.query.clone()).collect::<Vec<_>>(),
            "options": qs.iter().map(|q| q.options.clone()).collect::<Vec<_>>(),
            "answers": qs.iter().map(|q| letters[q.answer]).collect::<Vec<_>>(),
            "id": doc,
        });
        fs::write(
            race.join(format!("{:04}.json", a + 1)),
            format!("{record}\n"),
        )
        .unwrap();

        for (k, q) in qs.iter().enumerate() {
            let id = format!("{doc}:{k}");
            if let Some(p) = &q.parse {
                parses.push(json!({"id": id, "parse": p}));
            }
            let key = &q.sentences[q.answer_sentence];
            p4.push(json!({"id": id, "passage": format!("{intro} {key}")}));
            p5.push(json!({"id": id, "passage": key}));
        }
    }
    write_jsonl(&out.join("parses.jsonl"), &parses);
    write_jsonl(&sidecars.join("p4.jsonl"), &p4);
    write_jsonl(&sidecars.join("p5.jsonl"), &p5);
    println!("wrote {} articles to {}", ARTICLES, race.display());
}
