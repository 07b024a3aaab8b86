//! Bag-of-words baseline and accuracy statistics.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::corpus::{tokenize, Dataset, Example};
use crate::{Error, Result};

/// Thirty high-frequency English function words ignored by the baseline.
pub const STOP_WORDS: [&str; 30] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "had", "has", "have",
    "he", "i", "in", "is", "it", "its", "of", "on", "or", "that", "the", "this", "to", "was",
    "were", "with",
];

/// Lowercased content tokens: tokens with at least one alphanumeric character,
/// minus stop words.
pub fn content_tokens(text: &str) -> HashSet<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(|t| t.to_lowercase())
        .filter(|t| !STOP_WORDS.contains(&t.as_str()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowPrediction {
    pub index: usize,
    pub scores: Vec<f64>,
}

/// Score each option by the fraction of its content tokens found in the
/// passage or query; the highest score wins, ties go to the lowest index.
pub fn bow_predict(ex: &Example) -> BowPrediction {
    let mut context = content_tokens(&ex.passage);
    context.extend(content_tokens(&ex.query));
    let scores: Vec<f64> = ex
        .options
        .iter()
        .map(|o| {
            let opt = content_tokens(o);
            if opt.is_empty() {
                0.0
            } else {
                opt.intersection(&context).count() as f64 / opt.len() as f64
            }
        })
        .collect();
    let mut index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[index] {
            index = i;
        }
    }
    BowPrediction { index, scores }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineResult {
    pub predictions: BTreeMap<String, usize>,
    pub accuracy: f64,
    pub per_example_scores: BTreeMap<String, Vec<f64>>,
}

pub fn run_baseline(dataset: &Dataset) -> Result<BaselineResult> {
    let mut predictions = BTreeMap::new();
    let mut per_example_scores = BTreeMap::new();
    for ex in &dataset.examples {
        let p = bow_predict(ex);
        predictions.insert(ex.id.clone(), p.index);
        per_example_scores.insert(ex.id.clone(), p.scores);
    }
    let accuracy = evaluate(dataset, &predictions)?;
    Ok(BaselineResult {
        predictions,
        accuracy,
        per_example_scores,
    })
}

/// Fraction of examples whose predicted index equals `answer_index`.
pub fn evaluate(dataset: &Dataset, predictions: &BTreeMap<String, usize>) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let missing: Vec<&str> = dataset
        .examples
        .iter()
        .filter(|e| !predictions.contains_key(&e.id))
        .map(|e| e.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "no prediction for: {}",
            missing.join(", ")
        )));
    }
    let correct = dataset
        .examples
        .iter()
        .filter(|e| predictions[&e.id] == e.answer_index)
        .count();
    Ok(correct as f64 / dataset.len() as f64)
}

/// Improvement over random guessing among `n_options`, relative to chance.
pub fn relative_improvement(accuracy: f64, n_options: usize) -> Result<f64> {
    if n_options < 2 {
        return Err(Error::invalid("n_options must be at least 2"));
    }
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::invalid(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    let chance = 1.0 / n_options as f64;
    Ok((accuracy - chance) / chance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub accuracy: f64,
    pub n_options: Option<usize>,
    pub relative_improvement: Option<f64>,
}

/// Accuracy plus relative improvement when all examples share an option count.
pub fn stats(dataset: &Dataset, accuracy: f64) -> Result<Stats> {
    let counts: HashSet<usize> = dataset.examples.iter().map(|e| e.options.len()).collect();
    let n_options = (counts.len() == 1).then(|| *counts.iter().next().unwrap_or(&0));
    let relative_improvement = n_options
        .map(|n| relative_improvement(accuracy, n))
        .transpose()?;
    Ok(Stats {
        accuracy,
        n_options,
        relative_improvement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ex(passage: &str, options: &[&str], answer_index: usize) -> Example {
        Example {
            id: format!("{passage}:{answer_index}"),
            passage: passage.into(),
            query: "Which one?".into(),
            options: options.iter().map(|s| s.to_string()).collect(),
            answer_index,
            provenance: None,
        }
    }

    #[test]
    fn stop_list_has_thirty_distinct_words() {
        let set: HashSet<_> = STOP_WORDS.iter().collect();
        assert_eq!(set.len(), 30);
    }

    #[test]
    fn p8_style_passage() {
        let p = bow_predict(&ex("blue", &["red", "blue", "green", "dark"], 1));
        assert_eq!(p.index, 1);
        assert_eq!(p.scores, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn all_zero_picks_first() {
        assert_eq!(bow_predict(&ex("nothing", &["red", "blue"], 1)).index, 0);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let p = bow_predict(&ex(
            "the red hat and the blue hat",
            &["green", "red hat", "blue hat"],
            2,
        ));
        assert_eq!(p.scores, [0.0, 1.0, 1.0]);
        assert_eq!(p.index, 1);
    }

    #[test]
    fn stop_words_only_option_scores_zero() {
        let p = bow_predict(&ex("of the", &["of the", "x"], 0));
        assert_eq!(p.scores[0], 0.0);
    }

    #[test]
    fn evaluate_cases() {
        let d = Dataset::new(
            (0..4)
                .map(|i| ex(&format!("p{i}"), &["a", "b"], i % 2))
                .collect(),
            "t",
        )
        .unwrap();
        let mut preds: BTreeMap<String, usize> = d
            .examples
            .iter()
            .map(|e| (e.id.clone(), e.answer_index))
            .collect();
        assert_eq!(evaluate(&d, &preds).unwrap(), 1.0);
        *preds.get_mut("p0:0").unwrap() = 1;
        assert_eq!(evaluate(&d, &preds).unwrap(), 0.75);
        preds.remove("p1:1");
        assert!(evaluate(&d, &preds).is_err());
        let empty = Dataset::default();
        assert_eq!(
            evaluate(&empty, &BTreeMap::new()).unwrap_err().to_string(),
            "empty dataset"
        );
    }

    #[test]
    fn relative_improvement_values() {
        assert_abs_diff_eq!(
            relative_improvement(0.6621, 2).unwrap(),
            0.3242,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(relative_improvement(0.25, 4).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            relative_improvement(0.4408, 4).unwrap(),
            0.7632,
            epsilon = 1e-12
        );
        assert!(relative_improvement(0.5, 1).is_err());
        assert!(relative_improvement(1.5, 2).is_err());
    }

    proptest! {
        #[test]
        fn chance_is_zero_and_monotone(n in 2usize..10, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assert!(relative_improvement(1.0 / n as f64, n).unwrap().abs() < 1e-12);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo < hi {
                prop_assert!(relative_improvement(lo, n).unwrap() < relative_improvement(hi, n).unwrap());
            }
        }

        #[test]
        fn reordering_permutes_prediction(
            words in proptest::collection::vec("[a-z]{3,6}", 4),
            passage_pick in proptest::collection::vec(any::<bool>(), 4),
            rotation in 0usize..4,
        ) {
            let passage: Vec<&str> = words.iter().zip(&passage_pick).filter(|(_, p)| **p).map(|(w, _)| w.as_str()).collect();
            let options: Vec<&str> = words.iter().map(String::as_str).collect();
            let a = bow_predict(&ex(&passage.join(" "), &options, 0));
            let mut rotated = options.clone();
            rotated.rotate_left(rotation);
            let b = bow_predict(&ex(&passage.join(" "), &rotated, 0));
            // Same score multiset, and the chosen option is the lowest-index maximum.
            let best = b.scores.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(b.scores[b.index], best);
            prop_assert_eq!(b.scores.iter().position(|s| *s == best), Some(b.index));
            let a_best = a.scores.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(a_best, best);
            for (i, s) in b.scores.iter().enumerate() {
                prop_assert_eq!(*s, a.scores[(i + rotation) % 4]);
            }
        }
    }
}
