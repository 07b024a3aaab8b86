use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use super::{Provenance, SeededRng, TransformId};
use crate::corpus::{Dataset, Example};
use crate::{Error, Result};

/// Remove the options at `drops`, keeping order and remapping `answer_index`.
pub fn remove_options(ex: &Example, drops: &[usize]) -> Result<Example> {
    if drops.contains(&ex.answer_index) {
        return Err(Error::invalid(format!(
            "{}: cannot drop the correct option",
            ex.id
        )));
    }
    if let Some(bad) = drops.iter().find(|&&d| d >= ex.options.len()) {
        return Err(Error::invalid(format!(
            "{}: option index {bad} out of range",
            ex.id
        )));
    }
    let options: Vec<String> = ex
        .options
        .iter()
        .enumerate()
        .filter(|(i, _)| !drops.contains(i))
        .map(|(_, o)| o.clone())
        .collect();
    let answer_index = ex.answer_index - drops.iter().filter(|&&d| d < ex.answer_index).count();
    Ok(Example {
        options,
        answer_index,
        ..ex.clone()
    })
}

/// O3 and O3(H): drop incorrect options until `keep` remain.
///
/// `forced_drop` (an annotated most-confusing option) goes first; the rest are
/// chosen uniformly from the remaining incorrect options.
pub fn drop_options<R: Rng + ?Sized>(
    ex: &Example,
    keep: usize,
    rng: &mut R,
    forced_drop: Option<usize>,
) -> Result<Example> {
    let n = ex.options.len();
    if keep < 2 {
        return Err(Error::invalid("must keep at least 2 options"));
    }
    if keep >= n {
        return Err(Error::invalid(format!(
            "{}: keep ({keep}) must be less than the option count ({n})",
            ex.id
        )));
    }
    let mut drops = Vec::with_capacity(n - keep);
    if let Some(forced) = forced_drop {
        if forced == ex.answer_index {
            return Err(Error::invalid(format!(
                "{}: forced_drop cannot be the correct option",
                ex.id
            )));
        }
        if forced >= n {
            return Err(Error::invalid(format!(
                "{}: forced_drop {forced} out of range",
                ex.id
            )));
        }
        drops.push(forced);
    }
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| i != ex.answer_index && Some(i) != forced_drop)
        .collect();
    // Partial Fisher-Yates: the first `needed` slots become a uniform sample.
    let needed = n - keep - drops.len();
    for i in 0..needed {
        let j = rng.random_range(i as u64..candidates.len() as u64) as usize;
        candidates.swap(i, j);
    }
    drops.extend_from_slice(&candidates[..needed]);
    let mut out = remove_options(ex, &drops)?;
    let mut provenance = Provenance::new(TransformId::O3);
    if let Some(forced) = forced_drop {
        provenance.notes = format!("O3(H): annotated option {forced} dropped");
    }
    out.provenance = Some(provenance);
    Ok(out)
}

/// O2: replace every incorrect option with a random option of another example.
pub fn options_foreign(dataset: &Dataset, rng: SeededRng) -> Result<Dataset> {
    if dataset.len() < 2 {
        return Err(Error::invalid("no foreign option pool"));
    }
    let mut blocks = Vec::with_capacity(dataset.len());
    let mut pool: Vec<&str> = Vec::new();
    for ex in &dataset.examples {
        let start = pool.len();
        pool.extend(ex.options.iter().map(String::as_str));
        blocks.push(start..pool.len());
    }
    let lowered: Vec<String> = pool.iter().map(|o| o.to_lowercase()).collect();
    let mut global: HashMap<&str, usize> = HashMap::new();
    for o in &lowered {
        *global.entry(o.as_str()).or_default() += 1;
    }

    let examples = dataset
        .examples
        .par_iter()
        .zip(&blocks)
        .map(|(ex, block)| {
            let mut own: HashMap<&str, usize> = HashMap::new();
            for o in &lowered[block.clone()] {
                *own.entry(o.as_str()).or_default() += 1;
            }
            let correct = ex.answer().to_lowercase();
            let available_count = |key: &str| global.get(key).copied().unwrap_or(0) - own.get(key).copied().unwrap_or(0);
            let vanished = own.keys().filter(|k| available_count(k) == 0).count();
            let mut distinct = global.len() - vanished;
            if available_count(&correct) > 0 {
                distinct -= 1;
            }
            let needed = ex.options.len() - 1;
            if distinct < needed {
                return Err(Error::invalid(format!(
                    "{}: foreign option pool exhausted ({distinct} distinct candidates for {needed} slots)",
                    ex.id
                )));
            }

            let pool_size = (pool.len() - block.len()) as u64;
            let mut stream = rng.stream(&ex.id);
            let mut taken: HashSet<String> = HashSet::from([correct]);
            let mut options = ex.options.clone();
            for (i, slot) in options.iter_mut().enumerate() {
                if i == ex.answer_index {
                    continue;
                }
                loop {
                    let r = stream.random_range(0..pool_size) as usize;
                    let idx = if r < block.start { r } else { r + block.len() };
                    if taken.insert(lowered[idx].clone()) {
                        *slot = pool[idx].to_string();
                        break;
                    }
                }
            }
            let mut provenance = Provenance::new(TransformId::O2);
            provenance.seed = Some(rng.seed);
            Ok(Example {
                options,
                provenance: Some(provenance),
                ..ex.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        examples,
        source_tag: TransformId::O2.to_string(),
    })
}
