//! Clustering similarity metrics.

use std::collections::HashMap;

use super::{EquivalenceClass, MetricVariant};
use crate::edit::edit_distance;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::lexicon::PronLexicon;

/// Time overlap of two intervals normalized by the sum of their lengths.
pub fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    let len = (a.1 - a.0) + (b.1 - b.0);
    if len <= 0.0 {
        return 0.0;
    }
    let shared = a.1.min(b.1) - a.0.max(b.0);
    if shared <= 0.0 {
        0.0
    } else {
        shared / len
    }
}

/// One minus the phone edit distance of the two base forms, normalized by the
/// sum of their lengths.
pub fn phonetic_similarity(w1: &str, w2: &str, lex: &PronLexicon) -> Result<f64> {
    let a = lex.baseform(w1)?;
    let b = lex.baseform(w2)?;
    if w1 == w2 {
        return Ok(1.0);
    }
    Ok(1.0 - edit_distance(a, b) as f64 / (a.len() + b.len()) as f64)
}

/// Similarity of two same-word classes: the best posterior-weighted time
/// overlap over member pairs.
pub fn sim_intra(e1: &EquivalenceClass, e2: &EquivalenceClass, variant: MetricVariant) -> Result<f64> {
    if e1.words.len() != 1 || e1.words.keys().ne(e2.words.keys()) {
        return Err(Error::WordMismatch(e1.label().to_string(), e2.label().to_string()));
    }
    let mut best = 0.0f64;
    for a in &e1.members {
        for b in &e2.members {
            let weight = match variant {
                MetricVariant::NoPosterior => 1.0,
                _ => a.posterior * b.posterior,
            };
            let sim = match variant {
                MetricVariant::NoTime => weight,
                _ => overlap(a.span, b.span) * weight,
            };
            best = best.max(sim);
        }
    }
    Ok(best)
}

/// Caches pairwise phonetic similarity of words.
#[derive(Debug)]
pub struct PhoneticCache<'a> {
    lex: &'a PronLexicon,
    cache: HashMap<(String, String), f64>,
}

impl<'a> PhoneticCache<'a> {
    pub fn new(lex: &'a PronLexicon) -> Self {
        PhoneticCache {
            lex,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, w1: &str, w2: &str) -> Result<f64> {
        let key = if w1 <= w2 {
            (w1.to_string(), w2.to_string())
        } else {
            (w2.to_string(), w1.to_string())
        };
        if let Some(&s) = self.cache.get(&key) {
            return Ok(s);
        }
        let s = phonetic_similarity(w1, w2, self.lex)?;
        self.cache.insert(key, s);
        Ok(s)
    }
}

/// Similarity of two arbitrary classes: the average over word pairs of
/// phonetic similarity times the per-class word posteriors.
pub fn sim_inter(
    f1: &EquivalenceClass,
    f2: &EquivalenceClass,
    phonetic: &mut PhoneticCache<'_>,
    variant: MetricVariant,
) -> Result<f64> {
    let mut total = 0.0;
    for (w1, p1) in &f1.words {
        for (w2, p2) in &f2.words {
            let sim = match variant {
                MetricVariant::NoPhonetic => 1.0,
                _ => phonetic.get(w1, w2)?,
            };
            let weight = match variant {
                MetricVariant::NoPosterior => 1.0,
                _ => p1 * p2,
            };
            total += sim * weight;
        }
    }
    Ok(total / (f1.words.len() * f2.words.len()) as f64)
}

/// Pseudo-time of each node (in `lat.nodes()` order): the largest number of
/// phones on any path from the initial node.
pub fn estimate_times_from_phone_counts(lat: &Lattice, lex: &PronLexicon) -> Result<Vec<f64>> {
    let n = lat.nodes().len();
    let mut time = vec![0usize; n];
    for v in 0..n {
        for &k in lat.out_links(v) {
            let link = &lat.links()[k];
            let phones = lex.variant_phones(&link.word, link.pron_variant)?.len();
            let f = lat.ends()[k].1;
            time[f] = time[f].max(time[v] + phones);
        }
    }
    Ok(time.into_iter().map(|t| t as f64).collect())
}
