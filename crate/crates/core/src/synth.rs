//! Seeded synthetic corpora: lattices that contain their reference path plus
//! acoustically confusable competitors, and small random lattices for tests.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::align::phonetic_similarity;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Link, Node};
use crate::lexicon::PronLexicon;

const CONSONANTS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["aa", "ae", "ah", "eh", "ih", "iy", "ow", "uw"];

/// Parameters of a synthetic corpus. Scores are in scaled log units: the
/// acoustic score written to the file is multiplied by `lm_scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub utterance_count: usize,
    pub vocab_size: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Competing words per reference position, drawn from 0..=max.
    pub max_decoys: usize,
    /// Decoys come from this many phonetically nearest words.
    pub neighborhood: usize,
    /// Mean score disadvantage of a decoy against the reference word.
    pub decoy_margin: f64,
    /// Standard deviation of per-link score noise.
    pub score_noise: f64,
    /// Probability that a reference word appears as two pronunciation variants.
    pub split_prob: f64,
    /// Probability of a single decoy spanning two reference words.
    pub span2_prob: f64,
    /// Probability of an inserted short word before a reference word.
    pub filler_prob: f64,
    pub lm_scale: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            utterance_count: 100,
            vocab_size: 80,
            min_words: 3,
            max_words: 10,
            max_decoys: 3,
            neighborhood: 6,
            decoy_margin: 0.5,
            score_noise: 1.0,
            split_prob: 0.3,
            span2_prob: 0.1,
            filler_prob: 0.1,
            lm_scale: 12.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.vocab_size < 2 {
            return bad("vocab_size must be at least 2");
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad("need 1 <= min_words <= max_words");
        }
        if self.neighborhood == 0 {
            return bad("neighborhood must be positive");
        }
        if !(self.decoy_margin.is_finite() && self.score_noise.is_finite() && self.score_noise >= 0.0) {
            return bad("decoy_margin must be finite and score_noise finite and non-negative");
        }
        for (name, p) in [
            ("split_prob", self.split_prob),
            ("span2_prob", self.span2_prob),
            ("filler_prob", self.filler_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must be a probability")));
            }
        }
        if !(self.lm_scale > 0.0 && self.lm_scale.is_finite()) {
            return Err(Error::InvalidLambda(self.lm_scale));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub lattice: Lattice,
    pub reference: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub lexicon: PronLexicon,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    /// Reference transcript in `utt w1 w2 ...` form.
    pub fn reference_text(&self) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            out.push_str(u.lattice.utterance_id());
            for w in &u.reference {
                write!(out, " {w}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Parses `utt w1 w2 ...` lines; an id alone means an empty transcript.
pub fn parse_transcripts(text: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let mut toks = raw.split_whitespace();
        let Some(id) = toks.next() else { continue };
        if id.starts_with('#') {
            continue;
        }
        if out.insert(id.to_string(), toks.map(str::to_string).collect()).is_some() {
            return Err(Error::parse(n + 1, format!("duplicate utterance id {id:?}")));
        }
    }
    Ok(out)
}

pub fn write_transcripts<'a>(entries: impl IntoIterator<Item = (&'a str, &'a [String])>) -> String {
    let mut out = String::new();
    for (id, words) in entries {
        out.push_str(id);
        for w in words {
            write!(out, " {w}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn make_vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<(String, Vec<String>)> {
    let mut seen = BTreeMap::new();
    while seen.len() < size {
        let syllables = rng.random_range(1..=2);
        let mut phones = Vec::new();
        for _ in 0..syllables {
            phones.push(*CONSONANTS.choose(rng).unwrap());
            phones.push(*VOWELS.choose(rng).unwrap());
            if rng.random_bool(0.5) {
                phones.push(*CONSONANTS.choose(rng).unwrap());
            }
        }
        let word = phones.concat().to_uppercase();
        seen.entry(word).or_insert_with(|| phones.iter().map(|p| p.to_string()).collect::<Vec<_>>());
    }
    // Shuffle deterministically so word order carries no structure.
    let mut vocab: Vec<_> = seen.into_iter().collect();
    for i in (1..vocab.len()).rev() {
        let j = rng.random_range(0..=i);
        vocab.swap(i, j);
    }
    vocab
}

struct Builder {
    nodes: Vec<Node>,
    links: Vec<Link>,
    lm_scale: f64,
}

impl Builder {
    fn node(&mut self, time: f64) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { id, time });
        id
    }

    fn link(&mut self, rng: &mut ChaCha8Rng, from: u32, to: u32, word: &str, score: &Normal<f64>, variant: u32) {
        let scaled = score.sample(rng);
        let lm = -rng.random_range(0.0..1.0f64);
        let ac = (scaled - lm) * self.lm_scale;
        let id = self.links.len() as u32;
        self.links.push(Link::new(id, from, to, word, ac, lm).with_variant(variant));
    }
}

/// Generates a corpus fully determined by `spec` and `seed`.
pub fn generate_corpus(spec: &SyntheticSpec, seed: u64) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = make_vocabulary(&mut rng, spec.vocab_size);
    let words: Vec<&str> = vocab.iter().map(|(w, _)| w.as_str()).collect();
    let phones: BTreeMap<&str, &[String]> = vocab.iter().map(|(w, p)| (w.as_str(), p.as_slice())).collect();

    // Words that may be split get a second, vowel-reduced pronunciation.
    let mut lexicon = PronLexicon::new();
    for (w, p) in &vocab {
        lexicon.add(w, p)?;
        let mut alt = p.clone();
        if let Some(v) = alt.iter_mut().find(|ph| VOWELS.contains(&ph.as_str())) {
            *v = "ah".into();
        }
        if alt == *p {
            alt.push("ah".into());
        }
        lexicon.add(w, &alt)?;
    }

    let mut neighbors: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for &w in &words {
        let mut scored: Vec<(f64, &str)> = words
            .iter()
            .filter(|&&o| o != w)
            .map(|&o| Ok((phonetic_similarity(w, o, &lexicon)?, o)))
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        neighbors.insert(w, scored.into_iter().take(spec.neighborhood).map(|(_, o)| o).collect());
    }
    let fillers: Vec<&str> = {
        let mut by_len = words.clone();
        by_len.sort_by_key(|w| (phones[w].len(), *w));
        by_len.into_iter().take(spec.vocab_size.div_ceil(5)).collect()
    };

    let decoy_noise = Normal::new(-spec.decoy_margin, spec.score_noise).expect("validated");
    let true_noise = Normal::new(0.0, spec.score_noise).expect("validated");
    let width = (spec.utterance_count.max(1) - 1).to_string().len().max(4);
    let mut utterances = Vec::with_capacity(spec.utterance_count);
    for u in 0..spec.utterance_count {
        let len = rng.random_range(spec.min_words..=spec.max_words);
        let reference: Vec<String> = (0..len).map(|_| words.choose(&mut rng).unwrap().to_string()).collect();
        let mut b = Builder {
            nodes: Vec::new(),
            links: Vec::new(),
            lm_scale: spec.lm_scale,
        };
        let mut boundary = vec![b.node(0.0)];
        let mut t = 0.0;
        for w in &reference {
            t += 0.08 * phones[w.as_str()].len() as f64;
            boundary.push(b.node((t * 1000.0).round() / 1000.0));
        }
        for (k, w) in reference.iter().enumerate() {
            let (from, to) = (boundary[k], boundary[k + 1]);
            if rng.random_bool(spec.split_prob) {
                b.link(&mut rng, from, to, w, &true_noise, 0);
                b.link(&mut rng, from, to, w, &true_noise, 1);
            } else {
                b.link(&mut rng, from, to, w, &true_noise, 0);
            }
            let near = &neighbors[w.as_str()];
            let count = rng.random_range(0..=spec.max_decoys.min(near.len()));
            for d in near.choose_multiple(&mut rng, count) {
                b.link(&mut rng, from, to, d, &decoy_noise, 0);
            }
            if rng.random_bool(spec.filler_prob) {
                let (t0, t1) = (b.nodes[from as usize].time, b.nodes[to as usize].time);
                let mid = b.node(((t0 + 0.25 * (t1 - t0)) * 1000.0).round() / 1000.0);
                let f = *fillers.choose(&mut rng).unwrap();
                b.link(&mut rng, from, mid, f, &decoy_noise, 0);
                b.link(&mut rng, mid, to, w, &true_noise, 0);
            }
            if k + 2 <= len && rng.random_bool(spec.span2_prob) {
                let d = *words.choose(&mut rng).unwrap();
                b.link(&mut rng, from, boundary[k + 2], d, &decoy_noise, 0);
            }
        }
        let id = format!("utt{u:0width$}");
        let lattice = Lattice::new(id, b.nodes, b.links, Some(spec.lm_scale))?;
        utterances.push(Utterance { lattice, reference });
    }
    Ok(Corpus { lexicon, utterances })
}

/// Shape of a random test lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomLatticeSpec {
    pub max_nodes: usize,
    pub max_extra_links: usize,
    pub vocabulary: Vec<String>,
    /// Upper bound on the number of complete paths.
    pub max_paths: u64,
    /// Probability that a node shares its predecessor's time.
    pub tie_prob: f64,
}

impl Default for RandomLatticeSpec {
    fn default() -> Self {
        RandomLatticeSpec {
            max_nodes: 8,
            max_extra_links: 10,
            vocabulary: ["A", "B", "C", "D", "E", "F"].map(String::from).to_vec(),
            max_paths: 5000,
            tie_prob: 0.1,
        }
    }
}

/// A random lattice over a backbone chain with extra forward links, scored
/// with random acoustic and language model values. Every node lies on a
/// complete path.
pub fn random_lattice(rng: &mut impl Rng, spec: &RandomLatticeSpec, id: &str) -> Lattice {
    loop {
        let n = rng.random_range(2..=spec.max_nodes.max(2));
        let mut nodes = Vec::with_capacity(n);
        let mut t = 0.0;
        for i in 0..n {
            if i > 0 && !rng.random_bool(spec.tie_prob) {
                t += f64::from(rng.random_range(1..=4u8)) * 0.1;
            }
            nodes.push(Node {
                id: i as u32,
                time: (t * 10.0f64).round() / 10.0,
            });
        }
        let mut ends: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
        for _ in 0..rng.random_range(0..=spec.max_extra_links) {
            let a = rng.random_range(0..n - 1);
            let b = rng.random_range(a + 1..n);
            ends.push((a as u32, b as u32));
        }
        let links = ends
            .into_iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = spec.vocabulary.choose(rng).expect("non-empty vocabulary");
                Link::new(k as u32, a, b, w, rng.random_range(-8.0..0.0), rng.random_range(-3.0..0.0))
            })
            .collect();
        let lat = Lattice::new(id, nodes, links, None).expect("generated lattice is valid");
        if lat.count_paths() <= spec.max_paths.into() {
            return lat;
        }
    }
}

/// Single-variant letter pronunciations for every word of `vocabulary`.
pub fn letter_lexicon<S: AsRef<str>>(vocabulary: &[S]) -> PronLexicon {
    PronLexicon::new()
        .covering(vocabulary.iter().map(AsRef::as_ref), true)
        .expect("fallback never fails")
        .0
}
