//! Pronunciation lexicon with a uniform model over each word's variants.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PronLexicon {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl PronLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a pronunciation variant. The first variant added for a word is
    /// its most likely base form.
    pub fn add<S: AsRef<str>>(&mut self, word: &str, phones: &[S]) -> Result<()> {
        if phones.is_empty() {
            return Err(Error::InvalidParameter(format!("word {word:?} has an empty pronunciation")));
        }
        self.entries
            .entry(word.to_string())
            .or_default()
            .push(phones.iter().map(|p| p.as_ref().to_string()).collect());
        Ok(())
    }

    /// Parses `WORD ph1 ph2 ...` lines; repeated words add variants.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = PronLexicon::new();
        for (n, raw) in text.lines().enumerate() {
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let mut toks = content.split_whitespace();
            let word = toks.next().expect("non-empty line");
            let phones: Vec<&str> = toks.collect();
            if phones.is_empty() {
                return Err(Error::parse(n + 1, format!("word {word:?} has no phones")));
            }
            lex.add(word, &phones)?;
        }
        Ok(lex)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, variants) in &self.entries {
            for v in variants {
                writeln!(out, "{w} {}", v.join(" ")).unwrap();
            }
        }
        out
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn variants(&self, word: &str) -> Result<&[Vec<String>]> {
        self.entries
            .get(word)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingWord(word.to_string()))
    }

    pub fn baseform(&self, word: &str) -> Result<&[String]> {
        Ok(&self.variants(word)?[0])
    }

    /// Phones for a specific variant; out-of-range variants fall back to the base form.
    pub fn variant_phones(&self, word: &str, variant: u32) -> Result<&[String]> {
        let v = self.variants(word)?;
        Ok(v.get(variant as usize).unwrap_or(&v[0]))
    }

    /// `ln P(Q|W)` under the uniform pronunciation model.
    pub fn log_variant_prob(&self, word: &str) -> Result<f64> {
        Ok(-(self.variants(word)?.len() as f64).ln())
    }

    /// Returns a lexicon covering every word in `words`. With `fallback`,
    /// missing words get a single pronunciation spelled letter by letter and
    /// are reported in the second element; otherwise a missing word is an error.
    pub fn covering<'a>(
        &self,
        words: impl IntoIterator<Item = &'a str>,
        fallback: bool,
    ) -> Result<(PronLexicon, Vec<String>)> {
        let mut lex = self.clone();
        let mut synthesized = Vec::new();
        for w in words {
            if lex.contains(w) {
                continue;
            }
            if !fallback {
                return Err(Error::MissingWord(w.to_string()));
            }
            lex.add(w, &letter_phones(w))?;
            synthesized.push(w.to_string());
        }
        synthesized.sort();
        Ok((lex, synthesized))
    }
}

fn letter_phones(word: &str) -> Vec<String> {
    let phones: Vec<String> = word
        .chars()
        .filter(|c| c.is_alphanumeric())
        .map(|c| c.to_lowercase().to_string())
        .collect();
    if phones.is_empty() {
        vec![word.to_lowercase()]
    } else {
        phones
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_variant_probabilities() {
        let lex = PronLexicon::parse("THE dh ah\nTHE dh iy\nA ah\n").unwrap();
        assert_eq!(lex.baseform("THE").unwrap(), ["dh", "ah"]);
        assert!((lex.log_variant_prob("THE").unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(lex.log_variant_prob("A").unwrap(), 0.0);
        assert_eq!(lex.variant_phones("THE", 1).unwrap(), ["dh", "iy"]);
        assert_eq!(lex.variant_phones("THE", 7).unwrap(), ["dh", "ah"]);
        assert_eq!(lex.variants("ZED"), Err(Error::MissingWord("ZED".into())));
    }

    #[test]
    fn fallback_spells_words() {
        let lex = PronLexicon::parse("A ah\n").unwrap();
        assert!(lex.covering(["A", "DON'T"], false).is_err());
        let (cov, synth) = lex.covering(["A", "DON'T"], true).unwrap();
        assert_eq!(synth, vec!["DON'T"]);
        assert_eq!(cov.baseform("DON'T").unwrap(), ["d", "o", "n", "t"]);
    }

    #[test]
    fn rejects_empty_pronunciation() {
        assert!(PronLexicon::parse("A\n").is_err());
        assert_eq!(PronLexicon::parse("B b\nA a\n").unwrap().to_text(), "A a\nB b\n");
    }
}
