//! Confusion networks: a total order of slots, each a distribution over
//! competing words and the deletion token.
//!
//! File format:
//!
//! ```text
//! UTT=<id>
//! slot 0 I:0.430380 -:0.569620
//! slot 1 DOING:0.620253 DO:0.367089 DON'T:0.012658
//! ```

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::lattice::{LinkId, DELETION};

#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    /// Sorted by descending posterior, ties by token.
    entries: Vec<(String, f64)>,
}

fn entry_order(a: &(String, f64), b: &(String, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

impl Slot {
    pub fn new(mut entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("confusion slot with no tokens".into()));
        }
        entries.sort_by(entry_order);
        let mut names: Vec<&str> = entries.iter().map(|e| e.0.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate token in confusion slot".into()));
        }
        if entries.iter().any(|e| !(e.1.is_finite() && e.1 >= 0.0)) {
            return Err(Error::InvalidParameter("slot posterior must be a finite non-negative number".into()));
        }
        Ok(Slot { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.iter().any(|e| e.0 == token)
    }

    /// Posterior of `token`, zero when absent.
    pub fn posterior(&self, token: &str) -> f64 {
        self.entries.iter().find(|e| e.0 == token).map_or(0.0, |e| e.1)
    }

    pub fn deletion_mass(&self) -> f64 {
        self.posterior(DELETION)
    }

    /// Total mass of the retained tokens.
    pub fn retained_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// 1-based rank of `token` by descending posterior.
    pub fn rank(&self, token: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == token).map(|p| p + 1)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str()).filter(|t| *t != DELETION)
    }

    /// Highest-posterior token; real words win ties against the deletion,
    /// then the lexicographically smaller word.
    pub fn best_token(&self) -> &str {
        let top = self.entries[0].1;
        self.entries
            .iter()
            .take_while(|e| e.1 == top)
            .map(|e| e.0.as_str())
            .min_by_key(|t| (*t == DELETION, *t))
            .expect("slot is non-empty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionNetwork {
    pub utterance_id: String,
    slots: Vec<Slot>,
    /// Originating equivalence class of each slot.
    slot_class_map: Vec<usize>,
    /// Lattice links aligned to each slot, with their words.
    slot_links: Vec<Vec<(LinkId, String)>>,
}

impl ConfusionNetwork {
    pub fn new(utterance_id: impl Into<String>, slots: Vec<Slot>) -> Self {
        let n = slots.len();
        ConfusionNetwork {
            utterance_id: utterance_id.into(),
            slots,
            slot_class_map: (0..n).collect(),
            slot_links: vec![Vec::new(); n],
        }
    }

    pub(crate) fn with_alignment(
        utterance_id: impl Into<String>,
        slots: Vec<Slot>,
        slot_class_map: Vec<usize>,
        slot_links: Vec<Vec<(LinkId, String)>>,
    ) -> Self {
        ConfusionNetwork {
            utterance_id: utterance_id.into(),
            slots,
            slot_class_map,
            slot_links,
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot_class_map(&self) -> &[usize] {
        &self.slot_class_map
    }

    pub fn slot_links(&self) -> &[Vec<(LinkId, String)>] {
        &self.slot_links
    }

    /// Slot holding a given lattice link, if the network was built from a lattice.
    pub fn slot_of_link(&self, link: LinkId) -> Option<usize> {
        self.slot_links
            .iter()
            .position(|members| members.iter().any(|(l, _)| *l == link))
    }

    /// Same network with each slot's tokens replaced (alignment metadata kept).
    pub(crate) fn map_slots(&self, slots: Vec<Slot>) -> Self {
        assert_eq!(slots.len(), self.slots.len());
        ConfusionNetwork {
            utterance_id: self.utterance_id.clone(),
            slots,
            slot_class_map: self.slot_class_map.clone(),
            slot_links: self.slot_links.clone(),
        }
    }

    /// Checks that every slot's posteriors sum to one within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (i, s) in self.slots.iter().enumerate() {
            let sum = s.retained_mass();
            if (sum - 1.0).abs() > tol {
                return Err(Error::SlotMass { slot: i, sum });
            }
        }
        Ok(())
    }

    /// Number of distinct paths: the product of slot sizes.
    pub fn count_paths(&self) -> BigUint {
        self.slots
            .iter()
            .fold(BigUint::one(), |acc, s| acc * BigUint::from(s.len()))
    }

    /// Checks a slot-indexed token sequence against the network.
    pub fn check_path<S: AsRef<str>>(&self, path: &[S]) -> Result<()> {
        if path.len() != self.slots.len() {
            return Err(Error::PathLength {
                expected: self.slots.len(),
                found: path.len(),
            });
        }
        for (i, (tok, slot)) in path.iter().zip(&self.slots).enumerate() {
            let tok = tok.as_ref();
            if tok != DELETION && !slot.contains(tok) {
                return Err(Error::InvalidToken {
                    slot: i,
                    token: tok.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("UTT={}\n", self.utterance_id);
        for (i, s) in self.slots.iter().enumerate() {
            write!(out, "slot {i}").unwrap();
            for (tok, p) in &s.entries {
                write!(out, " {tok}:{p:.6}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut utt = None;
        let mut slots = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(id) = content.strip_prefix("UTT=") {
                utt = Some(id.to_string());
                continue;
            }
            let mut toks = content.split_whitespace();
            if toks.next() != Some("slot") {
                return Err(Error::parse(line, "expected `slot <index> <word>:<posterior> ...`"));
            }
            let idx: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(line, "missing slot index"))?;
            if idx != slots.len() {
                return Err(Error::parse(line, format!("slot index {idx} out of sequence")));
            }
            let mut entries = Vec::new();
            for t in toks {
                let (w, p) = t
                    .rsplit_once(':')
                    .ok_or_else(|| Error::parse(line, format!("bad entry {t:?}")))?;
                let p: f64 = p.parse().map_err(|_| Error::parse(line, format!("bad posterior in {t:?}")))?;
                entries.push((w.to_string(), p));
            }
            slots.push(Slot::new(entries).map_err(|e| Error::parse(line, e.to_string()))?);
        }
        let utt = utt.ok_or_else(|| Error::parse(1, "missing UTT= header"))?;
        Ok(ConfusionNetwork::new(utt, slots))
    }
}
