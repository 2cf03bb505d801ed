use std::collections::HashMap;

use crate::cn::{ConfusionNetwork, Slot};
use crate::error::{Error, Result};
use crate::lattice::{LinkId, DELETION};

/// The per-slot argmax hypothesis of a confusion network.
#[derive(Clone, Debug, PartialEq)]
pub struct Consensus {
    /// Output words, deletions removed.
    pub words: Vec<String>,
    /// Chosen token per slot, `-` included.
    pub path: Vec<String>,
    /// Sum of per-slot expected errors.
    pub expected_error: f64,
}

/// Expected word error contributed by choosing `choice` at this slot.
pub fn expected_slot_error(slot: &Slot, choice: &str) -> Result<f64> {
    if choice != DELETION && !slot.contains(choice) {
        return Err(Error::InvalidToken {
            slot: 0,
            token: choice.to_string(),
        });
    }
    Ok(1.0 - slot.posterior(choice))
}

pub fn consensus_hypothesis(cn: &ConfusionNetwork) -> Consensus {
    let path: Vec<String> = cn.slots().iter().map(|s| s.best_token().to_string()).collect();
    let expected_error = cn
        .slots()
        .iter()
        .zip(&path)
        .map(|(s, t)| 1.0 - s.posterior(t))
        .sum();
    Consensus {
        words: path.iter().filter(|t| *t != DELETION).cloned().collect(),
        path,
        expected_error,
    }
}

/// Expected error of a slot-indexed path under the slot posteriors.
pub fn expected_path_error<S: AsRef<str>>(cn: &ConfusionNetwork, path: &[S]) -> Result<f64> {
    cn.check_path(path)?;
    Ok(cn
        .slots()
        .iter()
        .zip(path)
        .map(|(s, t)| 1.0 - s.posterior(t.as_ref()))
        .sum())
}

/// Word error between two network paths under the network's own alignment:
/// the number of slots where the tokens differ.
pub fn mwe<S: AsRef<str>, T: AsRef<str>>(cn: &ConfusionNetwork, p1: &[S], p2: &[T]) -> Result<usize> {
    cn.check_path(p1)?;
    cn.check_path(p2)?;
    Ok(p1.iter().zip(p2).filter(|(a, b)| a.as_ref() != b.as_ref()).count())
}

/// Maps a lattice path (link ids) to its slot-indexed token sequence.
pub fn lattice_path_to_cn_path(cn: &ConfusionNetwork, path: &[LinkId]) -> Result<Vec<String>> {
    let mut slot_of: HashMap<LinkId, (usize, &str)> = HashMap::new();
    for (s, members) in cn.slot_links().iter().enumerate() {
        for (l, w) in members {
            slot_of.insert(*l, (s, w.as_str()));
        }
    }
    let mut tokens = vec![DELETION.to_string(); cn.len()];
    let mut last: Option<usize> = None;
    for &link in path {
        let &(s, w) = slot_of.get(&link).ok_or(Error::UnalignedLink(link))?;
        if last.is_some_and(|p| p >= s) {
            return Err(Error::Invariant(format!("path revisits slot {s} out of order")));
        }
        last = Some(s);
        tokens[s] = w.to_string();
    }
    Ok(tokens)
}

/// Places each word in the next slot that contains it, left to right, with
/// `-` in skipped slots. `None` if some word cannot be placed.
pub fn express_in_cn<S: AsRef<str>>(cn: &ConfusionNetwork, words: &[S]) -> Option<Vec<String>> {
    let mut tokens = vec![DELETION.to_string(); cn.len()];
    let mut pos = 0;
    for w in words {
        let w = w.as_ref();
        let s = (pos..cn.len()).find(|&s| cn.slots()[s].contains(w))?;
        tokens[s] = w.to_string();
        pos = s + 1;
    }
    Some(tokens)
}
