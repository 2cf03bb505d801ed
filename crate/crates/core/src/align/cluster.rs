use std::cmp::Ordering;

use super::similarity::{sim_inter, sim_intra, PhoneticCache};
use super::{AlignmentState, EquivalenceClass, MetricVariant, Stage};
use crate::cn::{ConfusionNetwork, Slot};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkId, DELETION};
use crate::lexicon::PronLexicon;

/// Deletion masses within this distance of zero are treated as zero.
const MASS_EPS: f64 = 1e-9;
/// Larger negative deletion masses indicate broken posteriors.
const MASS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlignOptions {
    pub variant: MetricVariant,
    /// Run the full partial-order check after every merge.
    pub check_invariants: bool,
}

/// One greedy merge.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeRecord {
    pub stage: Stage,
    pub kept: usize,
    pub removed: usize,
    pub similarity: f64,
}

#[derive(Clone, Debug)]
struct Candidate {
    u: usize,
    v: usize,
    sim: f64,
    start: f64,
    labels: (String, String),
}

impl Candidate {
    fn new(state: &AlignmentState, u: usize, v: usize, sim: f64) -> Self {
        let (cu, cv) = (state.class(u).unwrap(), state.class(v).unwrap());
        let start = cu.span().0.min(cv.span().0);
        let (a, b) = (cu.label().to_string(), cv.label().to_string());
        let labels = if a <= b { (a, b) } else { (b, a) };
        Candidate {
            u: u.min(v),
            v: u.max(v),
            sim,
            start,
            labels,
        }
    }

    /// Higher similarity first, then earliest start, then labels, then ids.
    fn priority(&self, other: &Self) -> Ordering {
        other
            .sim
            .total_cmp(&self.sim)
            .then(self.start.total_cmp(&other.start))
            .then_with(|| self.labels.cmp(&other.labels))
            .then((self.u, self.v).cmp(&(other.u, other.v)))
    }
}

fn same_words(a: &EquivalenceClass, b: &EquivalenceClass) -> bool {
    a.words.keys().eq(b.words.keys())
}

fn similarity(
    state: &AlignmentState,
    stage: Stage,
    u: usize,
    v: usize,
    phonetic: &mut PhoneticCache<'_>,
) -> Result<Option<f64>> {
    let (cu, cv) = (state.class(u).unwrap(), state.class(v).unwrap());
    match stage {
        Stage::IntraDone => {
            if !same_words(cu, cv) {
                return Ok(None);
            }
            sim_intra(cu, cv, state.variant()).map(Some)
        }
        _ => sim_inter(cu, cv, phonetic, state.variant()).map(Some),
    }
}

fn run_stage(
    state: &mut AlignmentState,
    target: Stage,
    lex: &PronLexicon,
    opts: &AlignOptions,
    observer: &mut dyn FnMut(&AlignmentState, &MergeRecord),
) -> Result<()> {
    let mut phonetic = PhoneticCache::new(lex);
    let mut cands = Vec::new();
    let live: Vec<usize> = state.classes().map(|c| c.class_id).collect();
    for (a, &u) in live.iter().enumerate() {
        for &v in &live[a + 1..] {
            if state.comparable(u, v) {
                continue;
            }
            if let Some(sim) = similarity(state, target, u, v, &mut phonetic)? {
                cands.push(Candidate::new(state, u, v, sim));
            }
        }
    }

    // Same-word merging stops once no candidate has positive similarity,
    // except without times, where every unordered same-word pair merges.
    let require_positive = target == Stage::IntraDone && state.variant() != MetricVariant::NoTime;
    loop {
        cands.retain(|c| !state.comparable(c.u, c.v));
        let Some(best) = cands.iter().min_by(|a, b| a.priority(b)).cloned() else {
            break;
        };
        if require_positive && best.sim <= 0.0 {
            break;
        }
        let kept = state.merge_classes(best.u, best.v)?;
        let removed = if kept == best.u { best.v } else { best.u };
        let record = MergeRecord {
            stage: target,
            kept,
            removed,
            similarity: best.sim,
        };
        if opts.check_invariants {
            state.check_invariants()?;
        }
        observer(state, &record);

        cands.retain(|c| c.u != best.u && c.v != best.u && c.u != best.v && c.v != best.v);
        let others: Vec<usize> = state.classes().map(|c| c.class_id).filter(|&w| w != kept).collect();
        for w in others {
            if state.comparable(kept, w) {
                continue;
            }
            if let Some(sim) = similarity(state, target, kept, w, &mut phonetic)? {
                cands.push(Candidate::new(state, kept, w, sim));
            }
        }
    }
    state.set_stage(target);
    Ok(())
}

/// Greedily merges the most similar unordered same-word classes.
pub fn intra_word_cluster(
    state: &mut AlignmentState,
    opts: &AlignOptions,
    observer: &mut dyn FnMut(&AlignmentState, &MergeRecord),
) -> Result<()> {
    if state.stage() != Stage::Initial {
        return Err(Error::InvalidParameter("intra-word clustering needs the initial partition".into()));
    }
    // The intra-word metric never looks at pronunciations.
    let lex = PronLexicon::new();
    run_stage(state, Stage::IntraDone, &lex, opts, observer)
}

/// Greedily merges the most similar unordered classes until the order is total.
pub fn inter_word_cluster(
    state: &mut AlignmentState,
    lex: &PronLexicon,
    opts: &AlignOptions,
    observer: &mut dyn FnMut(&AlignmentState, &MergeRecord),
) -> Result<()> {
    if state.stage() != Stage::IntraDone {
        return Err(Error::InvalidParameter("inter-word clustering needs intra-word clustering first".into()));
    }
    run_stage(state, Stage::TotalOrder, lex, opts, observer)?;
    if !state.is_total() {
        return Err(Error::Invariant("inter-word clustering ended without a total order".into()));
    }
    Ok(())
}

/// Turns a totally ordered alignment into a confusion network, adding a
/// deletion token carrying the mass of paths that skip each slot.
pub fn build_confusion_network(state: &AlignmentState) -> Result<ConfusionNetwork> {
    let mut live: Vec<&EquivalenceClass> = state.classes().collect();
    let mut rank = vec![0usize; state.capacity()];
    for c in &live {
        rank[c.class_id] = live.iter().filter(|d| state.precedes(d.class_id, c.class_id)).count();
    }
    live.sort_by_key(|c| rank[c.class_id]);
    for w in live.windows(2) {
        if !state.precedes(w[0].class_id, w[1].class_id) {
            return Err(Error::Invariant(format!(
                "classes {} and {} are not ordered",
                w[0].class_id, w[1].class_id
            )));
        }
    }

    let mut slots = Vec::with_capacity(live.len());
    let mut class_map = Vec::with_capacity(live.len());
    let mut slot_links: Vec<Vec<(LinkId, String)>> = Vec::with_capacity(live.len());
    for (i, c) in live.iter().enumerate() {
        let mut entries: Vec<(String, f64)> = c.words.iter().map(|(w, p)| (w.clone(), *p)).collect();
        let deletion = 1.0 - c.mass();
        if deletion < -MASS_TOL {
            return Err(Error::SlotMass {
                slot: i,
                sum: c.mass(),
            });
        }
        if deletion > MASS_EPS {
            entries.push((DELETION.to_string(), deletion));
        }
        slots.push(Slot::new(entries)?);
        class_map.push(c.class_id);
        slot_links.push(c.members.iter().map(|m| (m.link, m.word.clone())).collect());
    }
    Ok(ConfusionNetwork::with_alignment(
        state.utterance_id(),
        slots,
        class_map,
        slot_links,
    ))
}

/// Initial partition, both clustering stages, and the confusion network.
pub fn align_lattice(
    lat: &Lattice,
    lex: &PronLexicon,
    opts: &AlignOptions,
) -> Result<(AlignmentState, ConfusionNetwork)> {
    let mut state = AlignmentState::new(lat, opts.variant, lex)?;
    if opts.check_invariants {
        state.check_invariants()?;
    }
    intra_word_cluster(&mut state, opts, &mut |_, _| {})?;
    inter_word_cluster(&mut state, lex, opts, &mut |_, _| {})?;
    let cn = build_confusion_network(&state)?;
    Ok((state, cn))
}
