//! Uses of a confusion network beyond the consensus hypothesis: slot
//! pruning, lattice filtering, oracle accuracy, rank statistics and word
//! confidences.

use std::collections::{BTreeMap, HashMap};

use crate::cn::{ConfusionNetwork, Slot};
use crate::decode::{consensus_hypothesis, express_in_cn};
use crate::error::{Error, Result};
use crate::lattice::{best_path_indices, oracle_wer, Lattice, DELETION};

/// Keeps at most `max_candidates` tokens per slot, dropping those below
/// `min_posterior`. The top token always survives. Posteriors are not
/// renormalized; `Slot::retained_mass` reports what is left.
pub fn prune_confusion_network(
    cn: &ConfusionNetwork,
    max_candidates: usize,
    min_posterior: f64,
) -> Result<ConfusionNetwork> {
    if max_candidates < 1 {
        return Err(Error::InvalidParameter("max_candidates must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&min_posterior) {
        return Err(Error::InvalidParameter(format!("min_posterior {min_posterior} outside [0, 1]")));
    }
    let slots = cn
        .slots()
        .iter()
        .map(|slot| {
            let best = slot.best_token();
            let mut kept = vec![(best.to_string(), slot.posterior(best))];
            kept.extend(
                slot.entries()
                    .iter()
                    .filter(|(tok, p)| tok != best && *p >= min_posterior)
                    .take(max_candidates - 1)
                    .cloned(),
            );
            Slot::new(kept)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cn.map_slots(slots))
}

/// Removes every link whose word was pruned from its slot, then trims the
/// lattice. `cn` must carry the link alignment of `lat` (built from it and
/// possibly pruned since). The lattice path closest to the consensus words
/// is always kept, so the result is never empty.
pub fn consensus_prune_lattice(lat: &Lattice, cn: &ConfusionNetwork) -> Result<Lattice> {
    let mut slot_of: HashMap<u32, usize> = HashMap::new();
    for (s, members) in cn.slot_links().iter().enumerate() {
        for (l, _) in members {
            slot_of.insert(*l, s);
        }
    }
    let mut keep = Vec::with_capacity(lat.links().len());
    for link in lat.links() {
        let s = *slot_of.get(&link.id).ok_or(Error::UnalignedLink(link.id))?;
        keep.push(cn.slots()[s].contains(&link.word));
    }
    let protected = oracle_wer(lat, &consensus_hypothesis(cn).words);
    for id in protected.links {
        keep[lat.link_index(id)?] = true;
    }
    lat.retain_links(&keep)
}

/// Likelihood pruning: keeps a link if the best complete path through it
/// scores within `beam` (natural log) of the best path overall. The best
/// path itself always survives.
pub fn beam_prune_lattice(lat: &Lattice, beam: f64) -> Result<Lattice> {
    if lat.links().is_empty() {
        return Err(Error::EmptyLattice);
    }
    if beam.is_nan() || beam < 0.0 {
        return Err(Error::InvalidParameter(format!("beam {beam} must be non-negative")));
    }
    let n = lat.nodes().len();
    let ends = lat.ends();
    let links = lat.links();
    let mut fwd = vec![f64::NEG_INFINITY; n];
    let mut bwd = vec![f64::NEG_INFINITY; n];
    fwd[lat.initial_index()] = 0.0;
    bwd[lat.final_index()] = 0.0;
    for v in 0..n {
        for &k in lat.out_links(v) {
            let f = ends[k].1;
            fwd[f] = fwd[f].max(fwd[v] + links[k].scaled_logscore);
        }
    }
    for v in (0..n).rev() {
        for &k in lat.in_links(v) {
            let i = ends[k].0;
            bwd[i] = bwd[i].max(bwd[v] + links[k].scaled_logscore);
        }
    }
    let best = fwd[lat.final_index()];
    let slack = 1e-9 * best.abs().max(1.0);
    let mut keep: Vec<bool> = ends
        .iter()
        .zip(links)
        .map(|(&(i, f), l)| fwd[i] + l.scaled_logscore + bwd[f] >= best - beam - slack)
        .collect();
    for k in best_path_indices(lat) {
        keep[k] = true;
    }
    lat.retain_links(&keep)
}

/// Nodes and links per reference word.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density {
    pub node_density: f64,
    pub link_density: f64,
}

/// Lattice size relative to the reference length (a zero-length reference
/// counts as one word).
pub fn lattice_density(lat: &Lattice, reference_words: usize) -> Density {
    let denom = reference_words.max(1) as f64;
    Density {
        node_density: lat.nodes().len() as f64 / denom,
        link_density: lat.links().len() as f64 / denom,
    }
}

/// Best network path against a reference.
#[derive(Clone, Debug, PartialEq)]
pub struct CnAlignment {
    pub errors: usize,
    /// Chosen token per slot, `-` where the slot is skipped.
    pub path: Vec<String>,
    /// Reference token aligned to each slot: a reference word for a match
    /// or substitution, `-` when no reference word lands there.
    pub slot_reference: Vec<String>,
    /// Reference words with no slot.
    pub deleted: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Move {
    Match,
    Sub,
    Del,
    Skip,
}

/// Minimum word errors over all network paths. Any slot may be skipped at
/// no cost. Ties in the back-trace prefer match, then substitution, then a
/// reference deletion, then skipping the slot.
pub fn cn_accuracy<S: AsRef<str>>(cn: &ConfusionNetwork, reference: &[S]) -> CnAlignment {
    let slots = cn.slots();
    let (n, m) = (slots.len(), reference.len());
    // cost-to-go from (slot i, ref j) to the end.
    let mut go = vec![vec![usize::MAX; m + 1]; n + 1];
    for j in 0..=m {
        go[n][j] = m - j;
    }
    for i in (0..n).rev() {
        for j in (0..=m).rev() {
            let mut best = go[i + 1][j];
            if j < m {
                best = best.min(go[i][j + 1] + 1);
                if slots[i].contains(reference[j].as_ref()) {
                    best = best.min(go[i + 1][j + 1]);
                } else if slots[i].words().next().is_some() {
                    best = best.min(go[i + 1][j + 1] + 1);
                }
            }
            go[i][j] = best;
        }
    }

    let mut path = Vec::with_capacity(n);
    let mut slot_reference = Vec::with_capacity(n);
    let mut deleted = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = go[i][j];
        let mv = if i == n {
            Move::Del
        } else {
            let slot = &slots[i];
            let matches = j < m && slot.contains(reference[j].as_ref());
            if matches && go[i + 1][j + 1] == here {
                Move::Match
            } else if j < m && !matches && slot.words().next().is_some() && go[i + 1][j + 1] + 1 == here {
                Move::Sub
            } else if j < m && go[i][j + 1] + 1 == here {
                Move::Del
            } else {
                Move::Skip
            }
        };
        match mv {
            Move::Match => {
                path.push(reference[j].as_ref().to_string());
                slot_reference.push(reference[j].as_ref().to_string());
                i += 1;
                j += 1;
            }
            Move::Sub => {
                let w = slots[i].words().next().expect("checked non-empty").to_string();
                path.push(w);
                slot_reference.push(reference[j].as_ref().to_string());
                i += 1;
                j += 1;
            }
            Move::Skip => {
                path.push(DELETION.to_string());
                slot_reference.push(DELETION.to_string());
                i += 1;
            }
            Move::Del => {
                deleted.push(reference[j].as_ref().to_string());
                j += 1;
            }
        }
    }
    CnAlignment {
        errors: go[0][0],
        path,
        slot_reference,
        deleted,
    }
}

/// Where the reference token falls in each slot's candidate ranking.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotStatistics {
    /// Rank (1-based) of the reference token, over slots that contain it.
    pub rank_histogram: BTreeMap<usize, usize>,
    /// Slots whose reference token is not among the candidates.
    pub missing: usize,
    pub singleton_count: usize,
    pub singleton_correct: usize,
    pub pair_count: usize,
    pub pair_top1_correct: usize,
    /// Two-candidate slots where either candidate is right.
    pub pair_top2_correct: usize,
    pub total_slots: usize,
}

impl SlotStatistics {
    pub fn ranked_slots(&self) -> usize {
        self.rank_histogram.values().sum()
    }

    pub fn merge(&mut self, other: &SlotStatistics) {
        for (r, c) in &other.rank_histogram {
            *self.rank_histogram.entry(*r).or_default() += c;
        }
        self.missing += other.missing;
        self.singleton_count += other.singleton_count;
        self.singleton_correct += other.singleton_correct;
        self.pair_count += other.pair_count;
        self.pair_top1_correct += other.pair_top1_correct;
        self.pair_top2_correct += other.pair_top2_correct;
        self.total_slots += other.total_slots;
    }
}

/// Aligns the reference to the network with `cn_accuracy` and ranks the
/// reference token of every slot. A slot with no reference word has `-` as
/// its reference token.
pub fn correct_rank_statistics<S: AsRef<str>>(cn: &ConfusionNetwork, reference: &[S]) -> SlotStatistics {
    let alignment = cn_accuracy(cn, reference);
    let mut stats = SlotStatistics {
        total_slots: cn.len(),
        ..Default::default()
    };
    for (slot, truth) in cn.slots().iter().zip(&alignment.slot_reference) {
        match slot.rank(truth) {
            Some(r) => *stats.rank_histogram.entry(r).or_default() += 1,
            None => stats.missing += 1,
        }
        let top_ok = slot.best_token() == truth;
        match slot.len() {
            1 => {
                stats.singleton_count += 1;
                stats.singleton_correct += usize::from(top_ok);
            }
            2 => {
                stats.pair_count += 1;
                stats.pair_top1_correct += usize::from(top_ok);
                stats.pair_top2_correct += usize::from(slot.contains(truth));
            }
            _ => {}
        }
    }
    stats
}

/// Pairs each word of `hyp` with the posterior of the slot it occupies.
pub fn confidence_annotate<S: AsRef<str>>(cn: &ConfusionNetwork, hyp: &[S]) -> Result<Vec<(String, f64)>> {
    let path = express_in_cn(cn, hyp).ok_or(Error::NotExpressible)?;
    Ok(path
        .into_iter()
        .zip(cn.slots())
        .filter(|(t, _)| t != DELETION)
        .map(|(t, s)| {
            let p = s.posterior(&t);
            (t, p)
        })
        .collect())
}
