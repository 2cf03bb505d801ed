//! Multiple alignment of lattice links into a totally ordered sequence of
//! equivalence classes.
//!
//! Classes start as groups of links sharing word, start and end time. Two
//! greedy stages then merge unordered classes (same-word first, then any
//! pair) while maintaining a partial order on classes that stays consistent
//! with link order in the lattice. The result is a confusion network.

mod cluster;
mod similarity;

pub use cluster::{
    align_lattice, build_confusion_network, inter_word_cluster, intra_word_cluster, AlignOptions, MergeRecord,
};
pub use similarity::{
    estimate_times_from_phone_counts, overlap, phonetic_similarity, sim_inter, sim_intra, PhoneticCache,
};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkId};
use crate::lexicon::PronLexicon;

/// Clustering metric ablations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricVariant {
    /// Posterior-weighted time overlap, then posterior-weighted phonetic similarity.
    #[default]
    Default,
    /// Intra-word similarity ignores time overlap.
    NoTime,
    /// Times are replaced by longest-path phone counts.
    #[serde(rename = "phone-time", alias = "phone-count-time")]
    PhoneTime,
    /// Inter-word similarity ignores phonetics.
    NoPhonetic,
    /// Neither stage weights by posteriors.
    NoPosterior,
}

impl MetricVariant {
    pub const ALL: [MetricVariant; 5] = [
        MetricVariant::Default,
        MetricVariant::NoTime,
        MetricVariant::PhoneTime,
        MetricVariant::NoPhonetic,
        MetricVariant::NoPosterior,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricVariant::Default => "default",
            MetricVariant::NoTime => "no-time",
            MetricVariant::PhoneTime => "phone-time",
            MetricVariant::NoPhonetic => "no-phonetic",
            MetricVariant::NoPosterior => "no-posterior",
        }
    }
}

impl fmt::Display for MetricVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "phone-count-time" {
            return Ok(MetricVariant::PhoneTime);
        }
        MetricVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric variant {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Initial,
    IntraDone,
    TotalOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassMember {
    pub link: LinkId,
    pub word: String,
    /// `(start, end)` under the active time source.
    pub span: (f64, f64),
    pub posterior: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceClass {
    pub class_id: usize,
    pub members: Vec<ClassMember>,
    /// `p_F(w)`: summed member posterior per word.
    pub words: BTreeMap<String, f64>,
}

impl EquivalenceClass {
    pub(crate) fn from_members(class_id: usize, mut members: Vec<ClassMember>) -> Self {
        members.sort_by_key(|m| m.link);
        let mut words = BTreeMap::new();
        for m in &members {
            *words.entry(m.word.clone()).or_insert(0.0) += m.posterior;
        }
        EquivalenceClass {
            class_id,
            members,
            words,
        }
    }

    /// Total posterior `p(F)` of the members.
    pub fn mass(&self) -> f64 {
        self.members.iter().map(|m| m.posterior).sum()
    }

    /// Earliest start and latest end among the members.
    pub fn span(&self) -> (f64, f64) {
        let start = self.members.iter().map(|m| m.span.0).fold(f64::INFINITY, f64::min);
        let end = self.members.iter().map(|m| m.span.1).fold(f64::NEG_INFINITY, f64::max);
        (start, end)
    }

    /// Lexicographically smallest word.
    pub fn label(&self) -> &str {
        self.words.keys().next().expect("classes are non-empty")
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.members.iter().map(|m| m.link)
    }
}

/// A partition of the surviving links into classes, plus a partial order on
/// the classes stored as a dense reachability matrix.
#[derive(Clone, Debug)]
pub struct AlignmentState {
    classes: Vec<Option<EquivalenceClass>>,
    /// `order[u]` contains `v` iff class `u` precedes (or equals) class `v`.
    order: Vec<FixedBitSet>,
    /// Link order over lattice link indices; `link_order[e]` contains `f` iff `e <= f`.
    link_order: Vec<FixedBitSet>,
    /// Class of each lattice link index.
    link_class: Vec<usize>,
    link_ids: Vec<LinkId>,
    stage: Stage,
    variant: MetricVariant,
    utterance_id: String,
}

impl AlignmentState {
    /// Initial partition by (word, start time, end time) and the transitive
    /// closure of the induced class relation. Zero-duration links are further
    /// split by their end nodes so that the relation stays antisymmetric.
    pub fn new(lat: &Lattice, variant: MetricVariant, lex: &PronLexicon) -> Result<Self> {
        if !lat.has_posteriors() {
            return Err(Error::NoPosteriors);
        }
        let node_times: Vec<f64> = match variant {
            MetricVariant::PhoneTime => estimate_times_from_phone_counts(lat, lex)?,
            _ => lat.nodes().iter().map(|n| n.time).collect(),
        };
        let links = lat.links();
        let ends = lat.ends();

        type Key = (String, u64, u64, Option<(usize, usize)>);
        let mut key_class: HashMap<Key, usize> = HashMap::new();
        let mut groups: Vec<Vec<ClassMember>> = Vec::new();
        let mut link_class = Vec::with_capacity(links.len());
        for (k, link) in links.iter().enumerate() {
            let (i, f) = ends[k];
            let span = (node_times[i], node_times[f]);
            let pinned = if span.0 == span.1 { Some((i, f)) } else { None };
            let key = (link.word.clone(), span.0.to_bits(), span.1.to_bits(), pinned);
            let c = *key_class.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[c].push(ClassMember {
                link: link.id,
                word: link.word.clone(),
                span,
                posterior: link.posterior,
            });
            link_class.push(c);
        }
        let classes: Vec<Option<EquivalenceClass>> = groups
            .into_iter()
            .enumerate()
            .map(|(id, m)| Some(EquivalenceClass::from_members(id, m)))
            .collect();

        let reach = lat.reachability();
        let t = links.len();
        let mut link_order = vec![FixedBitSet::with_capacity(t); t];
        for (e, row) in link_order.iter_mut().enumerate() {
            for f in 0..t {
                if reach.link_precedes(lat, e, f) {
                    row.insert(f);
                }
            }
        }

        let k = classes.len();
        let mut order = vec![FixedBitSet::with_capacity(k); k];
        for (e, row) in link_order.iter().enumerate() {
            for f in row.ones() {
                order[link_class[e]].insert(link_class[f]);
            }
        }
        transitive_closure(&mut order);

        let state = AlignmentState {
            classes,
            order,
            link_order,
            link_class,
            link_ids: links.iter().map(|l| l.id).collect(),
            stage: Stage::Initial,
            variant,
            utterance_id: lat.utterance_id().to_string(),
        };
        for u in 0..k {
            for v in state.order[u].ones() {
                if u != v && state.order[v].contains(u) {
                    return Err(Error::Invariant(format!(
                        "initial classes {u} and {v} precede each other"
                    )));
                }
            }
        }
        Ok(state)
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn variant(&self) -> MetricVariant {
        self.variant
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub(crate) fn set_stage(&mut self, stage: Stage) {
        self.stage = stage;
    }

    /// Live classes in class-id order.
    pub fn classes(&self) -> impl Iterator<Item = &EquivalenceClass> {
        self.classes.iter().flatten()
    }

    pub fn class(&self, id: usize) -> Option<&EquivalenceClass> {
        self.classes.get(id).and_then(Option::as_ref)
    }

    pub fn class_count(&self) -> usize {
        self.classes().count()
    }

    pub(crate) fn capacity(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of_link(&self, link: LinkId) -> Option<usize> {
        let idx = self.link_ids.binary_search(&link).ok()?;
        Some(self.link_class[idx])
    }

    /// `u` precedes or equals `v`.
    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.order[u].contains(v)
    }

    pub fn comparable(&self, u: usize, v: usize) -> bool {
        self.precedes(u, v) || self.precedes(v, u)
    }

    /// Number of pairs of live classes that are not ordered.
    pub fn unordered_pairs(&self) -> usize {
        let live: Vec<usize> = self.classes().map(|c| c.class_id).collect();
        let mut count = 0;
        for (a, &u) in live.iter().enumerate() {
            for &v in &live[a + 1..] {
                if !self.comparable(u, v) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn is_total(&self) -> bool {
        self.unordered_pairs() == 0
    }

    /// Replaces classes `l1` and `l2` by their union. The union takes the
    /// smaller id. Its predecessors are those of either class, its successors
    /// likewise, and every predecessor of one class now precedes every
    /// successor of the other.
    pub fn merge_classes(&mut self, l1: usize, l2: usize) -> Result<usize> {
        for c in [l1, l2] {
            if self.class(c).is_none() {
                return Err(Error::InvalidParameter(format!("class {c} does not exist")));
            }
        }
        if l1 == l2 || self.comparable(l1, l2) {
            return Err(Error::OrderedMerge(l1, l2));
        }
        let (keep, gone) = (l1.min(l2), l1.max(l2));
        let k = self.classes.len();
        let mut pred1 = FixedBitSet::with_capacity(k);
        let mut pred2 = FixedBitSet::with_capacity(k);
        for u in 0..k {
            if self.order[u].contains(l1) {
                pred1.insert(u);
            }
            if self.order[u].contains(l2) {
                pred2.insert(u);
            }
        }
        let succ1 = self.order[l1].clone();
        let succ2 = self.order[l2].clone();

        for u in pred1.ones() {
            self.order[u].union_with(&succ2);
        }
        for u in pred2.ones() {
            self.order[u].union_with(&succ1);
        }
        let mut preds = pred1;
        preds.union_with(&pred2);
        for u in preds.ones() {
            self.order[u].insert(keep);
        }
        let mut succ = succ1;
        succ.union_with(&succ2);
        succ.insert(keep);
        self.order[keep] = succ;

        self.order[gone].clear();
        for row in &mut self.order {
            row.set(gone, false);
        }

        let b = self.classes[gone].take().expect("checked above");
        let a = self.classes[keep].take().expect("checked above");
        let mut members = a.members;
        members.extend(b.members);
        self.classes[keep] = Some(EquivalenceClass::from_members(keep, members));
        for c in &mut self.link_class {
            if *c == gone {
                *c = keep;
            }
        }

        debug_assert!(
            (0..k).all(|u| u == keep || !(self.order[u].contains(keep) && self.order[keep].contains(u))),
            "merge produced a cycle through class {keep}"
        );
        Ok(keep)
    }

    /// Checks that the class order is a partial order consistent with link order.
    pub fn check_invariants(&self) -> Result<()> {
        let live: Vec<usize> = self.classes().map(|c| c.class_id).collect();
        for &u in &live {
            if !self.precedes(u, u) {
                return Err(Error::Invariant(format!("class {u} is not reflexive")));
            }
            for v in self.order[u].ones() {
                if self.class(v).is_none() {
                    return Err(Error::Invariant(format!("class {u} precedes dead class {v}")));
                }
                if u != v && self.precedes(v, u) {
                    return Err(Error::Invariant(format!("classes {u} and {v} are mutually ordered")));
                }
                if !self.order[v].is_subset(&self.order[u]) {
                    return Err(Error::Invariant(format!("order is not transitive through class {v}")));
                }
            }
        }
        for (e, row) in self.link_order.iter().enumerate() {
            for f in row.ones() {
                let (ce, cf) = (self.link_class[e], self.link_class[f]);
                if !self.precedes(ce, cf) {
                    return Err(Error::Invariant(format!(
                        "link {} precedes link {} but class {ce} does not precede class {cf}",
                        self.link_ids[e], self.link_ids[f]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reflexive-transitive closure of the class relation induced by link
    /// order, computed from scratch.
    pub fn induced_order_closure(&self) -> Vec<FixedBitSet> {
        let k = self.classes.len();
        let mut order = vec![FixedBitSet::with_capacity(k); k];
        for c in self.classes() {
            order[c.class_id].insert(c.class_id);
        }
        for (e, row) in self.link_order.iter().enumerate() {
            for f in row.ones() {
                order[self.link_class[e]].insert(self.link_class[f]);
            }
        }
        transitive_closure(&mut order);
        order
    }

    /// The current order matrix (rows for dead classes are empty).
    pub fn order_matrix(&self) -> &[FixedBitSet] {
        &self.order
    }

    /// True iff links `e` and `f` (by id) are ordered in the lattice.
    pub fn links_ordered(&self, e: LinkId, f: LinkId) -> Option<bool> {
        let a = self.link_ids.binary_search(&e).ok()?;
        let b = self.link_ids.binary_search(&f).ok()?;
        Some(self.link_order[a].contains(b))
    }
}

/// Warshall's algorithm on bit rows.
pub(crate) fn transitive_closure(order: &mut [FixedBitSet]) {
    let k = order.len();
    for mid in 0..k {
        let through = order[mid].clone();
        for row in order.iter_mut() {
            if row.contains(mid) {
                row.union_with(&through);
            }
        }
    }
}
