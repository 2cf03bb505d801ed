//! Word lattices: a DAG of timed, scored word links between nodes.
//!
//! Nodes are kept in topological order (ties broken by node id) and links are
//! kept sorted by link id, so every traversal in this crate is deterministic.

mod format;
mod oracle;
mod paths;
mod posterior;

pub use format::{parse_lattice, write_lattice};
pub use oracle::{oracle_wer, OraclePath};
pub use posterior::{compute_link_posteriors, map_hypothesis, prune_links, score_links};
pub(crate) use posterior::best_path_indices;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

pub type NodeId = u32;
pub type LinkId = u32;

/// Reserved token for the empty word in confusion networks; never a lattice word.
pub const DELETION: &str = "-";

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Seconds from the start of the utterance.
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub inode: NodeId,
    pub fnode: NodeId,
    pub word: String,
    /// Natural-log acoustic likelihood.
    pub ac_logscore: f64,
    /// Natural-log language model probability.
    pub lm_logscore: f64,
    pub pron_variant: u32,
    /// Sum of posteriors of all complete paths through this link.
    pub posterior: f64,
    /// Posterior before the most recent pruning pass, kept for diagnostics.
    pub prior_posterior: Option<f64>,
    /// Combined score `lm + log P(Q|W) + ac / lambda`, set by [`score_links`].
    pub scaled_logscore: f64,
}

impl Link {
    pub fn new(
        id: LinkId,
        inode: NodeId,
        fnode: NodeId,
        word: impl Into<String>,
        ac_logscore: f64,
        lm_logscore: f64,
    ) -> Self {
        Link {
            id,
            inode,
            fnode,
            word: word.into(),
            ac_logscore,
            lm_logscore,
            pron_variant: 0,
            posterior: 0.0,
            prior_posterior: None,
            scaled_logscore: 0.0,
        }
    }

    pub fn with_variant(mut self, variant: u32) -> Self {
        self.pron_variant = variant;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ScoreState {
    Raw,
    Scored,
    Posteriors,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    utterance_id: String,
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// `(inode, fnode)` as indices into `nodes`, parallel to `links`.
    ends: Vec<(usize, usize)>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
    initial: usize,
    final_: usize,
    lm_scale: Option<f64>,
    pub(crate) state: ScoreState,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.utterance_id == other.utterance_id
            && self.nodes == other.nodes
            && self.links == other.links
            && self.lm_scale == other.lm_scale
    }
}

impl Lattice {
    /// Validates and assembles a lattice from nodes and links given in any order.
    pub fn new(
        utterance_id: impl Into<String>,
        nodes: Vec<Node>,
        mut links: Vec<Link>,
        lm_scale: Option<f64>,
    ) -> Result<Self> {
        let utterance_id = utterance_id.into();
        if nodes.is_empty() {
            return Err(Error::CountMismatch {
                kind: "node",
                declared: 1,
                found: 0,
            });
        }

        let mut index: HashMap<NodeId, usize> = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "node",
                    id: n.id,
                });
            }
            if !n.time.is_finite() || n.time < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "node {} has invalid time {}",
                    n.id, n.time
                )));
            }
        }

        links.sort_by_key(|l| l.id);
        for pair in links.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateId {
                    kind: "link",
                    id: pair[0].id,
                });
            }
        }

        let mut raw_ends = Vec::with_capacity(links.len());
        for l in &links {
            if l.word.is_empty() || l.word == DELETION || l.word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidWord(l.word.clone()));
            }
            let i = *index.get(&l.inode).ok_or(Error::DanglingNode {
                link: l.id,
                node: l.inode,
            })?;
            let f = *index.get(&l.fnode).ok_or(Error::DanglingNode {
                link: l.id,
                node: l.fnode,
            })?;
            raw_ends.push((i, f));
        }

        // Kahn's algorithm, smallest node id first among ready nodes.
        let n = nodes.len();
        let mut indegree = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, f) in &raw_ends {
            indegree[f] += 1;
            succ[i].push(f);
        }
        let sources: Vec<NodeId> = (0..n).filter(|&v| indegree[v] == 0).map(|v| nodes[v].id).collect();
        let mut ready: BinaryHeap<Reverse<(NodeId, usize)>> = (0..n)
            .filter(|&v| indegree[v] == 0)
            .map(|v| Reverse((nodes[v].id, v)))
            .collect();
        let mut order = Vec::with_capacity(n);
        let mut remaining = indegree.clone();
        while let Some(Reverse((_, v))) = ready.pop() {
            order.push(v);
            for &w in &succ[v] {
                remaining[w] -= 1;
                if remaining[w] == 0 {
                    ready.push(Reverse((nodes[w].id, w)));
                }
            }
        }
        if order.len() < n {
            return Err(Error::Cycle(find_cycle_node(&nodes, &raw_ends, &remaining)));
        }

        if sources.len() != 1 {
            return Err(Error::Endpoints {
                kind: "initial",
                found: sources,
            });
        }
        let sinks: Vec<NodeId> = (0..n).filter(|&v| succ[v].is_empty()).map(|v| nodes[v].id).collect();
        if sinks.len() != 1 {
            return Err(Error::Endpoints {
                kind: "final",
                found: sinks,
            });
        }

        let mut position = vec![0usize; n];
        for (pos, &v) in order.iter().enumerate() {
            position[v] = pos;
        }
        let sorted_nodes: Vec<Node> = order.iter().map(|&v| nodes[v].clone()).collect();
        let ends: Vec<(usize, usize)> = raw_ends
            .iter()
            .map(|&(i, f)| (position[i], position[f]))
            .collect();

        for (l, &(i, f)) in links.iter().zip(&ends) {
            let (itime, ftime) = (sorted_nodes[i].time, sorted_nodes[f].time);
            if itime > ftime {
                return Err(Error::TimeOrder {
                    link: l.id,
                    itime,
                    ftime,
                });
            }
        }

        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        for (k, &(i, f)) in ends.iter().enumerate() {
            out_links[i].push(k);
            in_links[f].push(k);
        }

        Ok(Lattice {
            utterance_id,
            nodes: sorted_nodes,
            links,
            ends,
            out_links,
            in_links,
            initial: 0,
            final_: n - 1,
            lm_scale,
            state: ScoreState::Raw,
        })
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    /// Nodes in topological order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Links sorted by id.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn lm_scale(&self) -> Option<f64> {
        self.lm_scale
    }

    pub fn initial_node(&self) -> NodeId {
        self.nodes[self.initial].id
    }

    pub fn final_node(&self) -> NodeId {
        self.nodes[self.final_].id
    }

    pub fn has_posteriors(&self) -> bool {
        self.state == ScoreState::Posteriors
    }

    pub fn link_index(&self, id: LinkId) -> Result<usize> {
        self.links
            .binary_search_by_key(&id, |l| l.id)
            .map_err(|_| Error::UnknownLink(id))
    }

    pub fn link(&self, id: LinkId) -> Result<&Link> {
        Ok(&self.links[self.link_index(id)?])
    }

    /// Start and end time of the link at `idx`, inherited from its nodes.
    pub fn link_times(&self, idx: usize) -> (f64, f64) {
        let (i, f) = self.ends[idx];
        (self.nodes[i].time, self.nodes[f].time)
    }

    pub(crate) fn ends(&self) -> &[(usize, usize)] {
        &self.ends
    }

    pub(crate) fn out_links(&self, node: usize) -> &[usize] {
        &self.out_links[node]
    }

    pub(crate) fn in_links(&self, node: usize) -> &[usize] {
        &self.in_links[node]
    }

    pub(crate) fn initial_index(&self) -> usize {
        self.initial
    }

    pub(crate) fn final_index(&self) -> usize {
        self.final_
    }

    pub(crate) fn links_mut(&mut self) -> &mut [Link] {
        &mut self.links
    }

    /// Distinct words appearing on links, sorted.
    pub fn vocabulary(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.links.iter().map(|l| l.word.as_str()).collect();
        words.sort_unstable();
        words.dedup();
        words
    }

    /// True iff `e` comes before `f`: they are equal, or a path leads from
    /// the end node of `e` to the start node of `f`.
    pub fn link_precedes(&self, e: LinkId, f: LinkId) -> Result<bool> {
        let ei = self.link_index(e)?;
        let fi = self.link_index(f)?;
        if ei == fi {
            return Ok(true);
        }
        let from = self.ends[ei].1;
        let to = self.ends[fi].0;
        if from > to {
            return Ok(false);
        }
        let mut seen = FixedBitSet::with_capacity(self.nodes.len());
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return Ok(true);
            }
            if seen.put(v) {
                continue;
            }
            for &k in &self.out_links[v] {
                let w = self.ends[k].1;
                if w <= to {
                    stack.push(w);
                }
            }
        }
        Ok(false)
    }

    pub fn reachability(&self) -> Reachability {
        Reachability::new(self)
    }

    /// Keeps the flagged links, then drops every node and link that is not on
    /// a complete initial-to-final path. Fails if no path survives.
    pub fn retain_links(&self, keep: &[bool]) -> Result<Lattice> {
        assert_eq!(keep.len(), self.links.len());
        let n = self.nodes.len();
        let mut fwd = vec![false; n];
        fwd[self.initial] = true;
        for v in 0..n {
            if !fwd[v] {
                continue;
            }
            for &k in &self.out_links[v] {
                if keep[k] {
                    fwd[self.ends[k].1] = true;
                }
            }
        }
        let mut bwd = vec![false; n];
        bwd[self.final_] = true;
        for v in (0..n).rev() {
            if !bwd[v] {
                continue;
            }
            for &k in &self.in_links[v] {
                if keep[k] {
                    bwd[self.ends[k].0] = true;
                }
            }
        }
        if !fwd[self.final_] {
            return Err(Error::EmptyLattice);
        }
        let links: Vec<Link> = self
            .links
            .iter()
            .zip(&self.ends)
            .zip(keep)
            .filter(|((_, &(i, f)), &k)| k && fwd[i] && bwd[f])
            .map(|((l, _), _)| l.clone())
            .collect();
        let mut used: HashSet<usize> = HashSet::new();
        used.insert(self.initial);
        used.insert(self.final_);
        for (k, &(i, f)) in self.ends.iter().enumerate() {
            if keep[k] && fwd[i] && bwd[f] {
                used.insert(i);
                used.insert(f);
            }
        }
        let nodes: Vec<Node> = (0..n)
            .filter(|v| used.contains(v))
            .map(|v| self.nodes[v].clone())
            .collect();
        let mut out = Lattice::new(self.utterance_id.clone(), nodes, links, self.lm_scale)?;
        out.state = self.state;
        Ok(out)
    }
}

fn find_cycle_node(nodes: &[Node], ends: &[(usize, usize)], remaining: &[usize]) -> NodeId {
    // Every unprocessed node has an unprocessed predecessor; walking
    // predecessors must revisit a node, which then lies on a cycle.
    let mut pred = vec![None; nodes.len()];
    for &(i, f) in ends {
        if remaining[i] > 0 && remaining[f] > 0 && pred[f].is_none() {
            pred[f] = Some(i);
        }
    }
    let start = (0..nodes.len())
        .filter(|&v| remaining[v] > 0)
        .min_by_key(|&v| nodes[v].id)
        .expect("cycle implies an unprocessed node");
    let mut seen = vec![false; nodes.len()];
    let mut v = start;
    while !seen[v] {
        seen[v] = true;
        v = pred[v].expect("unprocessed node has an unprocessed predecessor");
    }
    nodes[v].id
}

/// Precomputed node-to-node reachability (reflexive) for a lattice.
#[derive(Clone, Debug)]
pub struct Reachability {
    reach: Vec<FixedBitSet>,
}

impl Reachability {
    pub fn new(lat: &Lattice) -> Self {
        let n = lat.nodes.len();
        let mut reach = vec![FixedBitSet::with_capacity(n); n];
        for v in (0..n).rev() {
            let mut row = FixedBitSet::with_capacity(n);
            row.insert(v);
            for &k in &lat.out_links[v] {
                row.union_with(&reach[lat.ends[k].1]);
            }
            reach[v] = row;
        }
        Reachability { reach }
    }

    pub fn node_reaches(&self, from: usize, to: usize) -> bool {
        self.reach[from].contains(to)
    }

    /// Link order by index into `lat.links()`.
    pub fn link_precedes(&self, lat: &Lattice, e: usize, f: usize) -> bool {
        e == f || self.reach[lat.ends[e].1].contains(lat.ends[f].0)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn chain(words: &[&str]) -> Lattice {
        let nodes = (0..=words.len())
            .map(|i| Node {
                id: i as u32,
                time: i as f64,
            })
            .collect();
        let links = words
            .iter()
            .enumerate()
            .map(|(i, w)| Link::new(i as u32, i as u32, i as u32 + 1, *w, 0.0, 0.0))
            .collect();
        Lattice::new("chain", nodes, links, None).unwrap()
    }

    pub fn diamond(a: (&str, f64), b: (&str, f64)) -> Lattice {
        let nodes = vec![Node { id: 0, time: 0.0 }, Node { id: 1, time: 1.0 }];
        let links = vec![
            Link::new(0, 0, 1, a.0, a.1.ln(), 0.0),
            Link::new(1, 0, 1, b.0, b.1.ln(), 0.0),
        ];
        Lattice::new("diamond", nodes, links, None).unwrap()
    }

    #[test]
    fn chain_precedence() {
        let lat = chain(&["A", "B", "C"]);
        assert!(lat.link_precedes(0, 0).unwrap());
        assert!(lat.link_precedes(0, 1).unwrap());
        assert!(lat.link_precedes(0, 2).unwrap());
        assert!(!lat.link_precedes(1, 0).unwrap());
        assert_eq!(lat.link_precedes(0, 9), Err(Error::UnknownLink(9)));
    }

    #[test]
    fn diamond_links_are_unordered() {
        let lat = diamond(("A", 0.5), ("B", 0.5));
        assert!(!lat.link_precedes(0, 1).unwrap());
        assert!(!lat.link_precedes(1, 0).unwrap());
        let reach = lat.reachability();
        assert!(!reach.link_precedes(&lat, 0, 1));
        assert!(reach.link_precedes(&lat, 1, 1));
    }

    #[test]
    fn nodes_sorted_topologically() {
        let nodes = vec![
            Node { id: 5, time: 2.0 },
            Node { id: 9, time: 0.0 },
            Node { id: 1, time: 1.0 },
        ];
        let links = vec![
            Link::new(3, 1, 5, "B", 0.0, 0.0),
            Link::new(2, 9, 1, "A", 0.0, 0.0),
        ];
        let lat = Lattice::new("u", nodes, links, None).unwrap();
        let ids: Vec<_> = lat.nodes().iter().map(|n| n.id).collect();
        assert_eq!(ids, vec![9, 1, 5]);
        assert_eq!(lat.links()[0].id, 2);
        assert_eq!(lat.initial_node(), 9);
        assert_eq!(lat.final_node(), 5);
    }

    #[test]
    fn rejects_cycles_and_multiple_endpoints() {
        let nodes = (0..4).map(|id| Node { id, time: 0.0 }).collect::<Vec<_>>();
        let links = vec![
            Link::new(0, 0, 1, "A", 0.0, 0.0),
            Link::new(1, 1, 2, "B", 0.0, 0.0),
            Link::new(2, 2, 1, "C", 0.0, 0.0),
            Link::new(3, 2, 3, "D", 0.0, 0.0),
        ];
        let err = Lattice::new("u", nodes.clone(), links, None).unwrap_err();
        assert!(matches!(err, Error::Cycle(1) | Error::Cycle(2)), "{err}");

        let links = vec![Link::new(0, 0, 1, "A", 0.0, 0.0), Link::new(1, 2, 3, "B", 0.0, 0.0)];
        let err = Lattice::new("u", nodes, links, None).unwrap_err();
        assert!(matches!(err, Error::Endpoints { kind: "initial", .. }));
    }

    #[test]
    fn retain_trims_dead_ends() {
        // 0 -A-> 1 -B-> 2, plus a detour 0 -C-> 3 -D-> 2
        let nodes = (0..4).map(|id| Node { id, time: id as f64 }).collect();
        let links = vec![
            Link::new(0, 0, 1, "A", 0.0, 0.0),
            Link::new(1, 1, 2, "B", 0.0, 0.0),
            Link::new(2, 0, 3, "C", 0.0, 0.0),
            Link::new(3, 3, 2, "D", 0.0, 0.0),
        ];
        let nodes: Vec<Node> = nodes;
        let nodes = nodes
            .into_iter()
            .map(|mut n| {
                if n.id == 2 {
                    n.time = 5.0
                }
                n
            })
            .collect();
        let lat = Lattice::new("u", nodes, links, None).unwrap();
        let out = lat.retain_links(&[true, true, false, true]).unwrap();
        let ids: Vec<_> = out.links().iter().map(|l| l.id).collect();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(out.nodes().len(), 3);
        assert_eq!(lat.retain_links(&[false, true, false, true]), Err(Error::EmptyLattice));
    }
}
