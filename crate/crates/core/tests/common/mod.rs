//! Brute-force reference implementations used as test oracles. Nothing here
//! calls into the library's algorithms beyond reading lattice fields.
#![allow(dead_code)]

use std::collections::HashMap;

use lattice_consensus::{ConfusionNetwork, Lattice, LinkId, PronLexicon};

/// Every initial-to-final path as a list of link ids, by depth-first search
/// over node ids. `None` when there are more than `limit`.
pub fn all_paths(lat: &Lattice, limit: usize) -> Option<Vec<Vec<LinkId>>> {
    let mut out_of: HashMap<u32, Vec<(u32, LinkId)>> = HashMap::new();
    for l in lat.links() {
        out_of.entry(l.inode).or_default().push((l.fnode, l.id));
    }
    let mut paths = Vec::new();
    let mut stack = vec![(lat.initial_node(), Vec::new())];
    while let Some((node, path)) = stack.pop() {
        if node == lat.final_node() {
            paths.push(path);
            if paths.len() > limit {
                return None;
            }
            continue;
        }
        for &(next, id) in out_of.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
            let mut p = path.clone();
            p.push(id);
            stack.push((next, p));
        }
    }
    paths.sort();
    Some(paths)
}

pub fn log_sum(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Combined path score: language model plus scaled acoustics plus a uniform
/// pronunciation prior.
pub fn path_score(lat: &Lattice, path: &[LinkId], lambda: f64, lex: &PronLexicon) -> f64 {
    path.iter()
        .map(|&id| {
            let l = lat.links().iter().find(|l| l.id == id).unwrap();
            let variants = lex.variants(&l.word).unwrap().len() as f64;
            l.lm_logscore + l.ac_logscore / lambda - variants.ln()
        })
        .sum()
}

/// Link posteriors by summing normalized path probabilities.
pub fn brute_posteriors(lat: &Lattice, lambda: f64, lex: &PronLexicon) -> HashMap<LinkId, f64> {
    let paths = all_paths(lat, usize::MAX).unwrap();
    let scores: Vec<f64> = paths.iter().map(|p| path_score(lat, p, lambda, lex)).collect();
    let total = log_sum(&scores);
    let mut post: HashMap<LinkId, f64> = lat.links().iter().map(|l| (l.id, 0.0)).collect();
    for (p, s) in paths.iter().zip(&scores) {
        let prob = (s - total).exp();
        for id in p {
            *post.get_mut(id).unwrap() += prob;
        }
    }
    post
}

pub fn levenshtein<A: PartialEq<B>, B>(a: &[A], b: &[B]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Every choice of one listed token per slot, with its probability under
/// independent slots.
pub fn cn_paths(cn: &ConfusionNetwork) -> Vec<(Vec<String>, f64)> {
    let mut paths = vec![(Vec::new(), 1.0)];
    for slot in cn.slots() {
        let mut next = Vec::new();
        for (prefix, p) in &paths {
            for (tok, q) in slot.entries() {
                let mut v: Vec<String> = prefix.clone();
                v.push(tok.clone());
                next.push((v, p * q));
            }
        }
        paths = next;
    }
    paths
}

pub fn strip_deletions(path: &[String]) -> Vec<String> {
    path.iter().filter(|t| t.as_str() != "-").cloned().collect()
}

/// Reflexive-transitive closure of a boolean relation.
pub fn closure(mut r: Vec<Vec<bool>>) -> Vec<Vec<bool>> {
    let n = r.len();
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Link precedence `e <= f`: some path runs through e and later through f,
/// or e == f. Indexed by position in `lat.links()`.
pub fn link_order(lat: &Lattice) -> Vec<Vec<bool>> {
    let links = lat.links();
    let n = links.len();
    let mut direct = vec![vec![false; n]; n];
    for (i, e) in links.iter().enumerate() {
        for (j, f) in links.iter().enumerate() {
            if e.fnode == f.inode {
                direct[i][j] = true;
            }
        }
    }
    closure(direct)
}
