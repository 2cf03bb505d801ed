use super::{Lattice, LinkId};

/// The lattice path closest to a reference word string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OraclePath {
    pub errors: usize,
    pub words: Vec<String>,
    pub links: Vec<LinkId>,
}

#[derive(Clone, Copy)]
enum Step {
    Start,
    Delete,
    Link { k: usize, consumed: bool },
}

/// Minimum word errors of any lattice path against `reference`, by dynamic
/// programming over (node, reference position).
pub fn oracle_wer<S: AsRef<str>>(lat: &Lattice, reference: &[S]) -> OraclePath {
    let n = lat.nodes().len();
    let m = reference.len();
    let ends = lat.ends();
    let links = lat.links();
    // (cost, move rank) per cell; rank orders match < sub < del < ins.
    let mut cost = vec![vec![(usize::MAX, u8::MAX); m + 1]; n];
    let mut back = vec![vec![Step::Start; m + 1]; n];
    cost[lat.initial_index()][0] = (0, 0);

    for v in 0..n {
        for j in 1..=m {
            if cost[v][j - 1].0 == usize::MAX {
                continue;
            }
            let cand = (cost[v][j - 1].0 + 1, 2);
            if cand < cost[v][j] {
                cost[v][j] = cand;
                back[v][j] = Step::Delete;
            }
        }
        for &k in lat.out_links(v) {
            let f = ends[k].1;
            let word = links[k].word.as_str();
            for j in 0..=m {
                let here = cost[v][j].0;
                if here == usize::MAX {
                    continue;
                }
                if j < m {
                    let hit = reference[j].as_ref() == word;
                    let cand = (here + usize::from(!hit), if hit { 0 } else { 1 });
                    if cand < cost[f][j + 1] {
                        cost[f][j + 1] = cand;
                        back[f][j + 1] = Step::Link { k, consumed: true };
                    }
                }
                let cand = (here + 1, 3);
                if cand < cost[f][j] {
                    cost[f][j] = cand;
                    back[f][j] = Step::Link { k, consumed: false };
                }
            }
        }
    }

    let mut path = Vec::new();
    let (mut v, mut j) = (lat.final_index(), m);
    loop {
        match back[v][j] {
            Step::Start => break,
            Step::Delete => j -= 1,
            Step::Link { k, consumed } => {
                path.push(k);
                v = ends[k].0;
                if consumed {
                    j -= 1;
                }
            }
        }
    }
    path.reverse();
    OraclePath {
        errors: cost[lat.final_index()][m].0,
        words: path.iter().map(|&k| links[k].word.clone()).collect(),
        links: path.iter().map(|&k| links[k].id).collect(),
    }
}
