use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{Lattice, LinkId};

impl Lattice {
    /// Exact number of distinct initial-to-final link sequences.
    pub fn count_paths(&self) -> BigUint {
        let n = self.nodes().len();
        let mut count = vec![BigUint::zero(); n];
        count[self.initial_index()] = BigUint::one();
        for v in 0..n {
            if count[v].is_zero() {
                continue;
            }
            let here = count[v].clone();
            for &k in self.out_links(v) {
                count[self.ends()[k].1] += &here;
            }
        }
        count[self.final_index()].clone()
    }

    /// All complete paths as link-id sequences, in lexicographic link order,
    /// or `None` if there are more than `limit`.
    pub fn enumerate_paths(&self, limit: usize) -> Option<Vec<Vec<LinkId>>> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(self.initial_index(), Vec::new())];
        while let Some((v, path)) = stack.pop() {
            if v == self.final_index() {
                if out.len() == limit {
                    return None;
                }
                out.push(path.iter().map(|&k| self.links()[k].id).collect());
                continue;
            }
            for &k in self.out_links(v).iter().rev() {
                let mut next = path.clone();
                next.push(k);
                stack.push((self.ends()[k].1, next));
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::tests::{chain, diamond};
    use crate::lattice::{Link, Node};

    fn binary_series(k: u32) -> Lattice {
        let nodes = (0..=k).map(|id| Node { id, time: id as f64 }).collect();
        let links = (0..k)
            .flat_map(|i| {
                [
                    Link::new(2 * i, i, i + 1, "A", 0.0, 0.0),
                    Link::new(2 * i + 1, i, i + 1, "B", 0.0, 0.0),
                ]
            })
            .collect();
        Lattice::new("s", nodes, links, None).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(chain(&["A", "B"]).count_paths(), BigUint::one());
        assert_eq!(diamond(("A", 0.5), ("B", 0.5)).count_paths(), BigUint::from(2u32));
        assert_eq!(binary_series(300).count_paths(), BigUint::one() << 300usize);
    }

    #[test]
    fn enumeration_respects_limit() {
        let lat = binary_series(3);
        let paths = lat.enumerate_paths(8).unwrap();
        assert_eq!(paths.len(), 8);
        assert_eq!(paths[0], vec![0, 2, 4]);
        assert_eq!(paths[7], vec![1, 3, 5]);
        assert!(lat.enumerate_paths(7).is_none());
    }
}
