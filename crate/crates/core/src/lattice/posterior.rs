//! Score scaling, forward-backward link posteriors, posterior pruning and
//! Viterbi (MAP) decoding.

use super::{Lattice, LinkId, ScoreState};
use crate::error::{Error, Result};
use crate::lexicon::PronLexicon;
use crate::logmath::log_add;

/// Sets each link's combined score `lm + ln P(Q|W) + ac / lambda`.
pub fn score_links(lat: &Lattice, lambda: f64, lex: &PronLexicon) -> Result<Lattice> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidLambda(lambda));
    }
    let mut out = lat.clone();
    for link in out.links_mut() {
        let pron = lex.log_variant_prob(&link.word)?;
        link.scaled_logscore = link.lm_logscore + pron + link.ac_logscore / lambda;
    }
    out.state = ScoreState::Scored;
    Ok(out)
}

/// Link posteriors by forward-backward over the scaled scores.
pub fn compute_link_posteriors(lat: &Lattice, lambda: f64, lex: &PronLexicon) -> Result<Lattice> {
    if lat.links().is_empty() {
        return Err(Error::EmptyLattice);
    }
    let mut out = score_links(lat, lambda, lex)?;
    forward_backward(&mut out);
    Ok(out)
}

/// Forward and backward log masses per node, for a scored lattice.
pub(crate) fn node_masses(lat: &Lattice) -> (Vec<f64>, Vec<f64>) {
    let n = lat.nodes().len();
    let ends = lat.ends();
    let links = lat.links();
    let mut alpha = vec![f64::NEG_INFINITY; n];
    alpha[lat.initial_index()] = 0.0;
    for v in 0..n {
        if alpha[v] == f64::NEG_INFINITY {
            continue;
        }
        for &k in lat.out_links(v) {
            let f = ends[k].1;
            alpha[f] = log_add(alpha[f], alpha[v] + links[k].scaled_logscore);
        }
    }
    let mut beta = vec![f64::NEG_INFINITY; n];
    beta[lat.final_index()] = 0.0;
    for v in (0..n).rev() {
        if beta[v] == f64::NEG_INFINITY {
            continue;
        }
        for &k in lat.in_links(v) {
            let i = ends[k].0;
            beta[i] = log_add(beta[i], beta[v] + links[k].scaled_logscore);
        }
    }
    (alpha, beta)
}

fn forward_backward(lat: &mut Lattice) {
    let (alpha, beta) = node_masses(lat);
    let total = alpha[lat.final_index()];
    let ends = lat.ends().to_vec();
    for (link, (i, f)) in lat.links_mut().iter_mut().zip(ends) {
        let lp = alpha[i] + link.scaled_logscore + beta[f] - total;
        link.posterior = lp.exp().min(1.0);
    }
    lat.state = ScoreState::Posteriors;
}

/// Removes links with posterior below `threshold`, trims the lattice, and
/// recomputes posteriors on what survives. Links on the MAP path are never
/// removed. Each surviving link keeps its pre-pruning posterior in
/// `prior_posterior`.
pub fn prune_links(lat: &Lattice, threshold: f64) -> Result<Lattice> {
    if !lat.has_posteriors() {
        return Err(Error::NoPosteriors);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("pruning threshold {threshold} outside [0, 1]")));
    }
    if threshold == 0.0 {
        return Ok(lat.clone());
    }
    let mut keep: Vec<bool> = lat.links().iter().map(|l| l.posterior >= threshold).collect();
    for idx in best_path_indices(lat) {
        keep[idx] = true;
    }
    let mut out = lat.retain_links(&keep)?;
    for link in out.links_mut() {
        link.prior_posterior = Some(link.posterior);
    }
    forward_backward(&mut out);
    Ok(out)
}

/// Indices of the highest-scoring path. Among equal-scoring paths the one
/// with the lexicographically smallest link-id sequence wins.
pub(crate) fn best_path_indices(lat: &Lattice) -> Vec<usize> {
    let n = lat.nodes().len();
    let ends = lat.ends();
    let links = lat.links();
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut choice = vec![usize::MAX; n];
    best[lat.final_index()] = 0.0;
    for v in (0..n).rev() {
        for &k in lat.out_links(v) {
            let f = ends[k].1;
            if best[f] == f64::NEG_INFINITY {
                continue;
            }
            let s = links[k].scaled_logscore + best[f];
            if s > best[v] {
                best[v] = s;
                choice[v] = k;
            }
        }
    }
    let mut path = Vec::new();
    let mut v = lat.initial_index();
    while v != lat.final_index() {
        let k = choice[v];
        path.push(k);
        v = ends[k].1;
    }
    path
}

impl Lattice {
    /// Link ids of the MAP path; requires scored links.
    pub fn best_path(&self) -> Result<Vec<LinkId>> {
        if self.state == ScoreState::Raw {
            return Err(Error::NoPosteriors);
        }
        Ok(best_path_indices(self).into_iter().map(|k| self.links()[k].id).collect())
    }

    /// Words along a path of link ids.
    pub fn path_words(&self, path: &[LinkId]) -> Result<Vec<String>> {
        path.iter().map(|&id| Ok(self.link(id)?.word.clone())).collect()
    }

    /// Total scaled log score of a path of link ids.
    pub fn path_logscore(&self, path: &[LinkId]) -> Result<f64> {
        path.iter().map(|&id| Ok(self.link(id)?.scaled_logscore)).sum()
    }
}

/// Viterbi decode under the scaled combined score.
pub fn map_hypothesis(lat: &Lattice, lambda: f64, lex: &PronLexicon) -> Result<Vec<String>> {
    let scored = score_links(lat, lambda, lex)?;
    let path = scored.best_path()?;
    scored.path_words(&path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::tests::{chain, diamond};
    use crate::lattice::{Link, Node};

    fn lex_for(lat: &Lattice) -> PronLexicon {
        PronLexicon::new().covering(lat.vocabulary(), true).unwrap().0
    }

    #[test]
    fn single_path_posteriors_are_one() {
        let lat = chain(&["A", "B", "C"]);
        let post = compute_link_posteriors(&lat, 12.0, &lex_for(&lat)).unwrap();
        for l in post.links() {
            assert!((l.posterior - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_lambda_and_missing_words() {
        let lat = chain(&["A"]);
        assert_eq!(
            compute_link_posteriors(&lat, 0.0, &lex_for(&lat)).unwrap_err(),
            Error::InvalidLambda(0.0)
        );
        assert_eq!(
            compute_link_posteriors(&lat, 1.0, &PronLexicon::new()).unwrap_err(),
            Error::MissingWord("A".into())
        );
    }

    #[test]
    fn pronunciation_model_penalizes_variants() {
        let lat = diamond(("A", 0.5), ("B", 0.5));
        let lex = PronLexicon::parse("A a\nA aa\nB b\n").unwrap();
        let post = compute_link_posteriors(&lat, 1.0, &lex).unwrap();
        assert!((post.links()[0].posterior - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn diamond_pruning_renormalizes() {
        let lat = diamond(("A", 0.999), ("B", 0.001));
        let post = compute_link_posteriors(&lat, 1.0, &lex_for(&lat)).unwrap();
        assert!((post.links()[1].posterior - 0.001).abs() < 1e-12);
        let pruned = prune_links(&post, 0.01).unwrap();
        assert_eq!(pruned.links().len(), 1);
        assert_eq!(pruned.links()[0].word, "A");
        assert!((pruned.links()[0].posterior - 1.0).abs() < 1e-12);
        assert!((pruned.links()[0].prior_posterior.unwrap() - 0.999).abs() < 1e-12);
        assert_eq!(prune_links(&post, 0.0).unwrap(), post);
        assert!(prune_links(&lat, 0.1).is_err());
    }

    #[test]
    fn map_path_survives_any_threshold() {
        let lat = diamond(("A", 0.6), ("B", 0.4));
        let post = compute_link_posteriors(&lat, 1.0, &lex_for(&lat)).unwrap();
        let pruned = prune_links(&post, 1.0).unwrap();
        assert_eq!(pruned.links().len(), 1);
        assert_eq!(pruned.links()[0].word, "A");
    }

    #[test]
    fn map_tie_breaks_on_link_id() {
        let nodes = vec![Node { id: 0, time: 0.0 }, Node { id: 1, time: 1.0 }];
        let links = vec![Link::new(4, 0, 1, "Z", -1.0, 0.0), Link::new(2, 0, 1, "Y", -1.0, 0.0)];
        let lat = Lattice::new("t", nodes, links, None).unwrap();
        assert_eq!(map_hypothesis(&lat, 1.0, &lex_for(&lat)).unwrap(), vec!["Y"]);
        let lat = chain(&["P", "Q"]);
        assert_eq!(map_hypothesis(&lat, 1.0, &lex_for(&lat)).unwrap(), vec!["P", "Q"]);
    }
}
