mod common;

use std::collections::{HashMap, HashSet};

use common::*;
use lattice_consensus::align::{
    build_confusion_network, inter_word_cluster, intra_word_cluster, AlignOptions, AlignmentState,
};
use lattice_consensus::apps::{
    cn_accuracy, consensus_prune_lattice, correct_rank_statistics, prune_confusion_network,
};
use lattice_consensus::decode::{
    center_hypothesis, consensus_hypothesis, expected_path_error, lattice_path_to_cn_path, mwe, nbest_posteriors,
    word_error, Hypothesis, NBestList,
};
use lattice_consensus::lattice::{compute_link_posteriors, oracle_wer, parse_lattice, prune_links, write_lattice};
use lattice_consensus::synth::{letter_lexicon, random_lattice, RandomLatticeSpec};
use lattice_consensus::{ConfusionNetwork, Lattice, Link, MetricVariant, PronLexicon};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice_for(seed: u64) -> (Lattice, PronLexicon) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomLatticeSpec::default();
    let lat = random_lattice(&mut rng, &spec, "p");
    (lat, letter_lexicon(&spec.vocabulary))
}

fn small_lattice_for(seed: u64) -> (Lattice, PronLexicon) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomLatticeSpec {
        max_nodes: 6,
        max_extra_links: 6,
        max_paths: 300,
        ..Default::default()
    };
    let lat = random_lattice(&mut rng, &spec, "s");
    (lat, letter_lexicon(&spec.vocabulary))
}

fn aligned(seed: u64, variant: MetricVariant) -> (Lattice, ConfusionNetwork) {
    let (lat, lex) = small_lattice_for(seed);
    let post = compute_link_posteriors(&lat, 1.0, &lex).unwrap();
    let pruned = prune_links(&post, 1e-3).unwrap();
    let opts = AlignOptions {
        variant,
        check_invariants: false,
    };
    let (_, cn) = lattice_consensus::align::align_lattice(&pruned, &lex, &opts).unwrap();
    (pruned, cn)
}

fn random_path_words(lat: &Lattice, rng: &mut ChaCha8Rng) -> Vec<String> {
    let paths = all_paths(lat, usize::MAX).unwrap();
    let p = &paths[rng.random_range(0..paths.len())];
    lat.path_words(p).unwrap()
}

/// Class relation from link precedence, closed, compared against the state.
fn check_against_oracle(lat: &Lattice, order: &[Vec<bool>], state: &AlignmentState) -> Result<(), String> {
    state.check_invariants().map_err(|e| e.to_string())?;
    let ids: Vec<usize> = state.classes().map(|c| c.class_id).collect();
    let pos: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let n = ids.len();
    let mut rel = vec![vec![false; n]; n];
    for (i, e) in lat.links().iter().enumerate() {
        for (j, f) in lat.links().iter().enumerate() {
            if order[i][j] {
                let a = pos[&state.class_of_link(e.id).unwrap()];
                let b = pos[&state.class_of_link(f.id).unwrap()];
                rel[a][b] = true;
            }
        }
    }
    let rel = closure(rel);
    for a in 0..n {
        for b in 0..n {
            if a != b && rel[a][b] && rel[b][a] {
                return Err(format!("classes {} and {} form a cycle", ids[a], ids[b]));
            }
            if rel[a][b] != state.precedes(ids[a], ids[b]) {
                return Err(format!("order of {} vs {} disagrees with the link-induced closure", ids[a], ids[b]));
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posteriors_match_path_sums(seed in any::<u64>(), lambda in 0.5f64..15.0) {
        let (lat, lex) = lattice_for(seed);
        let post = compute_link_posteriors(&lat, lambda, &lex).unwrap();
        let oracle = brute_posteriors(&lat, lambda, &lex);
        for l in post.links() {
            prop_assert!((l.posterior - oracle[&l.id]).abs() < 1e-9);
        }
    }

    #[test]
    fn cuts_sum_to_one(seed in any::<u64>()) {
        let (lat, lex) = lattice_for(seed);
        let post = compute_link_posteriors(&lat, 12.0, &lex).unwrap();
        // Node list is topologically sorted; every path crosses each cut once.
        let rank: HashMap<u32, usize> = post.nodes().iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        for k in 1..post.nodes().len() {
            let sum: f64 = post
                .links()
                .iter()
                .filter(|l| rank[&l.inode] < k && k <= rank[&l.fnode])
                .map(|l| l.posterior)
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "cut {} sums to {}", k, sum);
        }
    }

    #[test]
    fn constant_acoustic_shift_is_invisible(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let (lat, lex) = lattice_for(seed);
        let start = lat.initial_node();
        let shifted: Vec<Link> = lat
            .links()
            .iter()
            .map(|l| {
                let mut l = l.clone();
                if l.inode == start {
                    l.ac_logscore += shift;
                }
                l
            })
            .collect();
        let other = Lattice::new("p", lat.nodes().to_vec(), shifted, None).unwrap();
        let a = compute_link_posteriors(&lat, 12.0, &lex).unwrap();
        let b = compute_link_posteriors(&other, 12.0, &lex).unwrap();
        for (x, y) in a.links().iter().zip(b.links()) {
            prop_assert!((x.posterior - y.posterior).abs() < 1e-9);
        }
    }

    #[test]
    fn pruning_is_monotone(seed in any::<u64>(), t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
        let (lat, lex) = lattice_for(seed);
        let post = compute_link_posteriors(&lat, 1.0, &lex).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = prune_links(&post, lo).unwrap();
        let b = prune_links(&post, hi).unwrap();
        prop_assert!(a.count_paths() <= post.count_paths());
        prop_assert!(b.count_paths() <= a.count_paths());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let reference = random_path_words(&lat, &mut rng);
        let full = oracle_wer(&post, &reference).errors;
        prop_assert_eq!(full, 0);
        prop_assert!(oracle_wer(&a, &reference).errors <= oracle_wer(&b, &reference).errors);
        prop_assert!(!b.links().is_empty());
    }

    #[test]
    fn oracle_wer_matches_enumeration(seed in any::<u64>(), ref_len in 0usize..5) {
        let (lat, _) = lattice_for(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = ["A", "B", "C", "D", "E", "F", "Z"];
        let reference: Vec<&str> = (0..ref_len).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
        let best = all_paths(&lat, usize::MAX)
            .unwrap()
            .iter()
            .map(|p| levenshtein(&lat.path_words(p).unwrap(), &reference))
            .min()
            .unwrap();
        let o = oracle_wer(&lat, &reference);
        prop_assert_eq!(o.errors, best);
        prop_assert_eq!(levenshtein(&o.words, &reference), best);
    }

    #[test]
    fn link_precedence_is_a_partial_order(seed in any::<u64>()) {
        let (lat, _) = lattice_for(seed);
        let ids: Vec<u32> = lat.links().iter().map(|l| l.id).collect();
        let order = link_order(&lat);
        for (i, &e) in ids.iter().enumerate() {
            prop_assert!(lat.link_precedes(e, e).unwrap());
            for (j, &f) in ids.iter().enumerate() {
                let ef = lat.link_precedes(e, f).unwrap();
                prop_assert_eq!(ef, order[i][j]);
                if i != j && ef {
                    prop_assert!(!lat.link_precedes(f, e).unwrap());
                }
            }
        }
    }

    #[test]
    fn invariants_hold_after_every_merge(seed in any::<u64>(), v in 0usize..5) {
        let variant = MetricVariant::ALL[v];
        let (lat, lex) = lattice_for(seed);
        let post = prune_links(&compute_link_posteriors(&lat, 1.0, &lex).unwrap(), 1e-3).unwrap();
        let order = link_order(&post);
        let opts = AlignOptions { variant, check_invariants: false };
        let mut state = AlignmentState::new(&post, variant, &lex).unwrap();
        check_against_oracle(&post, &order, &state).map_err(TestCaseError::fail)?;
        let mut failure = None;
        let mut observe = |s: &AlignmentState, _: &_| {
            if failure.is_none() {
                failure = check_against_oracle(&post, &order, s).err();
            }
        };
        intra_word_cluster(&mut state, &opts, &mut observe).unwrap();
        inter_word_cluster(&mut state, &lex, &opts, &mut observe).unwrap();
        prop_assert_eq!(failure, None);
        prop_assert!(state.is_total());
        let cn = build_confusion_network(&state).unwrap();
        cn.validate(1e-6).unwrap();
    }

    #[test]
    fn lattice_paths_map_into_the_network(seed in any::<u64>(), v in 0usize..5) {
        let (lat, cn) = aligned(seed, MetricVariant::ALL[v]);
        let linked: usize = cn.slot_links().iter().map(Vec::len).sum();
        prop_assert_eq!(linked, lat.links().len());
        for p in all_paths(&lat, usize::MAX).unwrap() {
            let tokens = lattice_path_to_cn_path(&cn, &p).unwrap();
            cn.check_path(&tokens).unwrap();
            prop_assert_eq!(strip_deletions(&tokens), lat.path_words(&p).unwrap());
        }
    }

    #[test]
    fn consensus_minimizes_expected_error(seed in any::<u64>()) {
        let (_, cn) = aligned(seed, MetricVariant::Default);
        let best = consensus_hypothesis(&cn);
        for (path, _) in cn_paths(&cn) {
            prop_assert!(best.expected_error <= expected_path_error(&cn, &path).unwrap() + 1e-12);
        }
    }

    #[test]
    fn mwe_bounds_word_error(seed in any::<u64>()) {
        let (_, cn) = aligned(seed, MetricVariant::Default);
        let paths = cn_paths(&cn);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let a = &paths[rng.random_range(0..paths.len())].0;
            let b = &paths[rng.random_range(0..paths.len())].0;
            let we = levenshtein(&strip_deletions(a), &strip_deletions(b));
            prop_assert!(mwe(&cn, a, b).unwrap() >= we);
        }
    }

    #[test]
    fn word_error_is_a_metric(a in prop::collection::vec(0u8..4, 0..7), b in prop::collection::vec(0u8..4, 0..7), c in prop::collection::vec(0u8..4, 0..7)) {
        let w = |x: &[u8]| x.iter().map(|i| ["A", "B", "C", "D"][*i as usize]).collect::<Vec<_>>();
        let (a, b, c) = (w(&a), w(&b), w(&c));
        let ab = word_error(&a, &b);
        prop_assert_eq!(ab.errors, levenshtein(&a, &b));
        prop_assert_eq!(ab.errors, ab.subs + ab.dels + ab.ins);
        prop_assert_eq!(word_error(&a, &a).errors, 0);
        prop_assert_eq!(ab.errors, word_error(&b, &a).errors);
        prop_assert!(word_error(&a, &c).errors <= ab.errors + word_error(&b, &c).errors);
    }

    #[test]
    fn center_matches_brute_force(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = ["A", "B", "C", "D"];
        let hyps = (0..n)
            .map(|_| Hypothesis {
                words: (0..rng.random_range(0..5)).map(|_| vocab[rng.random_range(0..4)].to_string()).collect(),
                ac_logscore: rng.random_range(-40.0..0.0),
                lm_logscore: rng.random_range(-5.0..0.0),
                pron_logscore: 0.0,
            })
            .collect();
        let nb = nbest_posteriors(&NBestList::new("n", hyps), 4.0).unwrap();
        let mut best = (0, f64::INFINITY);
        for (i, h) in nb.hypotheses.iter().enumerate() {
            let e: f64 = nb.hypotheses.iter().zip(&nb.posteriors).map(|(o, p)| p * levenshtein(&o.words, &h.words) as f64).sum();
            if e < best.1 {
                best = (i, e);
            }
        }
        let c = center_hypothesis(&nb).unwrap();
        prop_assert_eq!((c.index, c.expected_error), best);
        prop_assert!(c.inner_iterations <= n * n);
    }

    #[test]
    fn intersection_keeps_a_subset_of_paths(seed in any::<u64>(), floor in 0.0f64..0.6, max in 1usize..4) {
        let (lat, cn) = aligned(seed, MetricVariant::Default);
        let pruned_cn = prune_confusion_network(&cn, max, floor).unwrap();
        let out = consensus_prune_lattice(&lat, &pruned_cn).unwrap();
        let before: HashSet<Vec<u32>> = all_paths(&lat, usize::MAX).unwrap().into_iter().collect();
        let after = all_paths(&out, usize::MAX).unwrap();
        prop_assert!(after.iter().all(|p| before.contains(p)));
        prop_assert!(out.count_paths() <= lat.count_paths());
        let protected: HashSet<u32> = oracle_wer(&lat, &consensus_hypothesis(&pruned_cn).words).links.into_iter().collect();
        for l in out.links() {
            let slot = cn.slot_of_link(l.id).unwrap();
            prop_assert!(pruned_cn.slots()[slot].contains(&l.word) || protected.contains(&l.id));
        }
    }

    #[test]
    fn cn_accuracy_is_an_oracle(seed in any::<u64>(), ref_len in 0usize..5) {
        let (lat, cn) = aligned(seed, MetricVariant::Default);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = ["A", "B", "C", "D", "E", "F", "Z"];
        let reference: Vec<&str> = (0..ref_len).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
        let acc = cn_accuracy(&cn, &reference);
        // Any slot may be skipped, so enumerate listed tokens plus "-".
        let mut best = usize::MAX;
        let mut paths: Vec<Vec<String>> = vec![Vec::new()];
        for slot in cn.slots() {
            let mut toks: Vec<String> = slot.entries().iter().map(|e| e.0.clone()).collect();
            if !slot.contains("-") {
                toks.push("-".into());
            }
            paths = paths.iter().flat_map(|p| toks.iter().map(move |t| { let mut q = p.clone(); q.push(t.clone()); q })).collect();
        }
        for p in &paths {
            best = best.min(levenshtein(&strip_deletions(p), &reference));
        }
        prop_assert_eq!(acc.errors, best);
        prop_assert_eq!(levenshtein(&strip_deletions(&acc.path), &reference), best);
        prop_assert!(acc.errors <= word_error(&consensus_hypothesis(&cn).words, &reference).errors);
        prop_assert!(acc.errors <= oracle_wer(&lat, &reference).errors);

        let stats = correct_rank_statistics(&cn, &reference);
        prop_assert_eq!(stats.ranked_slots() + stats.missing, cn.len());
        prop_assert!(stats.rank_histogram.keys().all(|&r| r >= 1));
        prop_assert!(stats.singleton_correct <= stats.singleton_count);
        prop_assert!(stats.pair_top1_correct <= stats.pair_top2_correct);
        prop_assert!(stats.pair_top2_correct <= stats.pair_count);
    }

    #[test]
    fn no_posterior_alignment_ignores_scores(seed in any::<u64>(), other in any::<u64>()) {
        let (lat, lex) = lattice_for(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(other);
        let rescored: Vec<Link> = lat
            .links()
            .iter()
            .map(|l| {
                let mut l = l.clone();
                l.ac_logscore = rng.random_range(-8.0..0.0);
                l.lm_logscore = rng.random_range(-3.0..0.0);
                l
            })
            .collect();
        let other = Lattice::new("p", lat.nodes().to_vec(), rescored, None).unwrap();
        let opts = AlignOptions { variant: MetricVariant::NoPosterior, check_invariants: false };
        let slots = |l: &Lattice| {
            let post = compute_link_posteriors(l, 1.0, &lex).unwrap();
            let (_, cn) = lattice_consensus::align::align_lattice(&post, &lex, &opts).unwrap();
            let mut s: Vec<Vec<u32>> = cn.slot_links().iter().map(|m| m.iter().map(|x| x.0).collect()).collect();
            for v in &mut s {
                v.sort_unstable();
            }
            s
        };
        prop_assert_eq!(slots(&lat), slots(&other));
    }

    #[test]
    fn lattice_text_round_trips(seed in any::<u64>()) {
        let (lat, _) = lattice_for(seed);
        prop_assert_eq!(parse_lattice(&write_lattice(&lat)).unwrap(), lat);
    }

    #[test]
    fn cn_text_round_trips(seed in any::<u64>()) {
        let (_, cn) = aligned(seed, MetricVariant::Default);
        let back = ConfusionNetwork::parse(&cn.to_text()).unwrap();
        prop_assert_eq!(back.len(), cn.len());
        for (a, b) in back.slots().iter().zip(cn.slots()) {
            for (tok, p) in b.entries() {
                prop_assert!((a.posterior(tok) - p).abs() < 1e-6);
            }
        }
    }
}
