use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use lattice_consensus::apps::{
    beam_prune_lattice, consensus_prune_lattice, correct_rank_statistics, prune_confusion_network,
    SlotStatistics,
};
use lattice_consensus::decode::{center_hypothesis, nbest_posteriors, word_error, EditCounts, NBestList};
use lattice_consensus::lattice::{oracle_wer, parse_lattice, prune_links, score_links, write_lattice};
use lattice_consensus::pipeline::{decode_lattice, decode_with_threshold, Decoded, DEFAULT_LAMBDA};
use lattice_consensus::synth::{generate_corpus, write_transcripts};
use lattice_consensus::{ConfusionNetwork, Lattice, PronLexicon};
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::config::Common;
use crate::inputs::{expand, file_stem, load, read_lexicon, read_transcripts, write};

/// Errors from individual utterances, reported after all outputs are written.
pub struct Outcome {
    pub stdout: String,
    pub failures: Vec<anyhow::Error>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            failures: Vec::new(),
        }
    }
}

fn transcript(items: &BTreeMap<String, Vec<String>>) -> String {
    write_transcripts(items.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

type Loaded<T> = (BTreeMap<String, T>, Vec<anyhow::Error>);

fn load_lattices(pool: &rayon::ThreadPool, inputs: &[PathBuf]) -> Result<Loaded<Lattice>> {
    let files = expand(inputs, &["lat"])?;
    load(pool, &files, parse_lattice, |l: &Lattice| l.utterance_id().to_string())
}

/// Runs `f` over the utterances in parallel, splitting results from failures
/// while keeping utterance order.
fn par_map<T: Sync, R: Send>(
    pool: &rayon::ThreadPool,
    items: &BTreeMap<String, T>,
    f: impl Fn(&str, &T) -> Result<R> + Sync,
) -> (BTreeMap<String, R>, Vec<anyhow::Error>) {
    let list: Vec<(&String, &T)> = items.iter().collect();
    let results: Vec<Result<R>> = pool.install(|| {
        list.par_iter()
            .map(|(k, v)| f(k, v).with_context(|| format!("utterance {k}")))
            .collect()
    });
    let mut ok = BTreeMap::new();
    let mut failures = Vec::new();
    for ((k, _), r) in list.into_iter().zip(results) {
        match r {
            Ok(v) => {
                ok.insert(k.clone(), v);
            }
            Err(e) => failures.push(e),
        }
    }
    (ok, failures)
}

#[derive(Args, Debug)]
pub struct ConsensusArgs {
    /// Lattice files or directories of `.lat` files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

pub fn consensus(args: &ConsensusArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let pool = cfg.pool()?;
    let lex = read_lexicon(args.lexicon.as_deref(), cfg.run.fallback_pronunciations)?;
    let (lattices, mut failures) = load_lattices(&pool, &args.inputs)?;
    let (decoded, errs) = par_map(&pool, &lattices, |_, lat| Ok(decode_lattice(lat, &lex, &cfg.run)?));
    failures.extend(errs);

    let hyps: BTreeMap<String, Vec<String>> =
        decoded.iter().map(|(k, d)| (k.clone(), d.consensus.words.clone())).collect();
    let text = transcript(&hyps);
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("consensus.txt"), &text)?;
        let map: BTreeMap<String, Vec<String>> = decoded.iter().map(|(k, d)| (k.clone(), d.map_words.clone())).collect();
        write(&dir.join("map.txt"), &transcript(&map))?;
        for (id, d) in &decoded {
            write(&dir.join("cn").join(format!("{}.cn", file_stem(id))), &d.output_cn(&cfg.run)?.to_text())?;
        }
        let fallback: BTreeMap<&String, &Vec<String>> =
            decoded.iter().filter(|(_, d)| !d.synthesized.is_empty()).map(|(k, d)| (k, &d.synthesized)).collect();
        cfg.write_sidecar("consensus", serde_json::json!({ "fallback_pronunciations_used": fallback }))?;
    }
    Ok(Outcome { stdout: text, failures })
}

#[derive(Args, Debug)]
pub struct NBestArgs {
    /// N-best files or directories of `.nbest` files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

pub fn nbest_center(args: &NBestArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let pool = cfg.pool()?;
    let files = expand(&args.inputs, &["nbest"])?;
    let (lists, mut failures) = load(&pool, &files, NBestList::parse, |n: &NBestList| n.utterance_id.clone())?;
    let lambda = cfg.run.lambda.unwrap_or(DEFAULT_LAMBDA);
    let (centers, errs) = par_map(&pool, &lists, |_, nb| Ok(center_hypothesis(&nbest_posteriors(nb, lambda)?)?));
    failures.extend(errs);
    let words: BTreeMap<String, Vec<String>> = centers.iter().map(|(k, c)| (k.clone(), c.words.clone())).collect();
    let text = transcript(&words);
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("center.txt"), &text)?;
        let rows: Vec<Vec<String>> = centers
            .iter()
            .map(|(k, c)| vec![k.clone(), c.index.to_string(), fmt_f(c.expected_error), c.inner_iterations.to_string()])
            .collect();
        write(
            &dir.join("center.csv"),
            &csv_text(&["utterance", "index", "expected_error", "inner_iterations"], &rows)?,
        )?;
        cfg.write_sidecar("nbest-center", serde_json::json!({ "lambda_used": lambda }))?;
    }
    Ok(Outcome { stdout: text, failures })
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Hypothesis transcript (`utt w1 w2 ...` per line)
    #[arg(long)]
    hyp: PathBuf,
    /// Reference transcript
    #[arg(long = "ref")]
    reference: PathBuf,
    #[command(flatten)]
    common: Common,
}

pub fn score(args: &ScoreArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let hyp = read_transcripts(&args.hyp)?;
    let refs = read_transcripts(&args.reference)?;
    if !hyp.keys().eq(refs.keys()) {
        let missing: Vec<&String> = refs.keys().filter(|k| !hyp.contains_key(*k)).collect();
        let extra: Vec<&String> = hyp.keys().filter(|k| !refs.contains_key(*k)).collect();
        bail!("utterance ids differ: missing from hypothesis {missing:?}, not in reference {extra:?}");
    }
    let mut rows = Vec::new();
    let mut total = EditCounts::default();
    let mut words = 0;
    let row = |id: &str, n: usize, c: &EditCounts| {
        vec![
            id.to_string(),
            n.to_string(),
            c.errors.to_string(),
            c.subs.to_string(),
            c.dels.to_string(),
            c.ins.to_string(),
            fmt_f(pct(c.errors, n)),
        ]
    };
    for (id, r) in &refs {
        let c = word_error(&hyp[id], r);
        rows.push(row(id, r.len(), &c));
        total += c;
        words += r.len();
    }
    rows.push(row("ALL", words, &total));
    let text = csv_text(
        &["utterance", "ref_words", "errors", "substitutions", "deletions", "insertions", "wer_pct"],
        &rows,
    )?;
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("score.csv"), &text)?;
        cfg.write_sidecar("score", serde_json::json!({}))?;
    }
    Ok(Outcome::ok(text))
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Overrides the corpus size from the config file
    #[arg(long)]
    utterances: Option<usize>,
    #[command(flatten)]
    common: Common,
}

pub fn generate(args: &GenerateArgs) -> Result<Outcome> {
    let mut cfg = args.common.resolve()?;
    if let Some(n) = args.utterances {
        cfg.spec.utterance_count = n;
    }
    let dir = cfg.require_out_dir()?.to_path_buf();
    let corpus = generate_corpus(&cfg.spec, cfg.run.seed)?;
    let pool = cfg.pool()?;
    let results: Vec<Result<()>> = pool.install(|| {
        corpus
            .utterances
            .par_iter()
            .map(|u| {
                let id = u.lattice.utterance_id();
                write(&dir.join("lattices").join(format!("{}.lat", file_stem(id))), &write_lattice(&u.lattice))
            })
            .collect()
    });
    results.into_iter().collect::<Result<()>>()?;
    write(&dir.join("reference.txt"), &corpus.reference_text())?;
    write(&dir.join("lexicon.txt"), &corpus.lexicon.to_text())?;
    cfg.write_sidecar("generate", serde_json::json!({ "spec": cfg.spec }))?;
    Ok(Outcome::ok(format!(
        "generated {} utterances\n",
        corpus.utterances.len()
    )))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let mut v = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        bail!("list values must be finite and non-negative");
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Posterior pruning thresholds applied before alignment
    #[arg(long, default_value = "0,0.0001,0.001,0.01,0.1")]
    thresholds: String,
    /// Slot posterior floors for consensus-based lattice pruning
    #[arg(long)]
    cn_thresholds: Option<String>,
    /// Beam widths for likelihood pruning
    #[arg(long)]
    beams: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    links_before: usize,
    links: usize,
    nodes: usize,
    errors: usize,
    oracle: usize,
    ref_words: usize,
}

impl Tally {
    fn add(&mut self, before: usize, lat: &Lattice, hyp: &[String], reference: &[String]) {
        self.links_before += before;
        self.links += lat.links().len();
        self.nodes += lat.nodes().len();
        self.errors += word_error(hyp, reference).errors;
        self.oracle += oracle_wer(lat, reference).errors;
        self.ref_words += reference.len();
    }

    fn row(&self, method: &str, threshold: String) -> Vec<String> {
        let words = self.ref_words.max(1) as f64;
        vec![
            method.to_string(),
            threshold,
            fmt_f(pct(self.links, self.links_before)),
            fmt_f(pct(self.errors, self.ref_words)),
            fmt_f(pct(self.oracle, self.ref_words)),
            fmt_f(self.nodes as f64 / words),
            fmt_f(self.links as f64 / words),
        ]
    }
}

pub const SWEEP_HEADER: [&str; 7] = [
    "method",
    "threshold",
    "retained_link_pct",
    "wer",
    "oracle_wer",
    "node_density",
    "link_density",
];

fn viterbi_words(lat: &Lattice) -> Result<Vec<String>> {
    Ok(lat.path_words(&lat.best_path()?)?)
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let pool = cfg.pool()?;
    let thresholds = parse_list(&args.thresholds)?;
    if thresholds.iter().any(|t| *t > 1.0) {
        bail!("posterior thresholds must lie in [0, 1]");
    }
    let cn_thresholds = args.cn_thresholds.as_deref().map(parse_list).transpose()?.unwrap_or_default();
    let beams = args.beams.as_deref().map(parse_list).transpose()?.unwrap_or_default();
    let base_lex = read_lexicon(args.lexicon.as_deref(), cfg.run.fallback_pronunciations)?;
    let refs = read_transcripts(&args.reference)?;
    let (lattices, mut failures) = load_lattices(&pool, &args.inputs)?;

    struct Utt {
        map: Tally,
        posterior: Vec<(Tally, Vec<String>)>,
        consensus_pruned: Vec<Tally>,
        beam: Vec<Tally>,
    }
    let (utts, errs) = par_map(&pool, &lattices, |id, lat| {
        let reference = refs.get(id).ok_or_else(|| anyhow!("no reference transcript"))?;
        let (lex, _) = base_lex.covering(lat.vocabulary(), cfg.run.fallback_pronunciations)?;
        let before = lat.links().len();
        let scored = score_links(lat, cfg.run.lambda_for(lat), &lex)?;
        let mut map = Tally::default();
        map.add(before, lat, &viterbi_words(&scored)?, reference);
        let mut posterior = Vec::new();
        for &t in &thresholds {
            let d = decode_with_threshold(lat, &lex, &cfg.run, t)?;
            let mut tally = Tally::default();
            tally.add(before, &d.lattice, &d.consensus.words, reference);
            posterior.push((tally, d.consensus.words));
        }
        let mut consensus_pruned = Vec::new();
        if !cn_thresholds.is_empty() {
            let d: Decoded = decode_with_threshold(lat, &lex, &cfg.run, cfg.run.prune_threshold)?;
            for &t in &cn_thresholds {
                let cn = prune_confusion_network(&d.cn, cfg.run.max_candidates.unwrap_or(usize::MAX), t.min(1.0))?;
                let pruned = consensus_prune_lattice(&d.lattice, &cn)?;
                let mut tally = Tally::default();
                tally.add(before, &pruned, &viterbi_words(&pruned)?, reference);
                consensus_pruned.push(tally);
            }
        }
        let mut beam = Vec::new();
        for &b in &beams {
            let pruned = beam_prune_lattice(&scored, b)?;
            let mut tally = Tally::default();
            tally.add(before, &pruned, &viterbi_words(&pruned)?, reference);
            beam.push(tally);
        }
        Ok(Utt {
            map,
            posterior,
            consensus_pruned,
            beam,
        })
    });
    failures.extend(errs);

    let sum = |pick: &dyn Fn(&Utt) -> Tally| {
        utts.values().fold(Tally::default(), |mut acc, u| {
            let t = pick(u);
            acc.links_before += t.links_before;
            acc.links += t.links;
            acc.nodes += t.nodes;
            acc.errors += t.errors;
            acc.oracle += t.oracle;
            acc.ref_words += t.ref_words;
            acc
        })
    };
    let mut rows = vec![sum(&|u| u.map).row("map", String::new())];
    for (i, t) in thresholds.iter().enumerate() {
        rows.push(sum(&|u| u.posterior[i].0).row("consensus", t.to_string()));
    }
    for (i, t) in cn_thresholds.iter().enumerate() {
        rows.push(sum(&|u| u.consensus_pruned[i]).row("consensus-prune", t.to_string()));
    }
    for (i, b) in beams.iter().enumerate() {
        rows.push(sum(&|u| u.beam[i]).row("beam", b.to_string()));
    }
    let text = csv_text(&SWEEP_HEADER, &rows)?;
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("sweep.csv"), &text)?;
        for (i, t) in thresholds.iter().enumerate() {
            let hyps: BTreeMap<String, Vec<String>> =
                utts.iter().map(|(k, u)| (k.clone(), u.posterior[i].1.clone())).collect();
            write(&dir.join(format!("consensus_{t}.txt")), &transcript(&hyps))?;
        }
        cfg.write_sidecar(
            "sweep",
            serde_json::json!({ "thresholds": thresholds, "cn_thresholds": cn_thresholds, "beams": beams }),
        )?;
    }
    Ok(Outcome { stdout: text, failures })
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Confusion network files or directories of `.cn` files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[command(flatten)]
    common: Common,
}

pub fn stats_tables(stats: &SlotStatistics) -> Result<(String, String)> {
    let ranks: Vec<Vec<String>> =
        stats.rank_histogram.iter().map(|(r, c)| vec![r.to_string(), c.to_string()]).collect();
    let ratio = |a: usize, b: usize| if b == 0 { String::new() } else { fmt_f(a as f64 / b as f64) };
    let summary = vec![
        ("total_slots", stats.total_slots.to_string()),
        ("ranked_slots", stats.ranked_slots().to_string()),
        ("missing", stats.missing.to_string()),
        ("singleton_count", stats.singleton_count.to_string()),
        ("singleton_correct", stats.singleton_correct.to_string()),
        ("singleton_accuracy", ratio(stats.singleton_correct, stats.singleton_count)),
        ("pair_count", stats.pair_count.to_string()),
        ("pair_top1_correct", stats.pair_top1_correct.to_string()),
        ("pair_top2_correct", stats.pair_top2_correct.to_string()),
        ("pair_top1_accuracy", ratio(stats.pair_top1_correct, stats.pair_count)),
        ("pair_top2_gain", (stats.pair_top2_correct - stats.pair_top1_correct).to_string()),
    ];
    let summary: Vec<Vec<String>> = summary.into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
    Ok((csv_text(&["rank", "count"], &ranks)?, csv_text(&["metric", "value"], &summary)?))
}

pub fn stats(args: &StatsArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let pool = cfg.pool()?;
    let refs = read_transcripts(&args.reference)?;
    let files = expand(&args.inputs, &["cn"])?;
    let (cns, mut failures) = load(&pool, &files, ConfusionNetwork::parse, |c: &ConfusionNetwork| c.utterance_id.clone())?;
    let (per_utt, errs) = par_map(&pool, &cns, |id, cn| {
        let reference = refs.get(id).ok_or_else(|| anyhow!("no reference transcript"))?;
        Ok(correct_rank_statistics(cn, reference))
    });
    failures.extend(errs);
    let mut total = SlotStatistics::default();
    for s in per_utt.values() {
        total.merge(s);
    }
    let (ranks, summary) = stats_tables(&total)?;
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("ranks.csv"), &ranks)?;
        write(&dir.join("slot_stats.csv"), &summary)?;
        cfg.write_sidecar("stats", serde_json::json!({}))?;
    }
    Ok(Outcome {
        stdout: format!("{ranks}\n{summary}"),
        failures,
    })
}

#[derive(Args, Debug)]
pub struct PathsArgs {
    /// Lattice or confusion network files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

/// Base-10 logarithm of an arbitrarily large count.
pub fn log10_big(n: &BigUint) -> f64 {
    let digits = n.to_string();
    let lead = &digits[..digits.len().min(17)];
    let mantissa: f64 = lead.parse().expect("decimal digits");
    mantissa.log10() + (digits.len() - lead.len()) as f64
}

enum Graph {
    Lattice(Lattice),
    Network(ConfusionNetwork),
}

impl Graph {
    fn parse(text: &str) -> lattice_consensus::Result<Graph> {
        if text.lines().any(|l| l.trim_start().starts_with("slot ")) {
            ConfusionNetwork::parse(text).map(Graph::Network)
        } else {
            parse_lattice(text).map(Graph::Lattice)
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Graph::Lattice(_) => "lattice",
            Graph::Network(_) => "cn",
        }
    }

    /// Sorts lattices before networks of the same utterance.
    fn key(&self) -> String {
        let id = match self {
            Graph::Lattice(l) => l.utterance_id(),
            Graph::Network(c) => &c.utterance_id,
        };
        format!("{id}\t{}", self.kind())
    }
}

pub fn paths(args: &PathsArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let pool = cfg.pool()?;
    let files = expand(&args.inputs, &["lat", "cn"])?;
    let (graphs, failures) = load(&pool, &files, Graph::parse, Graph::key)?;
    let rows: Vec<Vec<String>> = graphs
        .iter()
        .map(|(key, g)| {
            let n = match g {
                Graph::Lattice(l) => l.count_paths(),
                Graph::Network(c) => c.count_paths(),
            };
            let id = key.rsplit_once('\t').map_or(key.as_str(), |(id, _)| id);
            vec![id.to_string(), g.kind().to_string(), n.to_string(), fmt_f(log10_big(&n))]
        })
        .collect();
    let text = csv_text(&["utterance", "kind", "paths", "log10_paths"], &rows)?;
    if let Some(dir) = &cfg.out_dir {
        write(&dir.join("paths.csv"), &text)?;
        cfg.write_sidecar("paths", serde_json::json!({}))?;
    }
    Ok(Outcome { stdout: text, failures })
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneMode {
    /// Drop links below a posterior threshold
    Posterior,
    /// Keep only paths that survive in the pruned confusion network
    Consensus,
    /// Keep links on paths within a score beam of the best path
    Beam,
}

#[derive(Args, Debug)]
pub struct PruneArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "posterior")]
    mode: PruneMode,
    /// Posterior threshold, slot posterior floor, or beam width, by mode
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    common: Common,
}

pub fn prune_lattice(args: &PruneArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let dir = cfg.require_out_dir()?.to_path_buf();
    let pool = cfg.pool()?;
    let base_lex: PronLexicon = read_lexicon(args.lexicon.as_deref(), cfg.run.fallback_pronunciations)?;
    let threshold = match (args.mode, args.threshold) {
        (_, Some(t)) => t,
        (PruneMode::Posterior, None) => cfg.run.prune_threshold,
        (PruneMode::Consensus, None) => 0.0,
        (PruneMode::Beam, None) => bail!("--mode beam needs --threshold"),
    };
    if !(threshold.is_finite() && threshold >= 0.0) {
        bail!("threshold must be finite and non-negative");
    }
    let (lattices, mut failures) = load_lattices(&pool, &args.inputs)?;
    let (pruned, errs) = par_map(&pool, &lattices, |_, lat| {
        let (lex, _) = base_lex.covering(lat.vocabulary(), cfg.run.fallback_pronunciations)?;
        let lambda = cfg.run.lambda_for(lat);
        let out = match args.mode {
            PruneMode::Posterior => {
                let post = lattice_consensus::lattice::compute_link_posteriors(lat, lambda, &lex)?;
                prune_links(&post, threshold.min(1.0))?
            }
            PruneMode::Consensus => {
                let d = decode_with_threshold(lat, &lex, &cfg.run, cfg.run.prune_threshold)?;
                let cn = prune_confusion_network(&d.cn, cfg.run.max_candidates.unwrap_or(usize::MAX), threshold.min(1.0))?;
                consensus_prune_lattice(&d.lattice, &cn)?
            }
            PruneMode::Beam => beam_prune_lattice(&score_links(lat, lambda, &lex)?, threshold)?,
        };
        Ok(out)
    });
    failures.extend(errs);
    let mut rows = Vec::new();
    for (id, out) in &pruned {
        let orig = &lattices[id];
        write(&dir.join("lattices").join(format!("{}.lat", file_stem(id))), &write_lattice(out))?;
        rows.push(vec![
            id.clone(),
            orig.links().len().to_string(),
            out.links().len().to_string(),
            orig.count_paths().to_string(),
            out.count_paths().to_string(),
        ]);
    }
    let text = csv_text(&["utterance", "links_before", "links_after", "paths_before", "paths_after"], &rows)?;
    write(&dir.join("prune.csv"), &text)?;
    cfg.write_sidecar("prune-lattice", serde_json::json!({ "mode": args.mode, "threshold": threshold }))?;
    Ok(Outcome { stdout: text, failures })
}
