//! End-to-end decoding of one utterance: posteriors, pruning, alignment,
//! consensus, plus the MAP baseline expressed in the same network.

use serde::{Deserialize, Serialize};

use crate::align::{align_lattice, AlignOptions, MetricVariant};
use crate::apps::prune_confusion_network;
use crate::cn::ConfusionNetwork;
use crate::decode::{consensus_hypothesis, expected_path_error, lattice_path_to_cn_path, Consensus};
use crate::error::{Error, Result};
use crate::lattice::{compute_link_posteriors, prune_links, Lattice};
use crate::lexicon::PronLexicon;

pub const DEFAULT_LAMBDA: f64 = 12.0;
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-3;

/// Settings shared by the batch commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Language model weight; `None` defers to the lattice header, then 12.
    pub lambda: Option<f64>,
    pub prune_threshold: f64,
    pub metric: MetricVariant,
    /// Candidates kept per slot in written networks; `None` keeps all.
    pub max_candidates: Option<usize>,
    pub seed: u64,
    /// Worker threads. Never serialized: outputs must not depend on it.
    #[serde(skip_serializing)]
    pub jobs: usize,
    /// Synthesize letter pronunciations for words missing from the lexicon.
    pub fallback_pronunciations: bool,
    /// Check the class order invariants after every merge.
    pub check_invariants: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: None,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            metric: MetricVariant::Default,
            max_candidates: None,
            seed: 0,
            jobs: 1,
            fallback_pronunciations: false,
            check_invariants: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidLambda(l));
            }
        }
        if !(0.0..=1.0).contains(&self.prune_threshold) {
            return Err(Error::InvalidParameter(format!(
                "prune threshold {} outside [0, 1]",
                self.prune_threshold
            )));
        }
        if self.max_candidates == Some(0) {
            return Err(Error::InvalidParameter("max_candidates must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// The weight used for a lattice: configured value, else its header,
    /// else the default.
    pub fn lambda_for(&self, lat: &Lattice) -> f64 {
        self.lambda.or(lat.lm_scale()).unwrap_or(DEFAULT_LAMBDA)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub lambda: f64,
    /// Pruned lattice with recomputed posteriors.
    pub lattice: Lattice,
    pub cn: ConfusionNetwork,
    pub consensus: Consensus,
    pub map_words: Vec<String>,
    /// MAP path as slot tokens of `cn`.
    pub map_path: Vec<String>,
    pub map_expected_error: f64,
    pub links_before: usize,
    /// Words given letter pronunciations because the lexicon lacked them.
    pub synthesized: Vec<String>,
}

impl Decoded {
    /// The network as written out, pruned to `max_candidates` if set.
    pub fn output_cn(&self, cfg: &RunConfig) -> Result<ConfusionNetwork> {
        match cfg.max_candidates {
            Some(k) => prune_confusion_network(&self.cn, k, 0.0),
            None => Ok(self.cn.clone()),
        }
    }
}

pub fn decode_lattice(lat: &Lattice, lex: &PronLexicon, cfg: &RunConfig) -> Result<Decoded> {
    let (lex, synthesized) = lex.covering(lat.vocabulary(), cfg.fallback_pronunciations)?;
    decode_with_threshold(lat, &lex, cfg, cfg.prune_threshold).map(|mut d| {
        d.synthesized = synthesized;
        d
    })
}

/// Same as `decode_lattice` with an explicit pruning threshold; `lex` must
/// already cover the lattice.
pub fn decode_with_threshold(lat: &Lattice, lex: &PronLexicon, cfg: &RunConfig, threshold: f64) -> Result<Decoded> {
    let lambda = cfg.lambda_for(lat);
    let post = compute_link_posteriors(lat, lambda, lex)?;
    let map_ids = post.best_path()?;
    let map_words = post.path_words(&map_ids)?;
    let pruned = prune_links(&post, threshold)?;
    let opts = AlignOptions {
        variant: cfg.metric,
        check_invariants: cfg.check_invariants,
    };
    let (_, cn) = align_lattice(&pruned, lex, &opts)?;
    let consensus = consensus_hypothesis(&cn);
    let map_path = lattice_path_to_cn_path(&cn, &map_ids)?;
    let map_expected_error = expected_path_error(&cn, &map_path)?;
    Ok(Decoded {
        lambda,
        links_before: lat.links().len(),
        lattice: pruned,
        cn,
        consensus,
        map_words,
        map_path,
        map_expected_error,
        synthesized: Vec::new(),
    })
}
