//! N-best lists and the center hypothesis.
//!
//! File format, one hypothesis per line after the header:
//!
//! ```text
//! UTT=<id>
//! ac=-1203.5 lm=-12.1 pron=0 :: I DO INSIDE
//! ```

use std::fmt::Write as _;

use super::consensus::{express_in_cn, expected_path_error};
use crate::cn::ConfusionNetwork;
use crate::edit::edit_distance;
use crate::error::{Error, Result};
use crate::logmath::log_sum_exp;

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub words: Vec<String>,
    pub ac_logscore: f64,
    pub lm_logscore: f64,
    pub pron_logscore: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NBestList {
    pub utterance_id: String,
    pub hypotheses: Vec<Hypothesis>,
    /// Normalized `P(W|A)` per hypothesis; empty until computed.
    pub posteriors: Vec<f64>,
}

impl NBestList {
    pub fn new(utterance_id: impl Into<String>, hypotheses: Vec<Hypothesis>) -> Self {
        NBestList {
            utterance_id: utterance_id.into(),
            hypotheses,
            posteriors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut utt = None;
        let mut hyps = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(id) = content.strip_prefix("UTT=") {
                utt = Some(id.trim().to_string());
                continue;
            }
            let (scores, words) = content
                .split_once("::")
                .ok_or_else(|| Error::parse(line, "expected `ac=.. lm=.. pron=.. :: words`"))?;
            let (mut ac, mut lm, mut pron) = (None, None, 0.0f64);
            for tok in scores.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| Error::parse(line, format!("expected key=value, found {tok:?}")))?;
                let val: f64 = v
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad value {v:?} for {k}")))?;
                if !val.is_finite() {
                    return Err(Error::parse(line, format!("non-finite {k}")));
                }
                match k {
                    "ac" => ac = Some(val),
                    "lm" => lm = Some(val),
                    "pron" => pron = val,
                    _ => return Err(Error::parse(line, format!("unknown field {k:?}"))),
                }
            }
            hyps.push(Hypothesis {
                words: words.split_whitespace().map(str::to_string).collect(),
                ac_logscore: ac.ok_or_else(|| Error::parse(line, "missing ac="))?,
                lm_logscore: lm.ok_or_else(|| Error::parse(line, "missing lm="))?,
                pron_logscore: pron,
            });
        }
        let utt = utt.ok_or_else(|| Error::parse(1, "missing UTT= header"))?;
        if hyps.is_empty() {
            return Err(Error::EmptyNBest);
        }
        Ok(NBestList::new(utt, hyps))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("UTT={}\n", self.utterance_id);
        for h in &self.hypotheses {
            write!(out, "ac={} lm={} pron={} ::", h.ac_logscore, h.lm_logscore, h.pron_logscore).unwrap();
            for w in &h.words {
                write!(out, " {w}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    fn require_posteriors(&self) -> Result<()> {
        if self.hypotheses.is_empty() {
            return Err(Error::EmptyNBest);
        }
        if self.posteriors.len() != self.hypotheses.len() {
            return Err(Error::NoPosteriors);
        }
        Ok(())
    }
}

/// Normalizes `lm + pron + ac / lambda` over the list.
pub fn nbest_posteriors(nb: &NBestList, lambda: f64) -> Result<NBestList> {
    if nb.is_empty() {
        return Err(Error::EmptyNBest);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidLambda(lambda));
    }
    let scores: Vec<f64> = nb
        .hypotheses
        .iter()
        .map(|h| h.lm_logscore + h.pron_logscore + h.ac_logscore / lambda)
        .collect();
    let total = log_sum_exp(scores.iter().copied());
    let mut out = nb.clone();
    out.posteriors = scores.iter().map(|s| (s - total).exp()).collect();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CenterResult {
    pub index: usize,
    pub words: Vec<String>,
    pub expected_error: f64,
    /// Word-error evaluations performed, for measuring the early exit.
    pub inner_iterations: usize,
}

/// The hypothesis minimizing posterior-weighted word error against the
/// whole list. A candidate's accumulation stops as soon as it reaches the
/// best total so far; ties go to the lower index.
pub fn center_hypothesis(nb: &NBestList) -> Result<CenterResult> {
    nb.require_posteriors()?;
    let mut best: Option<usize> = None;
    let mut best_error = f64::INFINITY;
    let mut inner = 0;
    'candidates: for (i, cand) in nb.hypotheses.iter().enumerate() {
        let mut this_error = 0.0;
        for (k, other) in nb.hypotheses.iter().enumerate() {
            inner += 1;
            this_error += nb.posteriors[k] * edit_distance(&other.words, &cand.words) as f64;
            if this_error >= best_error {
                continue 'candidates;
            }
        }
        if this_error < best_error {
            best_error = this_error;
            best = Some(i);
        }
    }
    let index = best.expect("a finite error is always found for the first hypothesis");
    Ok(CenterResult {
        index,
        words: nb.hypotheses[index].words.clone(),
        expected_error: best_error,
        inner_iterations: inner,
    })
}

/// `sum_k P(R_k|A) WE(hyp, R_k)` over the list.
pub fn expected_word_error<S: AsRef<str>>(hyp: &[S], nb: &NBestList) -> Result<f64> {
    nb.require_posteriors()?;
    let hyp: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
    Ok(nb
        .hypotheses
        .iter()
        .zip(&nb.posteriors)
        .map(|(h, p)| p * edit_distance(&h.words, &hyp) as f64)
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NBestConsensus {
    pub index: usize,
    pub words: Vec<String>,
    pub expected_error: f64,
    /// Entries that could not be expressed as network paths.
    pub skipped: Vec<usize>,
}

/// The N-best entry whose network path has the lowest expected slot error.
pub fn nbest_consensus(cn: &ConfusionNetwork, nb: &NBestList) -> Result<NBestConsensus> {
    let mut best: Option<(usize, f64)> = None;
    let mut skipped = Vec::new();
    for (i, h) in nb.hypotheses.iter().enumerate() {
        let Some(path) = express_in_cn(cn, &h.words) else {
            skipped.push(i);
            continue;
        };
        let err = expected_path_error(cn, &path)?;
        if best.is_none_or(|(_, b)| err < b) {
            best = Some((i, err));
        }
    }
    let (index, expected_error) = best.ok_or(Error::NotExpressible)?;
    Ok(NBestConsensus {
        index,
        words: nb.hypotheses[index].words.clone(),
        expected_error,
        skipped,
    })
}
