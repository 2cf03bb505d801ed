//! Python bindings: lattices, posteriors, confusion networks and consensus
//! decoding, N-best center hypotheses and the synthetic corpus generator.

use std::fs;

use lattice_consensus::apps::{cn_accuracy, prune_confusion_network};
use lattice_consensus::decode::{
    center_hypothesis, consensus_hypothesis, expected_path_error, mwe, nbest_posteriors, Hypothesis, NBestList,
};
use lattice_consensus::edit::word_error as edit_word_error;
use lattice_consensus::lattice::{compute_link_posteriors, map_hypothesis, oracle_wer, parse_lattice, write_lattice};
use lattice_consensus::pipeline::{decode_lattice, RunConfig, DEFAULT_LAMBDA, DEFAULT_PRUNE_THRESHOLD};
use lattice_consensus::synth::{generate_corpus as synth_corpus, SyntheticSpec};
use num_bigint::BigUint;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: lattice_consensus::Error) -> PyErr {
    if e.is_internal() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn read(path: &str) -> PyResult<String> {
    fs::read_to_string(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))
}

#[pyclass(name = "PronLexicon", module = "latcons")]
struct PyLexicon {
    inner: lattice_consensus::PronLexicon,
}

#[pymethods]
impl PyLexicon {
    /// Parses `WORD phone phone ...` lines; empty text gives an empty lexicon.
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: lattice_consensus::PronLexicon::parse(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Self::new(&read(path)?)
    }

    fn add(&mut self, word: &str, phones: Vec<String>) -> PyResult<()> {
        self.inner.add(word, &phones).map_err(err)
    }

    fn words(&self) -> Vec<String> {
        self.inner.words().map(String::from).collect()
    }

    fn pronunciations(&self, word: &str) -> PyResult<Vec<Vec<String>>> {
        Ok(self.inner.variants(word).map_err(err)?.to_vec())
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.words().count()
    }
}

#[pyclass(name = "Lattice", module = "latcons", frozen)]
struct PyLattice {
    inner: lattice_consensus::Lattice,
}

#[pymethods]
impl PyLattice {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyLattice {
            inner: parse_lattice(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Self::parse(&read(path)?)
    }

    #[getter]
    fn utterance_id(&self) -> &str {
        self.inner.utterance_id()
    }

    #[getter]
    fn lm_scale(&self) -> Option<f64> {
        self.inner.lm_scale()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.nodes().len()
    }

    #[getter]
    fn num_links(&self) -> usize {
        self.inner.links().len()
    }

    /// `(id, start_node, end_node, word, ac_logscore, lm_logscore)` per link.
    fn links(&self) -> Vec<(u32, u32, u32, String, f64, f64)> {
        self.inner
            .links()
            .iter()
            .map(|l| (l.id, l.inode, l.fnode, l.word.clone(), l.ac_logscore, l.lm_logscore))
            .collect()
    }

    fn count_paths(&self) -> BigUint {
        self.inner.count_paths()
    }

    fn to_text(&self) -> String {
        write_lattice(&self.inner)
    }

    /// `(link_id, word, posterior)` per link under language model weight `lam`.
    #[pyo3(signature = (lexicon, lam = DEFAULT_LAMBDA))]
    fn posteriors(&self, lexicon: &PyLexicon, lam: f64) -> PyResult<Vec<(u32, String, f64)>> {
        let post = compute_link_posteriors(&self.inner, lam, &lexicon.inner).map_err(err)?;
        Ok(post.links().iter().map(|l| (l.id, l.word.clone(), l.posterior)).collect())
    }

    #[pyo3(signature = (lexicon, lam = DEFAULT_LAMBDA))]
    fn map_hypothesis(&self, lexicon: &PyLexicon, lam: f64) -> PyResult<Vec<String>> {
        map_hypothesis(&self.inner, lam, &lexicon.inner).map_err(err)
    }

    /// `(errors, words)` of the path closest to `reference`.
    fn oracle(&self, reference: Vec<String>) -> (usize, Vec<String>) {
        let o = oracle_wer(&self.inner, &reference);
        (o.errors, o.words)
    }

    fn __repr__(&self) -> String {
        format!(
            "Lattice({:?}, nodes={}, links={})",
            self.inner.utterance_id(),
            self.inner.nodes().len(),
            self.inner.links().len()
        )
    }
}

#[pyclass(name = "ConfusionNetwork", module = "latcons", frozen)]
struct PyNetwork {
    inner: lattice_consensus::ConfusionNetwork,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: lattice_consensus::ConfusionNetwork::parse(text).map_err(err)?,
        })
    }

    #[getter]
    fn utterance_id(&self) -> &str {
        &self.inner.utterance_id
    }

    /// Per slot, `(token, posterior)` in rank order; `-` is the deletion.
    fn slots(&self) -> Vec<Vec<(String, f64)>> {
        self.inner.slots().iter().map(|s| s.entries().to_vec()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn count_paths(&self) -> BigUint {
        self.inner.count_paths()
    }

    /// `(words, expected_error)` of the best token in every slot.
    fn consensus(&self) -> (Vec<String>, f64) {
        let c = consensus_hypothesis(&self.inner);
        (c.words, c.expected_error)
    }

    fn expected_error(&self, path: Vec<String>) -> PyResult<f64> {
        expected_path_error(&self.inner, &path).map_err(err)
    }

    fn mwe(&self, first: Vec<String>, second: Vec<String>) -> PyResult<usize> {
        mwe(&self.inner, &first, &second).map_err(err)
    }

    #[pyo3(signature = (max_candidates = usize::MAX, min_posterior = 0.0))]
    fn prune(&self, max_candidates: usize, min_posterior: f64) -> PyResult<PyNetwork> {
        Ok(PyNetwork {
            inner: prune_confusion_network(&self.inner, max_candidates, min_posterior).map_err(err)?,
        })
    }

    /// Best network path against `reference`: errors, per-slot tokens and
    /// the reference word aligned to each slot.
    fn accuracy<'py>(&self, py: Python<'py>, reference: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
        let a = cn_accuracy(&self.inner, &reference);
        let d = PyDict::new(py);
        d.set_item("errors", a.errors)?;
        d.set_item("path", a.path)?;
        d.set_item("slot_reference", a.slot_reference)?;
        d.set_item("deleted", a.deleted)?;
        Ok(d)
    }
}

#[pyclass(name = "Decoded", module = "latcons", frozen)]
struct PyDecoded {
    #[pyo3(get)]
    lam: f64,
    #[pyo3(get)]
    words: Vec<String>,
    #[pyo3(get)]
    expected_error: f64,
    #[pyo3(get)]
    map_words: Vec<String>,
    #[pyo3(get)]
    map_expected_error: f64,
    #[pyo3(get)]
    links_before: usize,
    #[pyo3(get)]
    links_after: usize,
    cn: Py<PyNetwork>,
}

#[pymethods]
impl PyDecoded {
    #[getter]
    fn cn(&self, py: Python<'_>) -> Py<PyNetwork> {
        self.cn.clone_ref(py)
    }
}

/// Posteriors, pruning, clustering and consensus in one call.
#[pyfunction]
#[pyo3(signature = (lattice, lexicon, lam = None, prune_threshold = DEFAULT_PRUNE_THRESHOLD, metric = "default", fallback_pron = false))]
fn decode(
    py: Python<'_>,
    lattice: &PyLattice,
    lexicon: &PyLexicon,
    lam: Option<f64>,
    prune_threshold: f64,
    metric: &str,
    fallback_pron: bool,
) -> PyResult<PyDecoded> {
    let cfg = RunConfig {
        lambda: lam,
        prune_threshold,
        metric: metric.parse().map_err(err)?,
        fallback_pronunciations: fallback_pron,
        ..Default::default()
    };
    cfg.validate().map_err(err)?;
    let d = py.detach(|| decode_lattice(&lattice.inner, &lexicon.inner, &cfg)).map_err(err)?;
    Ok(PyDecoded {
        lam: d.lambda,
        words: d.consensus.words,
        expected_error: d.consensus.expected_error,
        map_words: d.map_words,
        map_expected_error: d.map_expected_error,
        links_before: d.links_before,
        links_after: d.lattice.links().len(),
        cn: Py::new(py, PyNetwork { inner: d.cn })?,
    })
}

/// `(words, ac_logscore, lm_logscore, pron_logscore)`.
type RawHypothesis = (Vec<String>, f64, f64, f64);

fn nbest_from(utterance_id: &str, hyps: Vec<RawHypothesis>) -> NBestList {
    NBestList::new(
        utterance_id,
        hyps.into_iter()
            .map(|(words, ac, lm, pron)| Hypothesis {
                words,
                ac_logscore: ac,
                lm_logscore: lm,
                pron_logscore: pron,
            })
            .collect(),
    )
}

/// Hypothesis with least expected word error against the rest of the list.
/// `hypotheses` holds `(words, ac_logscore, lm_logscore, pron_logscore)`.
#[pyfunction]
#[pyo3(signature = (hypotheses, lam = DEFAULT_LAMBDA, utterance_id = "nbest"))]
fn nbest_center<'py>(
    py: Python<'py>,
    hypotheses: Vec<RawHypothesis>,
    lam: f64,
    utterance_id: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let nb = nbest_posteriors(&nbest_from(utterance_id, hypotheses), lam).map_err(err)?;
    let c = center_hypothesis(&nb).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("index", c.index)?;
    d.set_item("words", c.words)?;
    d.set_item("expected_error", c.expected_error)?;
    d.set_item("inner_iterations", c.inner_iterations)?;
    d.set_item("posteriors", nb.posteriors)?;
    Ok(d)
}

/// Parses N-best text into `(utterance_id, hypotheses)`.
#[pyfunction]
fn parse_nbest(text: &str) -> PyResult<(String, Vec<RawHypothesis>)> {
    let nb = NBestList::parse(text).map_err(err)?;
    let hyps = nb
        .hypotheses
        .into_iter()
        .map(|h| (h.words, h.ac_logscore, h.lm_logscore, h.pron_logscore))
        .collect();
    Ok((nb.utterance_id, hyps))
}

#[pyfunction]
fn word_error<'py>(py: Python<'py>, hyp: Vec<String>, reference: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let e = edit_word_error(&hyp, &reference);
    let d = PyDict::new(py);
    d.set_item("errors", e.errors)?;
    d.set_item("substitutions", e.subs)?;
    d.set_item("deletions", e.dels)?;
    d.set_item("insertions", e.ins)?;
    Ok(d)
}

type Utterance = (Py<PyLattice>, Vec<String>);

/// Seeded synthetic corpus: `(lexicon, [(lattice, reference_words), ...])`.
#[pyfunction]
#[pyo3(signature = (utterances = 10, seed = 0))]
fn generate_corpus(
    py: Python<'_>,
    utterances: usize,
    seed: u64,
) -> PyResult<(PyLexicon, Vec<Utterance>)> {
    let spec = SyntheticSpec {
        utterance_count: utterances,
        ..Default::default()
    };
    let corpus = synth_corpus(&spec, seed).map_err(err)?;
    let utts = corpus
        .utterances
        .into_iter()
        .map(|u| Ok((Py::new(py, PyLattice { inner: u.lattice })?, u.reference)))
        .collect::<PyResult<_>>()?;
    Ok((PyLexicon { inner: corpus.lexicon }, utts))
}

#[pymodule]
fn latcons(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyDecoded>()?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(nbest_center, m)?)?;
    m.add_function(wrap_pyfunction!(parse_nbest, m)?)?;
    m.add_function(wrap_pyfunction!(word_error, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add("DEFAULT_LAMBDA", DEFAULT_LAMBDA)?;
    m.add("DEFAULT_PRUNE_THRESHOLD", DEFAULT_PRUNE_THRESHOLD)?;
    Ok(())
}
