use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lattice_consensus::synth::parse_transcripts;
use lattice_consensus::PronLexicon;
use rayon::prelude::*;

/// Expands directories into their files with one of `exts`, sorted by name.
pub fn expand(paths: &[PathBuf], exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|f| f.is_file() && f.extension().is_some_and(|e| exts.iter().any(|x| e == *x)));
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no input files");
    }
    Ok(out)
}

/// Reads and parses every file in parallel. Parse failures are returned per
/// file; successes are keyed and ordered by `key`, normally the utterance id.
pub fn load<T: Send>(
    pool: &rayon::ThreadPool,
    files: &[PathBuf],
    parse: impl Fn(&str) -> lattice_consensus::Result<T> + Sync,
    key: impl Fn(&T) -> String,
) -> Result<(BTreeMap<String, T>, Vec<anyhow::Error>)> {
    let parsed: Vec<Result<T>> = pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
                parse(&text).with_context(|| format!("{}", f.display()))
            })
            .collect()
    });
    let mut items = BTreeMap::new();
    let mut failures = Vec::new();
    for (f, r) in files.iter().zip(parsed) {
        match r {
            Ok(item) => {
                let key = key(&item);
                if items.insert(key.clone(), item).is_some() {
                    bail!("{}: duplicate utterance id {key:?}", f.display());
                }
            }
            Err(e) => failures.push(e),
        }
    }
    Ok((items, failures))
}

pub fn read_lexicon(path: Option<&Path>, fallback: bool) -> Result<PronLexicon> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            PronLexicon::parse(&text).with_context(|| format!("{}", p.display()))
        }
        None if fallback => Ok(PronLexicon::new()),
        None => bail!("--lexicon is required unless --fallback-pron is set"),
    }
}

pub fn read_transcripts(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_transcripts(&text).with_context(|| format!("{}", path.display()))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// File-system-safe rendering of an utterance id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}
