//! Plain-text lattice files.
//!
//! ```text
//! UTT=sw_001
//! N=3 L=2 lmscale=12
//! I=0 t=0.00
//! I=1 t=0.31
//! I=2 t=0.70
//! J=0 S=0 E=1 W=HI a=-120.5 l=-3.2 v=0
//! J=1 S=1 E=2 W=THERE a=-98.0 l=-1.7 v=0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{Lattice, Link, Node, NodeId};
use crate::error::{Error, Result};

fn field<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("bad value {value:?} for {key}")))
}

pub fn parse_lattice(text: &str) -> Result<Lattice> {
    let mut utt: Option<String> = None;
    let mut declared_nodes: Option<usize> = None;
    let mut declared_links: Option<usize> = None;
    let mut lm_scale = None;
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut node_line: HashMap<NodeId, usize> = HashMap::new();
    let mut link_line: HashMap<u32, usize> = HashMap::new();
    let mut last_line = 0;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        last_line = line;
        let mut pairs = Vec::new();
        for tok in content.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, found {tok:?}")))?;
            pairs.push((k, v));
        }
        match pairs[0].0 {
            "I" => {
                let mut id = None;
                let mut time = None;
                for &(k, v) in &pairs {
                    match k {
                        "I" => id = Some(field::<u32>(line, k, v)?),
                        "t" => time = Some(field::<f64>(line, k, v)?),
                        _ => return Err(Error::parse(line, format!("unknown node field {k:?}"))),
                    }
                }
                let id = id.expect("first key is I");
                let time = time.ok_or_else(|| Error::parse(line, "node line without t="))?;
                if node_line.insert(id, line).is_some() {
                    return Err(Error::parse(line, format!("duplicate node id {id}")));
                }
                nodes.push(Node { id, time });
            }
            "J" => {
                let (mut id, mut start, mut end, mut word) = (None, None, None, None);
                let (mut ac, mut lm, mut variant) = (0.0f64, 0.0f64, 0u32);
                for &(k, v) in &pairs {
                    match k {
                        "J" => id = Some(field::<u32>(line, k, v)?),
                        "S" => start = Some(field::<u32>(line, k, v)?),
                        "E" => end = Some(field::<u32>(line, k, v)?),
                        "W" => word = Some(v.to_string()),
                        "a" => ac = field(line, k, v)?,
                        "l" => lm = field(line, k, v)?,
                        "v" => variant = field(line, k, v)?,
                        _ => return Err(Error::parse(line, format!("unknown link field {k:?}"))),
                    }
                }
                let id = id.expect("first key is J");
                let missing = |name: &str| Error::parse(line, format!("link line without {name}="));
                let start = start.ok_or_else(|| missing("S"))?;
                let end = end.ok_or_else(|| missing("E"))?;
                let word = word.ok_or_else(|| missing("W"))?;
                if !ac.is_finite() || !lm.is_finite() {
                    return Err(Error::parse(line, "non-finite score"));
                }
                if link_line.insert(id, line).is_some() {
                    return Err(Error::parse(line, format!("duplicate link id {id}")));
                }
                links.push(Link::new(id, start, end, word, ac, lm).with_variant(variant));
            }
            _ => {
                for &(k, v) in &pairs {
                    match k {
                        "UTT" => utt = Some(v.to_string()),
                        "N" => declared_nodes = Some(field(line, k, v)?),
                        "L" => declared_links = Some(field(line, k, v)?),
                        "lmscale" => {
                            let s: f64 = field(line, k, v)?;
                            if !(s > 0.0 && s.is_finite()) {
                                return Err(Error::parse(line, "lmscale must be positive"));
                            }
                            lm_scale = Some(s);
                        }
                        _ => return Err(Error::parse(line, format!("unknown header field {k:?}"))),
                    }
                }
            }
        }
    }

    let utt = utt.ok_or_else(|| Error::parse(1, "missing UTT= header"))?;
    if let Some(d) = declared_nodes {
        if d != nodes.len() {
            return Err(Error::CountMismatch {
                kind: "node",
                declared: d,
                found: nodes.len(),
            });
        }
    }
    if let Some(d) = declared_links {
        if d != links.len() {
            return Err(Error::CountMismatch {
                kind: "link",
                declared: d,
                found: links.len(),
            });
        }
    }
    for l in &links {
        for node in [l.inode, l.fnode] {
            if !node_line.contains_key(&node) {
                return Err(Error::parse(
                    link_line[&l.id],
                    format!("link {} references unknown node {node}", l.id),
                ));
            }
        }
    }

    Lattice::new(utt, nodes, links, lm_scale).map_err(|e| {
        let line = match &e {
            Error::Cycle(node) => node_line[node],
            Error::TimeOrder { link, .. } => link_line[link],
            Error::InvalidWord(w) => links_line_for_word(text, w).unwrap_or(last_line),
            Error::Endpoints { found, .. } => found.first().and_then(|n| node_line.get(n)).copied().unwrap_or(last_line),
            _ => last_line,
        };
        Error::parse(line, e.to_string())
    })
}

fn links_line_for_word(text: &str, word: &str) -> Option<usize> {
    let needle = format!("W={word}");
    text.lines()
        .position(|l| l.starts_with("J=") && l.split_whitespace().any(|t| t == needle))
        .map(|p| p + 1)
}

pub fn write_lattice(lat: &Lattice) -> String {
    let mut out = String::new();
    writeln!(out, "UTT={}", lat.utterance_id()).unwrap();
    write!(out, "N={} L={}", lat.nodes().len(), lat.links().len()).unwrap();
    if let Some(s) = lat.lm_scale() {
        write!(out, " lmscale={s}").unwrap();
    }
    out.push('\n');
    for n in lat.nodes() {
        writeln!(out, "I={} t={}", n.id, n.time).unwrap();
    }
    for l in lat.links() {
        writeln!(
            out,
            "J={} S={} E={} W={} a={} l={} v={}",
            l.id, l.inode, l.fnode, l.word, l.ac_logscore, l.lm_logscore, l.pron_variant
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let lat = parse_lattice("UTT=u1\nN=2 L=1\nI=0 t=0\nI=1 t=0.5\nJ=0 S=0 E=1 W=HI a=-1 l=-2\n").unwrap();
        assert_eq!(lat.links().len(), 1);
        assert_ne!(lat.initial_node(), lat.final_node());
        assert_eq!(lat.links()[0].word, "HI");
        assert_eq!(lat.links()[0].ac_logscore, -1.0);
    }

    #[test]
    fn cycle_names_node_and_line() {
        let text = "UTT=c\nI=0 t=0\nI=1 t=0\nI=2 t=0\nI=3 t=0\n\
                    J=0 S=0 E=1 W=A\nJ=1 S=1 E=2 W=B\nJ=2 S=2 E=1 W=C\nJ=3 S=2 E=3 W=D\n";
        let err = parse_lattice(text).unwrap_err();
        let Error::Parse { line, msg } = err else { panic!() };
        assert!(msg.contains("cycle detected through node"), "{msg}");
        assert!(line == 3 || line == 4);
    }

    #[test]
    fn malformed_lines() {
        let cases = [
            ("UTT=x\nI=0 t=zero\n", 2),
            ("UTT=x\nI=0\n", 2),
            ("UTT=x\nI=0 t=0\nI=0 t=1\n", 3),
            ("UTT=x\nI=0 t=0\nI=1 t=1\nJ=0 S=0 E=7 W=A\n", 4),
            ("UTT=x\nI=0 t=0\nI=1 t=1\nJ=0 S=0 E=1 W=A\nJ=0 S=0 E=1 W=B\n", 5),
            ("UTT=x\nbogus\n", 2),
            ("UTT=x\nI=0 t=0\nI=1 t=1\nJ=0 S=0 E=1 W=-\n", 4),
        ];
        for (text, want) in cases {
            match parse_lattice(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn header_counts_checked() {
        let err = parse_lattice("UTT=x\nN=3\nI=0 t=0\nI=1 t=1\nJ=0 S=0 E=1 W=A\n").unwrap_err();
        assert!(matches!(err, Error::CountMismatch { kind: "node", .. }));
    }

    #[test]
    fn write_then_parse() {
        let text = "UTT=u\nN=3 L=3 lmscale=12\nI=0 t=0\nI=1 t=0.25\nI=2 t=1\n\
                    J=0 S=0 E=1 W=A a=-1.5 l=-0.1 v=1\nJ=1 S=1 E=2 W=B a=-2 l=-0.2 v=0\nJ=2 S=0 E=2 W=C a=-7 l=-3 v=0\n";
        let lat = parse_lattice(text).unwrap();
        assert_eq!(write_lattice(&lat), text);
        assert_eq!(parse_lattice(&write_lattice(&lat)).unwrap(), lat);
    }
}
