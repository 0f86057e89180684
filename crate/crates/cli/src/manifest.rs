//! Plain-text split manifests.
//!
//! ```text
//! # subspace split manifest
//! mode	linkpred
//! seed	3
//! coverage	0.25
//! val_frac	0.05
//! test_frac	0.05
//! train_equals_basic	false
//! [train]	61
//! child	parent
//! ...
//! [val]	5
//! ...
//! [test]	5
//! ...
//! ```
//!
//! Edges are written by node name. For reconstruction runs the train section
//! holds the full closure and the other two sections are empty.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use subspace_core::taxonomy::{Edge, LinkPredSplit, Taxonomy};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub mode: String,
    pub seed: u64,
    pub coverage: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub train_equals_basic: bool,
    pub train: Vec<(String, String)>,
    pub val: Vec<(String, String)>,
    pub test: Vec<(String, String)>,
}

fn named(t: &Taxonomy, edges: &[Edge]) -> Vec<(String, String)> {
    edges
        .iter()
        .map(|&(c, p)| (t.name(c).to_owned(), t.name(p).to_owned()))
        .collect()
}

impl Manifest {
    pub fn linkpred(t: &Taxonomy, split: &LinkPredSplit, seed: u64) -> Self {
        let train: BTreeSet<Edge> = split.train.iter().copied().collect();
        Self {
            mode: "linkpred".into(),
            seed,
            coverage: split.coverage,
            val_frac: split.val_frac,
            test_frac: split.test_frac,
            train_equals_basic: &train == t.basic_edges(),
            train: named(t, &split.train),
            val: named(t, &split.val),
            test: named(t, &split.test),
        }
    }

    pub fn reconstruction(t: &Taxonomy, seed: u64) -> Self {
        let closure: Vec<Edge> = t.closure_edges().iter().copied().collect();
        Self {
            mode: "recon".into(),
            seed,
            coverage: 1.0,
            val_frac: 0.0,
            test_frac: 0.0,
            train_equals_basic: t.closure_edges() == t.basic_edges(),
            train: named(t, &closure),
            val: Vec::new(),
            test: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# subspace split manifest\n");
        let _ = writeln!(s, "mode\t{}", self.mode);
        let _ = writeln!(s, "seed\t{}", self.seed);
        let _ = writeln!(s, "coverage\t{}", self.coverage);
        let _ = writeln!(s, "val_frac\t{}", self.val_frac);
        let _ = writeln!(s, "test_frac\t{}", self.test_frac);
        let _ = writeln!(s, "train_equals_basic\t{}", self.train_equals_basic);
        for (name, edges) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            let _ = writeln!(s, "[{name}]\t{}", edges.len());
            for (c, p) in edges {
                let _ = writeln!(s, "{c}\t{p}");
            }
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, msg: &str| CliError::format(path, format!("line {line}: {msg}"));
        let mut m = Manifest {
            mode: String::new(),
            seed: 0,
            coverage: 0.0,
            val_frac: 0.0,
            test_frac: 0.0,
            train_equals_basic: false,
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        let mut section: Option<(&str, usize)> = None;
        let mut seen_keys = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let no = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| bad(no, "expected two tab-separated fields"))?;
            if let Some(name) = key.strip_prefix('[').and_then(|k| k.strip_suffix(']')) {
                let count: usize = value.parse().map_err(|_| bad(no, "bad section size"))?;
                let name = match name {
                    "train" => "train",
                    "val" => "val",
                    "test" => "test",
                    _ => return Err(bad(no, "unknown section")),
                };
                section = Some((name, count));
                continue;
            }
            if let Some((name, _)) = section {
                let edge = (key.to_owned(), value.to_owned());
                match name {
                    "train" => m.train.push(edge),
                    "val" => m.val.push(edge),
                    _ => m.test.push(edge),
                }
                continue;
            }
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(no, "expected a number"));
            match key {
                "mode" => m.mode = value.to_owned(),
                "seed" => m.seed = value.parse().map_err(|_| bad(no, "bad seed"))?,
                "coverage" => m.coverage = num(value)?,
                "val_frac" => m.val_frac = num(value)?,
                "test_frac" => m.test_frac = num(value)?,
                "train_equals_basic" => {
                    m.train_equals_basic = value
                        .parse()
                        .map_err(|_| bad(no, "expected true or false"))?
                }
                _ => return Err(bad(no, "unknown key")),
            }
            seen_keys.insert(key.to_owned());
        }
        if seen_keys.len() != 6 {
            return Err(CliError::format(path, "manifest header is incomplete"));
        }
        Ok(m)
    }

    /// Resolves the edge names against `t`.
    pub fn to_split(&self, t: &Taxonomy, path: &Path) -> Result<LinkPredSplit> {
        let ids = |edges: &[(String, String)]| -> Result<Vec<Edge>> {
            edges
                .iter()
                .map(|(c, p)| match (t.id(c), t.id(p)) {
                    (Some(c), Some(p)) => Ok((c, p)),
                    _ => Err(CliError::format(
                        path,
                        format!("edge {c} -> {p} is not in the dataset"),
                    )),
                })
                .collect()
        };
        Ok(LinkPredSplit {
            train: ids(&self.train)?,
            val: ids(&self.val)?,
            test: ids(&self.test)?,
            coverage: self.coverage,
            val_frac: self.val_frac,
            test_frac: self.test_frac,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use subspace_core::taxonomy::{make_linkpred_split, worked_example};
    use subspace_core::training::stream_rng;

    #[test]
    fn render_parse_round_trip() {
        let t = worked_example();
        let split = make_linkpred_split(&t, 0.5, 0.2, 0.2, &mut stream_rng(1, 3)).unwrap();
        let m = Manifest::linkpred(&t, &split, 1);
        let p = Path::new("m");
        let back = Manifest::parse(&m.render(), p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_split(&t, p).unwrap(), split);
    }

    #[test]
    fn coverage_zero_flags_basic_train() {
        let t = worked_example();
        let split = make_linkpred_split(&t, 0.0, 0.2, 0.2, &mut stream_rng(1, 3)).unwrap();
        let m = Manifest::linkpred(&t, &split, 1);
        assert!(m.train_equals_basic);
        assert!(m.render().contains("train_equals_basic\ttrue\n"));
    }

    #[test]
    fn reconstruction_lists_the_closure() {
        let t = worked_example();
        let m = Manifest::reconstruction(&t, 0);
        assert_eq!(m.train.len(), t.closure_edges().len());
        assert!(!m.train_equals_basic);
    }

    #[test]
    fn rejects_garbage() {
        let p = Path::new("m");
        assert!(Manifest::parse("mode\tlinkpred\n", p).is_err());
        assert!(Manifest::parse("mode linkpred\n", p).is_err());
        assert!(Manifest::parse("bogus\t1\n", p).is_err());
    }
}
