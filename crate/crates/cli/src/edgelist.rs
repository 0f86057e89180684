//! `child<TAB>parent` edge lists.
//!
//! One edge per line. A line with a single field declares an isolated node.
//! Lines whose first non-blank character is `#` and blank lines are skipped.
//! Surrounding whitespace is trimmed from each field.

use std::fmt::Write as _;
use std::path::Path;

use subspace_core::taxonomy::{Taxonomy, TaxonomyBuilder};
use subspace_core::Error as CoreError;

use crate::error::{CliError, Result};

pub fn parse_edges(text: &str, path: &Path) -> Result<Taxonomy> {
    let err = |line: usize, message: String| CliError::EdgeList {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut b = TaxonomyBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        match fields.as_slice() {
            [node] => {
                b.add_node(node);
            }
            [child, parent] => {
                if child.is_empty() || parent.is_empty() {
                    return Err(err(i + 1, "empty node name".into()));
                }
                if child == parent {
                    return Err(err(i + 1, format!("self loop on '{child}'")));
                }
                b.add_edge(child, parent);
            }
            _ => {
                return Err(err(
                    i + 1,
                    format!("expected 'child<TAB>parent', found {} fields", fields.len()),
                ))
            }
        }
    }
    b.build().map_err(|e| match e {
        CoreError::Cycle(names) => CliError::format(path, format!("cycle: {}", names.join(" -> "))),
        other => other.into(),
    })
}

/// Reads an edge list. A missing file is a usage error.
pub fn load_edges(path: &Path) -> Result<Taxonomy> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Usage(format!("dataset {} does not exist", path.display()))
        } else {
            CliError::io(path, e)
        }
    })?;
    parse_edges(&text, path)
}

/// Serializes basic edges, then any isolated nodes, with an optional comment header.
pub fn format_edges(t: &Taxonomy, header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for &(c, p) in t.basic_edges() {
        let _ = writeln!(out, "{}\t{}", t.name(c), t.name(p));
    }
    for v in 0..t.node_count() {
        if t.parents(v).is_empty() && t.children(v).is_empty() {
            let _ = writeln!(out, "{}", t.name(v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Taxonomy> {
        parse_edges(text, Path::new("test.tsv"))
    }

    #[test]
    fn two_edges_three_nodes() {
        let t = parse("a\tb\nb\tc\n").unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.basic_edges().len(), 2);
        assert_eq!(t.closure_edges().len(), 3);
    }

    #[test]
    fn duplicates_comments_and_blanks() {
        let t = parse("# header\n\na\tb\n  \na\tb\n   # indented comment\n").unwrap();
        assert_eq!(t.basic_edges().len(), 1);
    }

    #[test]
    fn isolated_nodes_and_crlf() {
        let t = parse("a\tb\r\nlonely\r\n").unwrap();
        assert_eq!(t.node_count(), 3);
        assert!(t.id("lonely").is_some());
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse("a\tb\n# c\nx\ty\tz\n") {
            Err(CliError::EdgeList { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("a\t\n"),
            Err(CliError::EdgeList { line: 1, .. })
        ));
        assert!(matches!(
            parse("a\ta\n"),
            Err(CliError::EdgeList { line: 1, .. })
        ));
    }

    #[test]
    fn cycles_are_named() {
        let e = parse("a\tb\nb\ta\n").unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("cycle") && msg.contains('a') && msg.contains('b'),
            "{msg}"
        );
    }

    #[test]
    fn format_round_trips() {
        let t = parse("a\tb\nb\tc\nz\n").unwrap();
        let text = format_edges(&t, "fixture\nsecond line");
        assert!(text.starts_with("# fixture\n# second line\n"));
        let back = parse(&text).unwrap();
        assert_eq!(back.basic_edges().len(), 2);
        assert_eq!(back.node_count(), 4);
        for &(c, p) in t.basic_edges() {
            let (c2, p2) = (back.id(t.name(c)).unwrap(), back.id(t.name(p)).unwrap());
            assert!(back.basic_edges().contains(&(c2, p2)));
        }
    }
}
