//! Delimiter-separated report tables and the JSON-lines metrics log.

use std::fmt::Write as _;

use serde::Serialize;
use subspace_core::training::{MetricRecord, StopReason};

/// Tie handling note carried in every ranking report header.
pub const TIE_NOTE: &str = "ties: average rank (a tied negative counts 0.5)";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub notes: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            notes: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Notes as `#` lines, then the header and rows, tab separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = writeln!(out, "{}", self.header.join("\t"));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join("\t"));
        }
        out
    }

    /// Space-padded columns for the terminal.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_owned()
        };
        let mut out = String::new();
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = writeln!(out, "{}", line(&self.header));
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", line(&rule));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_else(|| "NA".into())
}

#[derive(Serialize)]
struct LogLine {
    epoch: usize,
    step: u64,
    loss: f64,
    lr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_rank: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    val_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_f1: Option<f64>,
}

/// One JSON object per line, without wall-clock fields so that the log is
/// reproducible byte for byte.
pub fn log_line(r: &MetricRecord) -> String {
    serde_json::to_string(&LogLine {
        epoch: r.epoch,
        step: r.step,
        loss: r.loss,
        lr: r.lr,
        map: r.map,
        mean_rank: r.mean_rank,
        rho: r.rho,
        threshold: r.threshold,
        val_f1: r.val_f1,
        test_f1: r.test_f1,
    })
    .expect("plain numbers serialize")
}

pub fn stop_line(stop: &StopReason, last_epoch: usize) -> String {
    let v = match *stop {
        StopReason::MaxEpochs => serde_json::json!({
            "event": "stop", "reason": "max_epochs", "epoch": last_epoch,
        }),
        StopReason::Plateau {
            best_epoch,
            patience,
        } => serde_json::json!({
            "event": "stop", "reason": "plateau", "epoch": last_epoch,
            "best_epoch": best_epoch, "patience": patience,
        }),
    };
    v.to_string()
}

pub fn stop_name(stop: &StopReason) -> &'static str {
    match stop {
        StopReason::MaxEpochs => "max_epochs",
        StopReason::Plateau { .. } => "plateau",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_and_text() {
        let mut t = Table::new(["name", "score"]).note(TIE_NOTE);
        t.push(["alpha", "1.000000"]);
        t.push(["b", "0.5"]);
        assert_eq!(
            t.to_tsv(),
            format!("# {TIE_NOTE}\nname\tscore\nalpha\t1.000000\nb\t0.5\n")
        );
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "name   score");
        assert_eq!(lines[2], "-----  --------");
        assert_eq!(lines[4], "b      0.5");
    }

    #[test]
    fn log_lines_skip_missing_metrics() {
        let r = MetricRecord {
            epoch: 3,
            step: 12,
            loss: 0.25,
            lr: 5e-4,
            map: Some(1.0),
            mean_rank: None,
            rho: None,
            threshold: None,
            val_f1: None,
            test_f1: None,
        };
        assert_eq!(
            log_line(&r),
            r#"{"epoch":3,"step":12,"loss":0.25,"lr":0.0005,"map":1.0}"#
        );
        let s = stop_line(
            &StopReason::Plateau {
                best_epoch: 40,
                patience: 10,
            },
            140,
        );
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["reason"], "plateau");
        assert_eq!(v["best_epoch"], 40);
    }
}
