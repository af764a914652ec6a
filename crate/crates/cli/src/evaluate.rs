//! Aggregation of trajectory logs into a metrics report.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use objnav::eval::{aggregate, EpisodeResult, EvalMode, MetricsReport};

use crate::run::{expand_glob, read_log};

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub files: Vec<PathBuf>,
    pub report: MetricsReport,
}

/// Fixed-budget results of every log, plus dynamic ones when every log
/// has them.
pub fn collect_results(files: &[PathBuf]) -> Result<(Vec<EpisodeResult>, Vec<EpisodeResult>)> {
    let mut fixed = Vec::with_capacity(files.len());
    let mut dynamic = Vec::with_capacity(files.len());
    for path in files {
        let log = read_log(path)?;
        let f = log.result(EvalMode::Fixed).with_context(|| format!("{} has no fixed-budget result", path.display()))?;
        fixed.push(f.clone());
        if let Some(d) = log.result(EvalMode::Dynamic) {
            dynamic.push(d.clone());
        }
    }
    if dynamic.len() != fixed.len() {
        dynamic.clear();
    }
    Ok((fixed, dynamic))
}

pub fn cmd_eval(pattern: &str, success_radius: f64) -> Result<Evaluation> {
    let files = expand_glob(pattern)?;
    let (fixed, dynamic) = collect_results(&files)?;
    let report = aggregate(&fixed, &dynamic, success_radius)?;
    Ok(Evaluation { files, report })
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

pub fn format_table(report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "episodes", "SR", "SPL", "DTS", "D-SR", "D-SPL", "D-DTS");
    let _ = writeln!(
        s,
        "{:>9} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8} {:>8}",
        report.episodes,
        report.sr,
        report.spl,
        report.dts,
        opt(report.d_sr),
        opt(report.d_spl),
        opt(report.d_dts)
    );
    if !report.failures.is_empty() {
        let _ = writeln!(s, "failures:");
        for (label, n) in &report.failures {
            let _ = writeln!(s, "  {label:<24} {n}");
        }
    }
    s
}
