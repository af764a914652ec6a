use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::runner::EpisodeResult;
use crate::error::{Error, Result};
use crate::world::MotionParams;

/// Step budget `ceil(alpha * (D/d + 360/theta))`, uncapped.
pub fn max_dynamic_steps(distance: f64, motion: &MotionParams, alpha: f64) -> Result<usize> {
    for (v, name) in [
        (distance, "shortest distance"),
        (motion.forward_step, "forward_step"),
        (motion.turn_step, "turn_step"),
        (alpha, "alpha"),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive(name));
        }
    }
    let raw = alpha * (distance / motion.forward_step + 360.0 / motion.turn_step);
    // Absorb representation error so exact products are not bumped up.
    Ok((raw - 1e-9).ceil().max(0.0) as usize)
}

fn nonempty(results: &[EpisodeResult]) -> Result<()> {
    if results.is_empty() {
        Err(Error::EmptyInput("episode results"))
    } else {
        Ok(())
    }
}

/// `S * l / max(p, l)` for one episode.
pub fn spl_term(r: &EpisodeResult) -> f64 {
    if r.success {
        r.shortest / r.path_length.max(r.shortest)
    } else {
        0.0
    }
}

pub fn success_rate(results: &[EpisodeResult]) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}

/// SPL averaged over every episode (failures contribute zero).
pub fn spl(results: &[EpisodeResult]) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().map(spl_term).sum::<f64>() / results.len() as f64)
}

/// SPL averaged over successful episodes only; zero when none succeeded.
pub fn spl_success_only(results: &[EpisodeResult]) -> Result<f64> {
    nonempty(results)?;
    let ok: Vec<f64> = results.iter().filter(|r| r.success).map(spl_term).collect();
    Ok(if ok.is_empty() { 0.0 } else { ok.iter().sum::<f64>() / ok.len() as f64 })
}

/// Mean of `max(0, final_distance - success_radius)`.
pub fn dts(results: &[EpisodeResult], success_radius: f64) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().map(|r| (r.final_distance - success_radius).max(0.0)).sum::<f64>() / results.len() as f64)
}

pub fn dts_raw(results: &[EpisodeResult]) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().map(|r| r.final_distance).sum::<f64>() / results.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub dts: f64,
    pub d_sr: Option<f64>,
    pub d_spl: Option<f64>,
    pub d_dts: Option<f64>,
    pub spl_success_only: f64,
    pub dts_raw: f64,
    pub d_spl_success_only: Option<f64>,
    pub d_dts_raw: Option<f64>,
    pub failures: BTreeMap<String, usize>,
    pub d_failures: BTreeMap<String, usize>,
}

fn failure_counts(results: &[EpisodeResult]) -> BTreeMap<String, usize> {
    let mut map = BTreeMap::new();
    for r in results.iter().filter(|r| !r.success) {
        let key = r.failure_label.map_or("unlabeled".to_string(), |l| l.name().to_string());
        *map.entry(key).or_insert(0) += 1;
    }
    map
}

/// Report over fixed-budget results and, if given, the dynamic-budget
/// results of the same episodes.
pub fn aggregate(fixed: &[EpisodeResult], dynamic: &[EpisodeResult], success_radius: f64) -> Result<MetricsReport> {
    nonempty(fixed)?;
    if !dynamic.is_empty() && dynamic.len() != fixed.len() {
        return Err(Error::LengthMismatch { what: "fixed vs dynamic results", left: fixed.len(), right: dynamic.len() });
    }
    let d = |f: fn(&[EpisodeResult]) -> Result<f64>| -> Result<Option<f64>> {
        if dynamic.is_empty() {
            Ok(None)
        } else {
            f(dynamic).map(Some)
        }
    };
    Ok(MetricsReport {
        episodes: fixed.len(),
        sr: success_rate(fixed)?,
        spl: spl(fixed)?,
        dts: dts(fixed, success_radius)?,
        d_sr: d(success_rate)?,
        d_spl: d(spl)?,
        d_dts: if dynamic.is_empty() { None } else { Some(dts(dynamic, success_radius)?) },
        spl_success_only: spl_success_only(fixed)?,
        dts_raw: dts_raw(fixed)?,
        d_spl_success_only: d(spl_success_only)?,
        d_dts_raw: d(dts_raw)?,
        failures: failure_counts(fixed),
        d_failures: failure_counts(dynamic),
    })
}

impl MetricsReport {
    /// Aligned plain-text table with one row of metrics and the failure
    /// counts below it.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        let header = ["N", "SR", "SPL", "DTS", "D-SR", "D-SPL", "D-DTS"];
        let row = [
            self.episodes.to_string(),
            cell(Some(self.sr)),
            cell(Some(self.spl)),
            cell(Some(self.dts)),
            cell(self.d_sr),
            cell(self.d_spl),
            cell(self.d_dts),
        ];
        let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
        let mut out = String::new();
        for (h, w) in header.iter().zip(&widths) {
            let _ = write!(out, "{h:>w$}  ");
        }
        out = out.trim_end().to_string();
        out.push('\n');
        let mut line = String::new();
        for (r, w) in row.iter().zip(&widths) {
            let _ = write!(line, "{r:>w$}  ");
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if !self.failures.is_empty() {
            out.push_str("failures:\n");
            let w = self.failures.keys().map(String::len).max().unwrap_or(0);
            for (k, v) in &self.failures {
                let _ = writeln!(out, "  {k:<w$}  {v}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dynamic_budget_examples() {
        let m = MotionParams { forward_step: 0.25, turn_step: 30.0, collision_lookahead: 0.02 };
        assert_eq!(max_dynamic_steps(5.0, &m, 5.0).unwrap(), 160);
        let unit = MotionParams { forward_step: 0.25, turn_step: 360.0, collision_lookahead: 0.0 };
        assert_eq!(max_dynamic_steps(0.25, &unit, 1.0).unwrap(), 2);
        assert!(max_dynamic_steps(0.0, &m, 5.0).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(spl(&[]).is_err());
        assert!(dts(&[], 1.0).is_err());
        assert!(aggregate(&[], &[], 1.0).is_err());
    }
}
