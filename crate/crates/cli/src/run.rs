//! Batch runs, log persistence and replay.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use objnav::eval::{
    run_batch, Decision, EpisodeDriver, EpisodeRun, EvalConfig, EvalMode, Pipeline, StepEvent,
    TrajectoryLog,
};
use objnav::world::Scene;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST: &str = "run.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_digest: String,
    pub episodes: usize,
    pub logs: Vec<String>,
}

pub fn log_name(i: usize) -> String {
    format!("episode_{i:04}.jsonl")
}

/// Stamps the digest and log location into a finished run.
pub fn seal(run: &mut EpisodeRun, digest: &str, log: &str) {
    run.log.header.config_digest = digest.to_string();
    for r in [&mut run.fixed, &mut run.dynamic] {
        r.log = Some(log.to_string());
    }
    for (_, r) in &mut run.log.results {
        r.log = Some(log.to_string());
    }
}

/// Runs every episode of the config and writes one JSONL log per episode
/// plus a manifest into `out`.
pub fn cmd_run(cfg: &RunConfig, out: &Path, workers: usize, force: bool) -> Result<Vec<EpisodeRun>> {
    let digest = cfg.digest();
    let manifest_path = out.join(MANIFEST);
    if manifest_path.exists() && !force {
        let old: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
            .with_context(|| format!("reading {}", manifest_path.display()))?;
        if old.config_digest == digest {
            bail!("{} already holds this run (digest {digest}); pass --force to overwrite", out.display());
        }
        bail!(
            "{} holds a different run (digest {}); pass --force to overwrite or pick another --out",
            out.display(),
            old.config_digest
        );
    }
    let scenes = cfg.load_scenes()?;
    let jobs = cfg.episodes(&scenes)?;
    let pipeline = cfg.pipeline()?;
    let mut runs = run_batch(&scenes, &jobs, &pipeline, &cfg.eval, workers)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    if force {
        for stale in glob::glob(&out.join("episode_*.jsonl").to_string_lossy())? {
            fs::remove_file(stale?)?;
        }
    }
    let mut logs = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter_mut().enumerate() {
        let name = log_name(i);
        seal(run, &digest, &name);
        let path = out.join(&name);
        fs::write(&path, run.log.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
        logs.push(name);
    }
    let manifest = Manifest { config_digest: digest, episodes: runs.len(), logs };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(runs)
}

pub fn read_log(path: &Path) -> Result<TrajectoryLog> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TrajectoryLog::from_jsonl(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Re-executes a logged episode step by step. Actions and the agent-side
/// decision data come from the log; the world, sensing and mapping are
/// recomputed, so the result matches only if the log is faithful.
pub fn replay(scene: &Scene, pipeline: &Pipeline, eval: &EvalConfig, log: &TrajectoryLog) -> Result<EpisodeRun> {
    let mut driver = EpisodeDriver::new(scene, &log.header.spec, pipeline, eval, log.header.operator)?;
    for (i, rec) in log.steps.iter().enumerate() {
        if driver.is_done() {
            bail!("log continues after the episode ended at step {i}");
        }
        driver.perceive()?;
        let events = rec
            .events
            .iter()
            .filter(|e| matches!(e, StepEvent::Untrap { .. } | StepEvent::DynamicGoal { .. }))
            .cloned()
            .collect();
        driver.apply(Decision {
            action: rec.action,
            goal: rec.goal,
            policy_goal: rec.policy_goal,
            d_goal: rec.d_goal,
            events,
        })?;
        let pose = driver.pose();
        if pose != rec.pose {
            bail!("step {i}: replayed pose {pose:?} differs from logged {:?}", rec.pose);
        }
    }
    let mut run = driver.finish().context("log ends before the episode did")?;
    if let Some(name) = log.result(EvalMode::Fixed).or(log.result(EvalMode::Dynamic)).and_then(|r| r.log.clone()) {
        seal(&mut run, &log.header.config_digest, &name);
    }
    run.log.header.config_digest.clone_from(&log.header.config_digest);
    Ok(run)
}

/// Sorted paths matching a glob pattern.
pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> =
        glob::glob(pattern).with_context(|| format!("bad glob {pattern}"))?.collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no files match {pattern}");
    }
    Ok(paths)
}
