use rayon::prelude::*;

use super::config::{EvalConfig, Pipeline};
use super::runner::{run_episode, EpisodeRun};
use crate::error::{Error, Result};
use crate::world::{EpisodeSpec, Scene};

/// One episode of a batch; `scene` indexes the batch's scene list.
#[derive(Debug, Clone)]
pub struct EpisodeJob {
    pub scene: usize,
    pub spec: EpisodeSpec,
}

/// Runs every job on up to `workers` threads. Results come back in job
/// order regardless of scheduling.
pub fn run_batch(
    scenes: &[Scene],
    jobs: &[EpisodeJob],
    pipeline: &Pipeline,
    eval: &EvalConfig,
    workers: usize,
) -> Result<Vec<EpisodeRun>> {
    let run = |job: &EpisodeJob| -> Result<EpisodeRun> {
        let scene = scenes
            .get(job.scene)
            .ok_or_else(|| Error::Config(format!("job refers to missing scene {}", job.scene)))?;
        run_episode(scene, &job.spec, pipeline, eval)
    };
    if workers <= 1 {
        return jobs.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(run).collect())
}
