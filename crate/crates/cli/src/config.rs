//! Run configuration (TOML) and its digest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use objnav::enhance::EnhancementConfig;
use objnav::eval::{EpisodeJob, EvalConfig, MapConfig, Pipeline};
use objnav::perception::DetectorModel;
use objnav::policy::{PlannerConfig, PolicyConfig, RewardConfig};
use objnav::world::{generate_scene, load_scene, sample_episode, GenerateParams, MotionParams, SamplerConfig, Scene, SensorConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for episode sampling.
    #[serde(default)]
    pub seed: u64,
    /// Output directory for logs. Not part of the digest.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    /// Not part of the digest: results do not depend on it.
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
    pub scenes: SceneSource,
    #[serde(default)]
    pub episodes: EpisodeSection,
    pub detector: DetectorSection,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub enhance: EnhancementConfig,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub motion: MotionParams,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs/default")
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSource {
    /// Scene files, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSection>,
}

/// `count` scenes; scene `i` is generated with `params.rng_seed + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub count: usize,
    #[serde(default)]
    pub params: GenerateParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    pub count: usize,
    /// Goal categories, cycled over episodes. Empty means all.
    pub categories: Vec<usize>,
    pub sampler: SamplerConfig,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self { count: 10, categories: Vec::new(), sampler: SamplerConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<DetectorModel>,
    #[serde(default = "default_categories")]
    pub categories: usize,
}

fn default_categories() -> usize {
    6
}

/// How many scene/seed combinations to try per episode before giving up.
const SAMPLE_ATTEMPTS: u64 = 64;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid run config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config and resolves scene paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(paths) = &mut cfg.scenes.paths {
            for p in paths.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.scenes.paths, &self.scenes.generate) {
            (Some(p), None) if !p.is_empty() => {}
            (None, Some(g)) if g.count > 0 => {}
            (Some(_), Some(_)) => bail!("scenes: give either paths or generate, not both"),
            _ => bail!("scenes: need a non-empty paths list or a generate section with count > 0"),
        }
        if self.episodes.count == 0 {
            bail!("episodes.count must be positive");
        }
        if self.workers == 0 {
            bail!("workers must be positive");
        }
        let pipeline = self.pipeline()?;
        if let Some(&bad) = self.episodes.categories.iter().find(|&&k| k >= pipeline.detector.categories()) {
            bail!("episode category {bad} outside the detector's {} categories", pipeline.detector.categories());
        }
        pipeline.validate()?;
        self.eval.validate()?;
        Ok(())
    }

    pub fn detector(&self) -> Result<DetectorModel> {
        let d = &self.detector;
        Ok(match (&d.preset, &d.model) {
            (Some(name), None) => DetectorModel::preset(name, d.categories)?,
            (None, Some(model)) => model.clone(),
            _ => bail!("detector: give exactly one of preset or model"),
        })
    }

    pub fn pipeline(&self) -> Result<Pipeline> {
        Ok(Pipeline {
            detector: self.detector()?,
            map: self.map,
            policy: self.policy.clone(),
            planner: self.planner,
            enhance: self.enhance,
            sensor: self.sensor,
            motion: self.motion,
            reward: self.reward,
        })
    }

    /// SHA-256 over the normalized config. Formatting, key order and
    /// spelled-out defaults do not change it.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(serde_json::to_string(&value).expect("value serializes").as_bytes()))
    }

    pub fn load_scenes(&self) -> Result<Vec<Scene>> {
        if let Some(paths) = &self.scenes.paths {
            return paths
                .iter()
                .map(|p| load_scene(p).with_context(|| format!("loading scene {}", p.display())))
                .collect();
        }
        let g = self.scenes.generate.as_ref().expect("validated");
        generate_scenes(&g.params, g.count)
    }

    pub fn categories(&self) -> Result<Vec<usize>> {
        if self.episodes.categories.is_empty() {
            Ok((0..self.detector()?.categories()).collect())
        } else {
            Ok(self.episodes.categories.clone())
        }
    }

    /// The run's episodes. Episode `i` targets `categories[i % len]` and
    /// starts on scene `i % scenes`, moving on to later scenes when that
    /// one has no valid start for the category.
    pub fn episodes(&self, scenes: &[Scene]) -> Result<Vec<EpisodeJob>> {
        sample_jobs(scenes, &self.categories()?, self.episodes.count, self.seed, &self.episodes.sampler)
    }
}

pub fn generate_scenes(params: &GenerateParams, count: usize) -> Result<Vec<Scene>> {
    (0..count as u64)
        .map(|i| {
            let p = GenerateParams { rng_seed: params.rng_seed + i, ..params.clone() };
            generate_scene(&p).with_context(|| format!("generating scene with seed {}", p.rng_seed))
        })
        .collect()
}

pub fn sample_jobs(
    scenes: &[Scene],
    categories: &[usize],
    count: usize,
    seed: u64,
    sampler: &SamplerConfig,
) -> Result<Vec<EpisodeJob>> {
    if categories.is_empty() || scenes.is_empty() {
        bail!("need at least one scene and one category");
    }
    let mut jobs = Vec::with_capacity(count);
    for i in 0..count {
        let cat = categories[i % categories.len()];
        let job = (0..SAMPLE_ATTEMPTS).find_map(|attempt| {
            let si = (i + attempt as usize) % scenes.len();
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((i as u64) << 8) ^ attempt;
            sample_episode(&scenes[si], cat, s, sampler).ok().map(|spec| EpisodeJob { scene: si, spec })
        });
        match job {
            Some(j) => jobs.push(j),
            None => bail!("no scene has a valid start for category {cat} (episode {i})"),
        }
    }
    Ok(jobs)
}
