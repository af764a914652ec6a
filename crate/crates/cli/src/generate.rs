//! Scene generation to files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use objnav::world::{save_scene, GenerateParams};

use crate::config::generate_scenes;

/// Writes `count` scenes seeded `params.rng_seed`, `params.rng_seed + 1`, ...
/// as `scene_<seed>.json` files.
pub fn cmd_generate(params: &GenerateParams, count: usize, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let scenes = generate_scenes(params, count)?;
    scenes
        .iter()
        .enumerate()
        .map(|(i, scene)| {
            let path = out.join(format!("scene_{}.json", params.rng_seed + i as u64));
            save_scene(scene, &path).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        })
        .collect()
}
