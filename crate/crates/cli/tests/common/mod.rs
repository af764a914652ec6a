#![allow(dead_code)]

use std::path::Path;

use objnav_cli::RunConfig;

/// Small generated-scene config writing to `out`.
pub fn small_config(out: &Path, episodes: usize) -> RunConfig {
    let text = format!(
        r#"
seed = 3
out = "{}"

[scenes.generate]
count = 2
params = {{ rng_seed = 40 }}

[episodes]
count = {episodes}

[detector]
preset = "ft-mrcnn"

[enhance]
untrap = true

[eval]
max_steps_fixed = 200
"#,
        out.display()
    );
    RunConfig::from_toml(&text).unwrap()
}
