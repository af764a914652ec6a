//! Detector noise and the agent's top-down semantic map.

mod augment;
mod compress;
mod detector;
mod frontier;
pub(crate) mod map;

pub use augment::{augment_map, AugmentConfig, Augmenter};
pub use compress::{compress_map, decode_runs, encode_runs, CellClass, CompressedMap, Palette};
pub use detector::{detect, DetectorModel, PRESET_NAMES};
pub use frontier::{extract_frontiers, is_frontier_cell, FrontierCluster, FrontierSet};
pub use map::{crop_local, project_to_map, SemanticMap, EXPLORED, OBSTACLE};
