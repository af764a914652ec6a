//! Object-goal navigation simulator and modular navigation stack.
//!
//! The crate is organised along the perception / policy / test-time
//! enhancement split of modular navigation agents:
//!
//! - [`world`]: ground-truth scenes, kinematics, depth/semantic scanning and
//!   geodesic distances.
//! - [`perception`]: detector noise, top-down semantic mapping, map
//!   augmentation, compression and frontier extraction.
//! - [`policy`]: long-term goal selection, local planning and rewards.
//! - [`enhance`]: untrapping helper, dynamic goal selection and the
//!   stair remapping mask.
//! - [`eval`]: the episode loop, success metrics and failure taxonomy.

pub mod enhance;
pub mod error;
pub mod eval;
pub mod perception;
pub mod policy;
pub mod world;

pub use error::{Error, Result};
