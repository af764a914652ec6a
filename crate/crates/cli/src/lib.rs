//! Entry points of the `objnav` command: scene generation, batch runs,
//! evaluation and the human session server.

pub mod config;
pub mod evaluate;
pub mod generate;
pub mod run;
pub mod serve;

pub use config::RunConfig;
