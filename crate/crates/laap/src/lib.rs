//! File formats, configuration, checkpoints and the run pipeline behind the
//! `laap` command-line tool.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
