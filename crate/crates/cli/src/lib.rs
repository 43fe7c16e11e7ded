//! Command-line pipeline around `plc-core`: configuration, work directory
//! handling and the individual pipeline commands.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod workdir;
