//! Pipeline orchestration for `vorder`: config files, stage runners and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{parse_config, PipelineConfig};
pub use error::{CliError, CliResult, Stage};
pub use pipeline::{run_pipeline, Layout, RunSummary};
