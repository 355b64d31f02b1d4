//! Command-line front end: configuration, stage orchestration with
//! provenance manifests, and SVG figures.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod render;
pub mod stages;

pub use config::{validate, InputSource, PipelineConfig, ValidationReport};
pub use error::{exit, CliError};
pub use pipeline::{run_pipeline, PipelineReport};
