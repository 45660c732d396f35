//! Command-line front end for the Kuramoto mean-field game solvers.
//!
//! A run is described by a [`config::RunConfig`], executed by [`run::run`],
//! and leaves CSV tables, an SVG plot, `summary.json` and `manifest.json`
//! in its output directory.

pub mod config;
pub mod run;
pub mod svg;

pub use config::{Command, ConfigError, RunConfig};
pub use run::{run, RunError, RunManifest, Summary};
