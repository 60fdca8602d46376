//! Configuration-driven experiment runner for the fractional Laplacian
//! laboratory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod runner;

pub use config::{experiment_by_name, parse_config, Experiment, ExperimentConfig, NonlinearitySpec, Params};
pub use error::{CliError, CliResult};
pub use plot::{emit_plot, PlotStyle, Series};
pub use runner::{run_experiment, Artifact, RunManifest, RunOptions};
