//! Batch front end for `exchlab-core`: TOML experiment configs, a rayon
//! executor, CSV reports and the `exchlab` command line.

pub mod config;
pub mod executor;
pub mod report;
pub mod runner;

pub use config::{parse_config, Config, ConfigError};
pub use executor::RayonExecutor;
