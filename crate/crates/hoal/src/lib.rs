//! Experiment harness, file formats and command-line surface on top of
//! [`hoal_core`].

pub mod cli;
pub mod config;
mod error;
pub mod export;
pub mod harness;

pub use config::{parse_config, parse_config_str, ConfigError, ScenarioConfig};
pub use error::{HoalError, Result};
pub use harness::{
    run_belief_correction, run_bimodal_identifiability, run_interaction_loop,
    run_unimodal_identifiability, LoopTrace, RunReport,
};
