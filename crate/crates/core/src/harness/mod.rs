//! Experiment runners behind the command-line interface.
//!
//! Each runner takes a parsed config and a [`RunContext`], writes its files under the
//! output directory and returns a summary. Work fans out over rayon; every task draws
//! from its own seeded stream, so outputs do not depend on the thread count.

pub mod boundary;
pub mod boxplot;
pub mod config;
pub mod output;
pub mod run;
pub mod svg;

use std::fmt;
use std::path::PathBuf;

use serde_json::Value;
use thiserror::Error;

use crate::catalog::GameSpec;
use crate::game::{JointStrategy, NetworkGame};
use output::Metadata;

/// Failure of a harness command, split by exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unreadable or invalid configuration; exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while running or writing results; exit code 2.
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Runtime(_) => 2,
        }
    }

    pub(crate) fn config(e: impl fmt::Display) -> Self {
        HarnessError::Config(e.to_string())
    }

    pub(crate) fn runtime(e: impl fmt::Display) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

/// Settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub out: PathBuf,
    /// Config file bytes, hashed into the output metadata.
    pub raw_config: Vec<u8>,
}

impl RunContext {
    pub fn metadata(&self, command: &str, parameters: Value) -> Metadata {
        Metadata::new(command, self.seed, &self.raw_config, parameters)
    }
}

pub(crate) fn build_game(spec: &GameSpec) -> Result<NetworkGame, HarnessError> {
    spec.build().map_err(HarnessError::config)
}

/// Explicit initial strategy from a config; must be interior.
pub(crate) fn initial_strategy(
    game: &NetworkGame,
    blocks: &[Vec<f64>],
) -> Result<JointStrategy, HarnessError> {
    let x = JointStrategy::new(blocks.to_vec()).map_err(HarnessError::config)?;
    if x.action_counts() != game.action_counts() {
        return Err(HarnessError::Config(
            "initial strategy does not match the game".into(),
        ));
    }
    if let Some((k, i, v)) = x.first_boundary_component() {
        return Err(HarnessError::Config(format!(
            "initial strategy must be interior; x[{k}][{i}] = {v}"
        )));
    }
    Ok(x)
}
