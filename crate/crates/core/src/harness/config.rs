//! Run configurations for each subcommand, read from JSON.
//!
//! Every config embeds a catalog game at the top level, so
//! `{"game": "sato", "network": {"kind": "full", "n": 5}, "t": 0.2}` is a valid
//! simulate config. Dynamics settings left out take per-subcommand defaults.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::catalog::{GameSpec, NetworkKind};
use crate::dynamics::{
    integrate_qld, simulate_q_learning, QreConfig, RecordingConfig, TrajectoryRecord,
};
use crate::error::Result;
use crate::game::{ExplorationRates, JointStrategy, NetworkGame};

/// Reads and parses a config file. Returns the parsed config and the raw bytes.
pub fn load_config<C: DeserializeOwned>(
    path: &Path,
) -> std::result::Result<(C, Vec<u8>), HarnessError> {
    let raw = fs::read(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = serde_json::from_slice(&raw).map_err(|e| {
        HarnessError::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    Ok((cfg, raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Discrete Boltzmann Q-learning with step `learning_rate`.
    QLearning,
    /// Runge-Kutta integration of the continuous-time dynamics with step `dt`.
    Ode,
}

/// Fully resolved dynamics settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Protocol {
    pub dynamics: Dynamics,
    /// Q-learning step; named apart from the `alpha` payoff parameter of some games.
    pub learning_rate: f64,
    pub dt: f64,
    pub steps: usize,
    pub window: usize,
    pub tolerance: f64,
}

impl Protocol {
    pub const TRAJECTORY: Protocol = Protocol {
        dynamics: Dynamics::QLearning,
        learning_rate: 0.01,
        dt: 0.01,
        steps: 20_000,
        window: 2_500,
        tolerance: 1e-5,
    };

    /// Sweeps judge convergence near the stability boundary, where the explicit
    /// Q-learning step is itself a source of oscillation; they integrate the ODE.
    pub const SWEEP: Protocol = Protocol {
        dynamics: Dynamics::Ode,
        learning_rate: 0.01,
        dt: 0.05,
        steps: 20_000,
        window: 2_500,
        tolerance: 1e-5,
    };

    pub fn recording(&self, stride: usize, retain: Option<usize>) -> RecordingConfig {
        RecordingConfig {
            steps: self.steps,
            stride,
            window: self.window,
            tolerance: self.tolerance,
            retain,
        }
    }

    /// Runs one trajectory. `stride` and `retain` are in recorded states.
    pub fn run(
        &self,
        game: &NetworkGame,
        rates: &ExplorationRates,
        x0: &JointStrategy,
        stride: usize,
        retain: Option<usize>,
    ) -> Result<TrajectoryRecord> {
        let rec = self.recording(stride, retain);
        match self.dynamics {
            Dynamics::QLearning => simulate_q_learning(
                game,
                rates,
                &vec![self.learning_rate; game.num_agents()],
                x0,
                &rec,
            ),
            Dynamics::Ode => integrate_qld(game, rates, x0, self.dt, &rec),
        }
    }

    fn validate(&self) -> std::result::Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!(
                "learning_rate = {} must be in (0, 1]",
                self.learning_rate
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if self.window == 0 || self.window > self.steps + 1 {
            return bad(format!(
                "window {} must be in 1..={}",
                self.window,
                self.steps + 1
            ));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        Ok(())
    }
}

/// Optional overrides of a [`Protocol`], as they appear in config files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<Dynamics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ProtocolOverrides {
    pub fn resolve(&self, base: Protocol) -> std::result::Result<Protocol, HarnessError> {
        let p = Protocol {
            dynamics: self.dynamics.unwrap_or(base.dynamics),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            dt: self.dt.unwrap_or(base.dt),
            steps: self.steps.unwrap_or(base.steps),
            window: self.window.unwrap_or(base.window),
            tolerance: self.tolerance.unwrap_or(base.tolerance),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Exploration rates given either as one shared `t` or per agent as `rates`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    #[serde(default, alias = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
}

impl RateSpec {
    pub fn resolve(
        &self,
        num_agents: usize,
    ) -> std::result::Result<ExplorationRates, HarnessError> {
        let rates = match (self.t, &self.rates) {
            (Some(t), None) => ExplorationRates::uniform(t, num_agents),
            (None, Some(r)) if r.len() == num_agents => ExplorationRates::new(r.clone()),
            (None, Some(r)) => {
                return Err(HarnessError::Config(format!(
                    "{} rates given for {num_agents} agents",
                    r.len()
                )))
            }
            _ => {
                return Err(HarnessError::Config(
                    "give exactly one of `t` and `rates`".into(),
                ))
            }
        };
        rates.map_err(HarnessError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    #[serde(flatten)]
    pub game: GameSpec,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub game: GameSpec,
    #[serde(flatten)]
    pub rates: RateSpec,
    #[serde(flatten)]
    pub protocol: ProtocolOverrides,
    /// Number of seeded random initial conditions; ignored when `initial` is given.
    #[serde(default = "one")]
    pub inits: usize,
    /// Explicit initial joint strategy, one probability vector per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<Vec<f64>>>,
    /// Record every `stride`-th state.
    #[serde(default = "one")]
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QreRunConfig {
    #[serde(flatten)]
    pub game: GameSpec,
    #[serde(flatten)]
    pub rates: RateSpec,
    #[serde(default)]
    pub solver: QreConfig,
    /// Starting point; uniform play when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<Vec<f64>>>,
}

fn default_box_inits() -> usize {
    35
}

fn default_box_agents() -> Vec<usize> {
    vec![0, 1, 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotConfig {
    #[serde(flatten)]
    pub game: GameSpec,
    #[serde(flatten)]
    pub protocol: ProtocolOverrides,
    /// Exploration rates to sweep, shared by all agents.
    pub temperatures: Vec<f64>,
    #[serde(default = "default_box_inits")]
    pub inits: usize,
    /// Agents whose first-action probability is reported.
    #[serde(default = "default_box_agents")]
    pub agents: Vec<usize>,
}

fn default_boundary_inits() -> usize {
    10
}

fn default_networks() -> Vec<NetworkKind> {
    vec![NetworkKind::Ring, NetworkKind::Star, NetworkKind::Full]
}

fn default_resolution() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    /// Game template; its network is replaced for each `(network, N)` pair.
    #[serde(flatten)]
    pub game: GameSpec,
    #[serde(flatten)]
    pub protocol: ProtocolOverrides,
    #[serde(default = "default_networks")]
    pub networks: Vec<NetworkKind>,
    pub agent_counts: Vec<usize>,
    #[serde(default = "default_boundary_inits")]
    pub inits: usize,
    /// Grid spacing of the bisection.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Initial bracket `[lo, hi]`; derived from the theoretical threshold when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
}

impl BoundaryConfig {
    pub fn validate(&self) -> std::result::Result<(), HarnessError> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(HarnessError::Config("resolution must be positive".into()));
        }
        if let Some([lo, hi]) = self.bracket {
            if !(lo > 0.0 && hi > lo) {
                return Err(HarnessError::Config(format!(
                    "bracket [{lo}, {hi}] needs 0 < lo < hi"
                )));
            }
        }
        if self.inits == 0 || self.agent_counts.is_empty() || self.networks.is_empty() {
            return Err(HarnessError::Config(
                "inits, agent_counts and networks must be non-empty".into(),
            ));
        }
        Ok(())
    }
}
