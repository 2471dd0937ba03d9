use thiserror::Error;

use crate::game::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {}", join_violations(.0))]
    InvalidGame(Vec<Violation>),

    #[error("agent index {agent} out of range for a game with {num_agents} agents")]
    AgentOutOfRange { agent: usize, num_agents: usize },

    #[error("strategy shape does not match the game: {0}")]
    ShapeMismatch(String),

    #[error("strategy is not on the simplex: {0}")]
    NotOnSimplex(String),

    #[error("strategy component x[{agent}][{action}] = {value:e} is on the simplex boundary")]
    BoundaryStrategy {
        agent: usize,
        action: usize,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integration produced a non-finite state at step {step}")]
    Diverged { step: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
