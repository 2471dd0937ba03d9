//! Exploration-rate stability analysis for Q-Learning in network polymatrix games.
//!
//! A game is a graph of agents with one pair of payoff matrices per edge. The crate
//! computes the interaction coefficient of a game and the exploration rate above which
//! the quantal response equilibrium is unique and Q-Learning Dynamics converge to it,
//! runs those dynamics, and solves for the equilibrium directly.

pub mod catalog;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod harness;
pub mod linalg;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use game::{ExplorationRates, JointStrategy, NetworkGame, PayoffMatrix};
