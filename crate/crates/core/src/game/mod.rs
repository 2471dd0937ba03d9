//! Network polymatrix games.
//!
//! Agents sit on the vertices of an undirected graph. Every edge `{k, l}` carries a
//! pair of payoff matrices `A^{kl}` (rows: actions of `k`, columns: actions of `l`)
//! and `A^{lk}`, and agent `k` receives `u_k(x) = sum_{l ~ k} x_k . A^{kl} x_l`.

mod file;
mod strategy;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{load_game, parse_game, LoadError, LocatedViolation};
pub use strategy::{entropy, ExplorationRates, JointStrategy, INTERIOR_FLOOR, SIMPLEX_TOL};

/// Payoff matrix of one oriented edge: entry `(i, j)` is what the owner earns playing
/// action `i` against the neighbour's action `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix(DMatrix<f64>);

impl PayoffMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidParameter(
                "payoff matrix must be non-empty".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidParameter(
                "payoff matrix rows have unequal length".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix".into()));
        }
        Ok(Self(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "payoff matrix must be non-empty".into(),
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix".into()));
        }
        Ok(Self(m))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// `out += self * x`.
    pub(crate) fn accumulate_product(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        // column-major storage: walk columns so the inner loop is contiguous
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.0.column(j);
            for (o, a) in out.iter_mut().zip(col.iter()) {
                *o += a * xj;
            }
        }
    }
}

/// Serializable form of a game, mirroring the JSON file format.
///
/// This is the unchecked representation; [`validate_game`] reports everything that
/// keeps it from being a [`NetworkGame`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDescription {
    pub num_agents: usize,
    pub action_counts: Vec<usize>,
    pub edges: Vec<EdgeDescription>,
    /// Optional explicit adjacency; when present it must agree with `edges`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDescription {
    pub k: usize,
    pub l: usize,
    /// `A^{kl}`, row-major, shape `n_k x n_l`.
    pub a_kl: Vec<Vec<f64>>,
    /// `A^{lk}`, row-major, shape `n_l x n_k`.
    pub a_lk: Vec<Vec<f64>>,
}

/// Which of the two matrices on an edge a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `a_kl`
    Forward,
    /// `a_lk`
    Reverse,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Forward => "a_kl",
            Orientation::Reverse => "a_lk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    AgentCountMismatch {
        num_agents: usize,
        action_counts: usize,
    },
    NoActions {
        agent: usize,
    },
    AgentOutOfRange {
        edge: usize,
        agent: usize,
    },
    SelfLoop {
        agent: usize,
    },
    DuplicateEdge {
        edge: usize,
        k: usize,
        l: usize,
    },
    RaggedMatrix {
        edge: usize,
        matrix: Orientation,
    },
    ShapeMismatch {
        edge: usize,
        matrix: Orientation,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NonFinite {
        edge: usize,
        matrix: Orientation,
        row: usize,
        col: usize,
    },
    AdjacencyShape {
        expected: usize,
    },
    AdjacencyNotBinary {
        k: usize,
        l: usize,
    },
    AsymmetricAdjacency {
        k: usize,
        l: usize,
    },
    AdjacencyEdgeMismatch {
        k: usize,
        l: usize,
    },
}

impl Violation {
    /// Index into `edges` this violation is attached to, if any.
    pub fn edge(&self) -> Option<usize> {
        match *self {
            Violation::AgentOutOfRange { edge, .. }
            | Violation::DuplicateEdge { edge, .. }
            | Violation::RaggedMatrix { edge, .. }
            | Violation::ShapeMismatch { edge, .. }
            | Violation::NonFinite { edge, .. } => Some(edge),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AgentCountMismatch {
                num_agents,
                action_counts,
            } => write!(
                f,
                "num_agents is {num_agents} but action_counts has {action_counts} entries"
            ),
            Violation::NoActions { agent } => write!(f, "agent {agent} has no actions"),
            Violation::AgentOutOfRange { edge, agent } => {
                write!(
                    f,
                    "edge {edge} references agent {agent}, which does not exist"
                )
            }
            Violation::SelfLoop { agent } => write!(f, "self-loop on agent {agent}"),
            Violation::DuplicateEdge { edge, k, l } => {
                write!(f, "edge {edge} repeats the pair ({k}, {l})")
            }
            Violation::RaggedMatrix { edge, matrix } => {
                write!(f, "edge {edge}: {matrix} has rows of unequal length")
            }
            Violation::ShapeMismatch {
                edge,
                matrix,
                expected,
                found,
            } => write!(
                f,
                "edge {edge}: {matrix} has shape {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::NonFinite {
                edge,
                matrix,
                row,
                col,
            } => {
                write!(f, "edge {edge}: {matrix}[{row}][{col}] is not finite")
            }
            Violation::AdjacencyShape { expected } => {
                write!(f, "adjacency must be {expected}x{expected}")
            }
            Violation::AdjacencyNotBinary { k, l } => {
                write!(f, "adjacency[{k}][{l}] is neither 0 nor 1")
            }
            Violation::AsymmetricAdjacency { k, l } => {
                write!(f, "adjacency[{k}][{l}] != adjacency[{l}][{k}]")
            }
            Violation::AdjacencyEdgeMismatch { k, l } => {
                write!(f, "adjacency[{k}][{l}] disagrees with the edge list")
            }
        }
    }
}

/// Lists every reason `desc` is not a well-formed game. Empty iff it is.
pub fn validate_game(desc: &GameDescription) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = desc.num_agents;
    if desc.action_counts.len() != n {
        out.push(Violation::AgentCountMismatch {
            num_agents: n,
            action_counts: desc.action_counts.len(),
        });
    }
    for (agent, &c) in desc.action_counts.iter().enumerate() {
        if c == 0 {
            out.push(Violation::NoActions { agent });
        }
    }
    let counts = &desc.action_counts;
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (e, edge) in desc.edges.iter().enumerate() {
        let (k, l) = (edge.k, edge.l);
        let mut endpoints_ok = true;
        for agent in [k, l] {
            if agent >= n || agent >= counts.len() {
                out.push(Violation::AgentOutOfRange { edge: e, agent });
                endpoints_ok = false;
            }
        }
        if k == l {
            out.push(Violation::SelfLoop { agent: k });
            continue;
        }
        let key = (k.min(l), k.max(l));
        if seen.insert(key, e).is_some() {
            out.push(Violation::DuplicateEdge { edge: e, k, l });
        }
        for (matrix, rows) in [
            (Orientation::Forward, &edge.a_kl),
            (Orientation::Reverse, &edge.a_lk),
        ] {
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                out.push(Violation::RaggedMatrix { edge: e, matrix });
            } else if endpoints_ok {
                let expected = match matrix {
                    Orientation::Forward => (counts[k], counts[l]),
                    Orientation::Reverse => (counts[l], counts[k]),
                };
                let found = (rows.len(), ncols);
                if found != expected {
                    out.push(Violation::ShapeMismatch {
                        edge: e,
                        matrix,
                        expected,
                        found,
                    });
                }
            }
            for (row, r) in rows.iter().enumerate() {
                if let Some(col) = r.iter().position(|v| !v.is_finite()) {
                    out.push(Violation::NonFinite {
                        edge: e,
                        matrix,
                        row,
                        col,
                    });
                }
            }
        }
    }
    if let Some(adj) = &desc.adjacency {
        if adj.len() != n || adj.iter().any(|r| r.len() != n) {
            out.push(Violation::AdjacencyShape { expected: n });
        } else {
            for k in 0..n {
                if adj[k][k] != 0 {
                    out.push(Violation::SelfLoop { agent: k });
                }
                for l in 0..n {
                    if adj[k][l] > 1 {
                        out.push(Violation::AdjacencyNotBinary { k, l });
                    }
                }
                for l in (k + 1)..n {
                    if adj[k][l] != adj[l][k] {
                        out.push(Violation::AsymmetricAdjacency { k, l });
                    } else if (adj[k][l] == 1) != seen.contains_key(&(k, l)) {
                        out.push(Violation::AdjacencyEdgeMismatch { k, l });
                    }
                }
            }
        }
    }
    out
}

/// One undirected edge `{low, high}` with `low < high` and both oriented payoff matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub low: usize,
    pub high: usize,
    /// `A^{low, high}`
    pub low_high: PayoffMatrix,
    /// `A^{high, low}`
    pub high_low: PayoffMatrix,
}

impl Edge {
    /// `A^{kl}` for either orientation of this edge.
    pub fn matrix_from(&self, k: usize) -> &PayoffMatrix {
        if k == self.low {
            &self.low_high
        } else {
            &self.high_low
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Incidence {
    neighbor: usize,
    edge: usize,
    /// true when this agent is `edge.low`
    owns_low: bool,
}

/// A validated network polymatrix game. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGame {
    action_counts: Vec<usize>,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    incidence: Vec<Vec<Incidence>>,
}

impl NetworkGame {
    pub fn builder(action_counts: Vec<usize>) -> GameBuilder {
        GameBuilder {
            action_counts,
            pairs: BTreeMap::new(),
        }
    }

    pub fn from_description(desc: &GameDescription) -> Result<Self> {
        let violations = validate_game(desc);
        if !violations.is_empty() {
            return Err(Error::InvalidGame(violations));
        }
        let mut edges: Vec<Edge> = desc
            .edges
            .iter()
            .map(|e| {
                let a_kl = PayoffMatrix::from_rows(&e.a_kl)?;
                let a_lk = PayoffMatrix::from_rows(&e.a_lk)?;
                Ok(if e.k < e.l {
                    Edge {
                        low: e.k,
                        high: e.l,
                        low_high: a_kl,
                        high_low: a_lk,
                    }
                } else {
                    Edge {
                        low: e.l,
                        high: e.k,
                        low_high: a_lk,
                        high_low: a_kl,
                    }
                })
            })
            .collect::<Result<_>>()?;
        edges.sort_by_key(|e| (e.low, e.high));
        Ok(Self::assemble(desc.action_counts.clone(), edges))
    }

    fn assemble(action_counts: Vec<usize>, edges: Vec<Edge>) -> Self {
        let mut offsets = Vec::with_capacity(action_counts.len() + 1);
        offsets.push(0);
        for c in &action_counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut incidence = vec![Vec::new(); action_counts.len()];
        for (idx, e) in edges.iter().enumerate() {
            incidence[e.low].push(Incidence {
                neighbor: e.high,
                edge: idx,
                owns_low: true,
            });
            incidence[e.high].push(Incidence {
                neighbor: e.low,
                edge: idx,
                owns_low: false,
            });
        }
        Self {
            action_counts,
            offsets,
            edges,
            incidence,
        }
    }

    pub fn to_description(&self) -> GameDescription {
        GameDescription {
            num_agents: self.num_agents(),
            action_counts: self.action_counts.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDescription {
                    k: e.low,
                    l: e.high,
                    a_kl: e.low_high.to_rows(),
                    a_lk: e.high_low.to_rows(),
                })
                .collect(),
            adjacency: None,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Total number of pure actions, `sum_k n_k`.
    pub fn dimension(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.incidence[k].iter().map(|i| i.neighbor)
    }

    pub fn degree(&self, k: usize) -> usize {
        self.incidence[k].len()
    }

    /// Oriented neighbour matrices of agent `k`: `(l, A^{kl})`.
    pub fn interactions(&self, k: usize) -> impl Iterator<Item = (usize, &PayoffMatrix)> + '_ {
        self.incidence[k].iter().map(move |inc| {
            let e = &self.edges[inc.edge];
            let m = if inc.owns_low {
                &e.low_high
            } else {
                &e.high_low
            };
            (inc.neighbor, m)
        })
    }

    /// Symmetric 0/1 adjacency matrix `G`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.num_agents();
        let mut g = DMatrix::zeros(n, n);
        for e in &self.edges {
            g[(e.low, e.high)] = 1.0;
            g[(e.high, e.low)] = 1.0;
        }
        g
    }

    pub(crate) fn check_agent(&self, k: usize) -> Result<()> {
        if k >= self.num_agents() {
            return Err(Error::AgentOutOfRange {
                agent: k,
                num_agents: self.num_agents(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_strategy(&self, x: &JointStrategy) -> Result<()> {
        if x.offsets() != self.offsets.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "game has action counts {:?}, strategy has {:?}",
                self.action_counts,
                x.action_counts()
            )));
        }
        Ok(())
    }

    /// `out = r_k(x_{-k})`. No bounds or shape checks.
    pub(crate) fn reward_into(&self, k: usize, x: &JointStrategy, out: &mut [f64]) {
        out.fill(0.0);
        for (l, a) in self.interactions(k) {
            a.accumulate_product(x.agent(l), out);
        }
    }

    /// Rewards of every agent, flat and agent-major.
    pub(crate) fn all_rewards_into(&self, x: &JointStrategy, out: &mut [f64]) {
        for k in 0..self.num_agents() {
            let (s, e) = (self.offsets[k], self.offsets[k + 1]);
            self.reward_into(k, x, &mut out[s..e]);
        }
    }
}

/// Accumulates oriented interactions and fills any missing reverse matrix with zeros.
#[derive(Debug, Clone)]
pub struct GameBuilder {
    action_counts: Vec<usize>,
    pairs: BTreeMap<(usize, usize), (Option<PayoffMatrix>, Option<PayoffMatrix>)>,
}

impl GameBuilder {
    /// Sets `A^{kl}`; the edge `{k, l}` is created if needed.
    pub fn interaction(mut self, k: usize, l: usize, a_kl: PayoffMatrix) -> Self {
        let slot = self.pairs.entry((k.min(l), k.max(l))).or_default();
        if k < l {
            slot.0 = Some(a_kl);
        } else {
            slot.1 = Some(a_kl);
        }
        self
    }

    pub fn edge(self, k: usize, l: usize, a_kl: PayoffMatrix, a_lk: PayoffMatrix) -> Self {
        self.interaction(k, l, a_kl).interaction(l, k, a_lk)
    }

    pub fn build(self) -> Result<NetworkGame> {
        let counts = &self.action_counts;
        let edges = self
            .pairs
            .into_iter()
            .map(|((low, high), (lh, hl))| {
                let dims = |a: usize, b: usize| {
                    (
                        counts.get(a).copied().unwrap_or(0),
                        counts.get(b).copied().unwrap_or(0),
                    )
                };
                let (r, c) = dims(low, high);
                EdgeDescription {
                    k: low,
                    l: high,
                    a_kl: lh.unwrap_or_else(|| PayoffMatrix::zeros(r, c)).to_rows(),
                    a_lk: hl.unwrap_or_else(|| PayoffMatrix::zeros(c, r)).to_rows(),
                }
            })
            .collect();
        NetworkGame::from_description(&GameDescription {
            num_agents: counts.len(),
            action_counts: counts.clone(),
            edges,
            adjacency: None,
        })
    }
}

/// `r_k(x_{-k}) = sum_{l ~ k} A^{kl} x_l`, the gradient of `u_k` in `x_k`.
pub fn reward(game: &NetworkGame, k: usize, x: &JointStrategy) -> Result<Vec<f64>> {
    game.check_agent(k)?;
    game.check_strategy(x)?;
    let mut out = vec![0.0; game.action_counts[k]];
    game.reward_into(k, x, &mut out);
    Ok(out)
}

/// `u_k(x) = <x_k, r_k(x_{-k})>`.
pub fn payoff(game: &NetworkGame, k: usize, x: &JointStrategy) -> Result<f64> {
    let r = reward(game, k, x)?;
    Ok(dot(x.agent(k), &r))
}

/// Entropy-perturbed payoff `u_k(x) - T_k <x_k, ln x_k>`. Needs a strictly interior `x`.
pub fn perturbed_payoff(
    game: &NetworkGame,
    rates: &ExplorationRates,
    k: usize,
    x: &JointStrategy,
) -> Result<f64> {
    game.check_agent(k)?;
    game.check_strategy(x)?;
    if rates.len() != game.num_agents() {
        return Err(Error::ShapeMismatch(format!(
            "{} exploration rates for {} agents",
            rates.len(),
            game.num_agents()
        )));
    }
    x.require_interior()?;
    Ok(payoff(game, k, x)? + rates.get(k) * entropy(x.agent(k)))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
