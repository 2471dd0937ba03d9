//! Benchmark games and network topologies.

use std::fmt;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{load_game, NetworkGame, PayoffMatrix};
use crate::sampling::stream_rng;

/// The three standard topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Ring,
    Star,
    Full,
}

impl NetworkKind {
    pub fn spec(self, n: usize) -> NetworkSpec {
        match self {
            NetworkKind::Ring => NetworkSpec::Ring { n },
            NetworkKind::Star => NetworkSpec::Star { n },
            NetworkKind::Full => NetworkSpec::Full { n },
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkKind::Ring => "ring",
            NetworkKind::Star => "star",
            NetworkKind::Full => "full",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NetworkSpec {
    /// Cycle `0 - 1 - ... - (n-1) - 0`; needs `n >= 3`.
    Ring {
        n: usize,
    },
    /// Hub `0` linked to every other agent; needs `n >= 2`.
    Star {
        n: usize,
    },
    /// Every pair linked; needs `n >= 2`.
    Full {
        n: usize,
    },
    Custom {
        adjacency: Vec<Vec<u8>>,
    },
    /// Erdos-Renyi graph with edge probability `p`. Exploratory only.
    Random {
        n: usize,
        p: f64,
        seed: u64,
    },
}

impl NetworkSpec {
    pub fn num_agents(&self) -> usize {
        match self {
            NetworkSpec::Ring { n }
            | NetworkSpec::Star { n }
            | NetworkSpec::Full { n }
            | NetworkSpec::Random { n, .. } => *n,
            NetworkSpec::Custom { adjacency } => adjacency.len(),
        }
    }
}

/// Symmetric, zero-diagonal 0/1 adjacency matrix of `spec`.
pub fn make_network(spec: &NetworkSpec) -> Result<DMatrix<f64>> {
    let too_small = |kind: &str, min: usize, n: usize| {
        Error::InvalidParameter(format!(
            "{kind} network needs at least {min} agents, got {n}"
        ))
    };
    let mut g;
    match *spec {
        NetworkSpec::Ring { n } => {
            if n < 3 {
                return Err(too_small("ring", 3, n));
            }
            g = DMatrix::zeros(n, n);
            for k in 0..n {
                let l = (k + 1) % n;
                g[(k, l)] = 1.0;
                g[(l, k)] = 1.0;
            }
        }
        NetworkSpec::Star { n } => {
            if n < 2 {
                return Err(too_small("star", 2, n));
            }
            g = DMatrix::zeros(n, n);
            for l in 1..n {
                g[(0, l)] = 1.0;
                g[(l, 0)] = 1.0;
            }
        }
        NetworkSpec::Full { n } => {
            if n < 2 {
                return Err(too_small("full", 2, n));
            }
            g = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        }
        NetworkSpec::Custom { ref adjacency } => {
            let n = adjacency.len();
            g = DMatrix::zeros(n, n);
            for (i, row) in adjacency.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::InvalidParameter(
                        "custom adjacency must be square".into(),
                    ));
                }
                for (j, &v) in row.iter().enumerate() {
                    if v > 1 || (i == j && v != 0) || adjacency[j][i] != v {
                        return Err(Error::InvalidParameter(format!(
                            "custom adjacency must be symmetric 0/1 with zero diagonal (entry {i},{j})"
                        )));
                    }
                    g[(i, j)] = f64::from(v);
                }
            }
        }
        NetworkSpec::Random { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "edge probability {p} not in [0, 1]"
                )));
            }
            let mut rng = stream_rng(seed, 0);
            g = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        g[(i, j)] = 1.0;
                        g[(j, i)] = 1.0;
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Unordered edges `(k, l)`, `k < l`, of a 0/1 adjacency matrix.
pub fn edge_list(g: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = g.nrows();
    (0..n)
        .flat_map(|k| ((k + 1)..n).map(move |l| (k, l)))
        .filter(|&(k, l)| g[(k, l)] != 0.0)
        .collect()
}

fn matrix(rows: &[&[f64]]) -> PayoffMatrix {
    PayoffMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("catalog matrices are finite")
}

pub fn chakraborty_matrix(alpha: f64, beta: f64) -> PayoffMatrix {
    matrix(&[&[1.0, alpha], &[beta, 0.0]])
}

pub fn mismatching_matrix(m: f64) -> PayoffMatrix {
    matrix(&[&[0.0, 1.0], &[m, 0.0]])
}

/// `(A, B)` for the Shapley game; `A + B^T` is circulant with first row `(1 - b, 0, 1 + b)`.
pub fn shapley_matrices(beta: f64) -> (PayoffMatrix, PayoffMatrix) {
    (
        matrix(&[&[1.0, 0.0, beta], &[beta, 1.0, 0.0], &[0.0, beta, 1.0]]),
        matrix(&[&[-beta, 1.0, 0.0], &[0.0, -beta, 1.0], &[1.0, 0.0, -beta]]),
    )
}

fn rps_with_diagonal(eps: f64) -> PayoffMatrix {
    matrix(&[&[eps, -1.0, 1.0], &[1.0, eps, -1.0], &[-1.0, 1.0, eps]])
}

/// `(A, B)` for the Sato game; `A + B^T = (eps_x + eps_y) I`.
pub fn sato_matrices(eps_x: f64, eps_y: f64) -> (PayoffMatrix, PayoffMatrix) {
    (rps_with_diagonal(eps_x), rps_with_diagonal(eps_y))
}

/// Agent `k` plays against its predecessor `k - 1 mod n` with payoff `a`. The
/// reverse matrix on each edge is zero, which leaves the predecessor's payoff untouched.
pub fn directed_cycle(n: usize, a: PayoffMatrix) -> Result<NetworkGame> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "directed cycle needs n >= 2, got {n}"
        )));
    }
    if a.rows() != a.cols() {
        return Err(Error::InvalidParameter(
            "directed cycle payoff must be square".into(),
        ));
    }
    let mut b = NetworkGame::builder(vec![a.rows(); n]);
    for k in 0..n {
        b = b.interaction(k, (k + n - 1) % n, a.clone());
    }
    b.build()
}

pub fn make_chakraborty(n: usize, alpha: f64, beta: f64) -> Result<NetworkGame> {
    directed_cycle(n, chakraborty_matrix(alpha, beta))
}

pub fn make_mismatching(n: usize, m: f64) -> Result<NetworkGame> {
    if !(m >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mismatching game needs M >= 1, got {m}"
        )));
    }
    directed_cycle(n, mismatching_matrix(m))
}

/// Same `(A, B)` on every edge; the lower agent index owns `A`.
pub fn symmetric_network_game(
    network: &NetworkSpec,
    a: &PayoffMatrix,
    b: &PayoffMatrix,
) -> Result<NetworkGame> {
    let g = make_network(network)?;
    let n = g.nrows();
    if a.rows() != a.cols() || (b.rows(), b.cols()) != (a.cols(), a.rows()) {
        return Err(Error::InvalidParameter(
            "edge matrices must be square and equal size".into(),
        ));
    }
    edge_list(&g)
        .into_iter()
        .fold(NetworkGame::builder(vec![a.rows(); n]), |acc, (k, l)| {
            acc.edge(k, l, a.clone(), b.clone())
        })
        .build()
}

pub fn make_shapley(network: &NetworkSpec, beta: f64) -> Result<NetworkGame> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Shapley game needs beta in (0, 1), got {beta}"
        )));
    }
    let (a, b) = shapley_matrices(beta);
    symmetric_network_game(network, &a, &b)
}

pub fn make_sato(network: &NetworkSpec, eps_x: f64, eps_y: f64) -> Result<NetworkGame> {
    let (a, b) = sato_matrices(eps_x, eps_y);
    symmetric_network_game(network, &a, &b)
}

/// Pairwise zero-sum Rock-Paper-Scissors on every edge.
pub fn make_rps(network: &NetworkSpec) -> Result<NetworkGame> {
    make_sato(network, 0.0, 0.0)
}

/// Pairwise zero-sum matching pennies on every edge.
pub fn make_matching_pennies(network: &NetworkSpec) -> Result<NetworkGame> {
    let a = matrix(&[&[1.0, -1.0], &[-1.0, 1.0]]);
    let b = matrix(&[&[-1.0, 1.0], &[1.0, -1.0]]);
    symmetric_network_game(network, &a, &b)
}

/// Independent standard-normal payoffs on every edge of `network`, `actions[k]` actions
/// for agent `k`. Exploratory only.
pub fn make_random_game(
    network: &NetworkSpec,
    actions: &[usize],
    seed: u64,
) -> Result<NetworkGame> {
    let g = make_network(network)?;
    if actions.len() != g.nrows() {
        return Err(Error::InvalidParameter("one action count per agent".into()));
    }
    let mut rng = stream_rng(seed, 1);
    let mut normal = |r: usize, c: usize| {
        PayoffMatrix::from_matrix(DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal)))
            .expect("normal draws are finite")
    };
    let mut b = NetworkGame::builder(actions.to_vec());
    for (k, l) in edge_list(&g) {
        let a_kl = normal(actions[k], actions[l]);
        let a_lk = normal(actions[l], actions[k]);
        b = b.edge(k, l, a_kl, a_lk);
    }
    b.build()
}

fn default_alpha() -> f64 {
    7.0
}
fn default_chakraborty_beta() -> f64 {
    8.5
}
fn default_m() -> f64 {
    2.0
}
fn default_shapley_beta() -> f64 {
    0.2
}
fn default_eps_x() -> f64 {
    0.1
}
fn default_eps_y() -> f64 {
    -0.05
}

/// A catalog game addressed by name, as written in run configs, e.g.
/// `{"game": "shapley", "beta": 0.2, "network": {"kind": "ring", "n": 15}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "snake_case")]
pub enum GameSpec {
    Chakraborty {
        n: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_chakraborty_beta")]
        beta: f64,
    },
    Mismatching {
        n: usize,
        #[serde(default = "default_m")]
        m: f64,
    },
    Shapley {
        #[serde(default = "default_shapley_beta")]
        beta: f64,
        network: NetworkSpec,
    },
    Sato {
        #[serde(default = "default_eps_x")]
        eps_x: f64,
        #[serde(default = "default_eps_y")]
        eps_y: f64,
        network: NetworkSpec,
    },
    Rps {
        network: NetworkSpec,
    },
    MatchingPennies {
        network: NetworkSpec,
    },
    Random {
        network: NetworkSpec,
        #[serde(default = "default_random_actions")]
        actions: usize,
        #[serde(default)]
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

fn default_random_actions() -> usize {
    2
}

impl GameSpec {
    pub fn build(&self) -> Result<NetworkGame> {
        match self {
            GameSpec::Chakraborty { n, alpha, beta } => make_chakraborty(*n, *alpha, *beta),
            GameSpec::Mismatching { n, m } => make_mismatching(*n, *m),
            GameSpec::Shapley { beta, network } => make_shapley(network, *beta),
            GameSpec::Sato {
                eps_x,
                eps_y,
                network,
            } => make_sato(network, *eps_x, *eps_y),
            GameSpec::Rps { network } => make_rps(network),
            GameSpec::MatchingPennies { network } => make_matching_pennies(network),
            GameSpec::Random {
                network,
                actions,
                seed,
            } => make_random_game(network, &vec![*actions; network.num_agents()], *seed),
            GameSpec::File { path } => {
                load_game(path).map_err(|e| Error::InvalidParameter(e.to_string()))
            }
        }
    }

    /// The same game placed on a different topology. Directed-cycle games only
    /// exist on rings.
    pub fn with_network(&self, kind: NetworkKind, n: usize) -> Result<GameSpec> {
        let mut out = self.clone();
        match &mut out {
            GameSpec::Chakraborty { n: m, .. } | GameSpec::Mismatching { n: m, .. } => {
                if kind != NetworkKind::Ring {
                    return Err(Error::InvalidParameter(format!(
                        "{} is a directed-cycle game and only runs on rings",
                        self.name()
                    )));
                }
                *m = n;
            }
            GameSpec::Shapley { network, .. }
            | GameSpec::Sato { network, .. }
            | GameSpec::Rps { network }
            | GameSpec::MatchingPennies { network }
            | GameSpec::Random { network, .. } => *network = kind.spec(n),
            GameSpec::File { .. } => {
                return Err(Error::InvalidParameter(
                    "a game file has a fixed network".into(),
                ))
            }
        }
        Ok(out)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GameSpec::Chakraborty { .. } => "chakraborty",
            GameSpec::Mismatching { .. } => "mismatching",
            GameSpec::Shapley { .. } => "shapley",
            GameSpec::Sato { .. } => "sato",
            GameSpec::Rps { .. } => "rps",
            GameSpec::MatchingPennies { .. } => "matching_pennies",
            GameSpec::Random { .. } => "random",
            GameSpec::File { .. } => "file",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{reward, validate_game, JointStrategy};
    use crate::linalg::operator_inf_norm;
    use crate::spectral::interaction_coefficient;

    fn degrees(g: &DMatrix<f64>) -> Vec<usize> {
        g.row_iter()
            .map(|r| r.iter().filter(|&&v| v == 1.0).count())
            .collect()
    }

    #[test]
    fn topology_degrees() {
        assert_eq!(
            degrees(&make_network(&NetworkSpec::Ring { n: 5 }).unwrap()),
            vec![2; 5]
        );
        assert_eq!(
            degrees(&make_network(&NetworkSpec::Star { n: 5 }).unwrap()),
            vec![4, 1, 1, 1, 1]
        );
        let full2 = make_network(&NetworkSpec::Full { n: 2 }).unwrap();
        assert_eq!(edge_list(&full2), vec![(0, 1)]);
    }

    #[test]
    fn topology_inf_norms() {
        for n in 3..=20 {
            let ring = make_network(&NetworkSpec::Ring { n }).unwrap();
            let star = make_network(&NetworkSpec::Star { n }).unwrap();
            let full = make_network(&NetworkSpec::Full { n }).unwrap();
            assert_eq!(operator_inf_norm(&ring).unwrap(), 2.0);
            assert_eq!(operator_inf_norm(&star).unwrap(), (n - 1) as f64);
            assert_eq!(operator_inf_norm(&full).unwrap(), (n - 1) as f64);
            for g in [&ring, &star, &full] {
                assert_eq!(g, &g.transpose());
                assert!(g.diagonal().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn small_networks_are_rejected() {
        assert!(make_network(&NetworkSpec::Ring { n: 2 }).is_err());
        assert!(make_network(&NetworkSpec::Star { n: 1 }).is_err());
        assert!(make_network(&NetworkSpec::Full { n: 1 }).is_err());
        let bad = NetworkSpec::Custom {
            adjacency: vec![vec![0, 1], vec![0, 0]],
        };
        assert!(make_network(&bad).is_err());
    }

    #[test]
    fn random_network_is_seeded_and_symmetric() {
        let spec = NetworkSpec::Random {
            n: 12,
            p: 0.4,
            seed: 9,
        };
        let a = make_network(&spec).unwrap();
        assert_eq!(a, make_network(&spec).unwrap());
        assert_eq!(a, a.transpose());
        assert!(a.diagonal().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn chakraborty_structure() {
        let g = make_chakraborty(3, 7.0, 8.5).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert!((0..3).all(|k| g.degree(k) == 2));
        let reduced = make_chakraborty(4, 0.0, 0.0).unwrap();
        assert!((interaction_coefficient(&reduced).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_agent_cycle_fills_both_orientations() {
        let g = make_mismatching(2, 2.0).unwrap();
        assert_eq!(g.edges().len(), 1);
        let e = &g.edges()[0];
        assert_eq!(e.low_high, mismatching_matrix(2.0));
        assert_eq!(e.high_low, mismatching_matrix(2.0));
    }

    #[test]
    fn mismatching_coefficients() {
        let m2 = make_mismatching(3, 2.0).unwrap();
        assert!((interaction_coefficient(&m2).unwrap().value - 2.0).abs() < 1e-12);
        let m1 = make_mismatching(3, 1.0).unwrap();
        assert!((interaction_coefficient(&m1).unwrap().value - 1.0).abs() < 1e-12);
        assert!(make_mismatching(3, 0.5).is_err());
    }

    #[test]
    fn cycle_reward_depends_only_on_predecessor() {
        let g = make_chakraborty(4, 7.0, 8.5).unwrap();
        let base = JointStrategy::new(vec![vec![0.3, 0.7]; 4]).unwrap();
        let mut blocks = base.to_blocks();
        blocks[3] = vec![0.9, 0.1]; // successor of agent 2
        blocks[2] = vec![0.05, 0.95]; // agent 2 itself
        let moved = JointStrategy::new(blocks).unwrap();
        assert_eq!(
            reward(&g, 2, &base).unwrap(),
            reward(&g, 2, &moved).unwrap()
        );
    }

    #[test]
    fn shapley_sum_is_circulant() {
        for beta in [0.1, 0.2, 0.55, 0.9] {
            let (a, b) = shapley_matrices(beta);
            let s = a.as_matrix() + b.as_matrix().transpose();
            let row = [1.0 - beta, 0.0, 1.0 + beta];
            for i in 0..3 {
                for j in 0..3 {
                    assert!((s[(i, j)] - row[(j + 3 - i) % 3]).abs() < 1e-15);
                }
            }
        }
        assert!(make_shapley(&NetworkSpec::Ring { n: 3 }, 1.0).is_err());
        assert!(make_shapley(&NetworkSpec::Ring { n: 3 }, 0.0).is_err());
    }

    #[test]
    fn sato_coefficients() {
        let net = NetworkSpec::Ring { n: 4 };
        let d = |x, y| {
            interaction_coefficient(&make_sato(&net, x, y).unwrap())
                .unwrap()
                .value
        };
        assert!((d(0.1, -0.05) - 0.05).abs() < 1e-12);
        assert_eq!(d(0.0, 0.0), 0.0);
        assert!((d(0.3, 0.2) - 0.5).abs() < 1e-12);
        assert_eq!(d(0.07, -0.07), 0.0);
    }

    #[test]
    fn generated_games_validate() {
        let nets = [
            NetworkSpec::Ring { n: 5 },
            NetworkSpec::Star { n: 4 },
            NetworkSpec::Full { n: 6 },
        ];
        for net in &nets {
            for g in [
                make_shapley(net, 0.2).unwrap(),
                make_sato(net, 0.1, -0.05).unwrap(),
                make_rps(net).unwrap(),
                make_matching_pennies(net).unwrap(),
                make_random_game(net, &vec![3; net.num_agents()], 4).unwrap(),
            ] {
                assert!(validate_game(&g.to_description()).is_empty());
            }
        }
        for g in [
            make_chakraborty(5, 7.0, 8.5).unwrap(),
            make_mismatching(2, 2.0).unwrap(),
        ] {
            assert!(validate_game(&g.to_description()).is_empty());
        }
    }

    #[test]
    fn game_spec_parses_config_form() {
        let spec: GameSpec = serde_json::from_str(
            r#"{"game": "shapley", "beta": 0.2, "network": {"kind": "ring", "n": 15}}"#,
        )
        .unwrap();
        assert_eq!(
            spec,
            GameSpec::Shapley {
                beta: 0.2,
                network: NetworkSpec::Ring { n: 15 }
            }
        );
        assert_eq!(spec.build().unwrap().num_agents(), 15);
        let full = spec.with_network(NetworkKind::Full, 4).unwrap();
        assert_eq!(full.build().unwrap().edges().len(), 6);

        let cyc: GameSpec = serde_json::from_str(r#"{"game": "chakraborty", "n": 3}"#).unwrap();
        assert_eq!(
            cyc,
            GameSpec::Chakraborty {
                n: 3,
                alpha: 7.0,
                beta: 8.5
            }
        );
        assert!(cyc.with_network(NetworkKind::Star, 5).is_err());
    }
}
