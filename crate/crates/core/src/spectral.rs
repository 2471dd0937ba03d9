//! Interaction coefficient, the exploration-rate stability threshold, and numerical
//! checks of the monotonicity argument behind it.
//!
//! For exploration rates `T_k` the entropy-perturbed game has pseudo-gradient
//! `F_k(x) = -(r_k(x) - T_k (ln x_k + 1))` and pseudo-Hessian `J = D + N` with
//! `D = blockdiag(T_k diag(1 / x_k))` and `N_{kl} = -A^{kl}` on edges. Whenever
//! `min_k T_k > delta_S * |G|_inf / 2`, the symmetric part of `J` is positive definite
//! on the whole simplex, which makes the learning dynamics converge to a unique QRE.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Edge, ExplorationRates, JointStrategy, NetworkGame};
use crate::linalg::{
    lambda_min, operator_inf_norm, operator_one_norm, operator_two_norm, symmetrize,
};
use crate::sampling::{random_joint_strategy, stream_rng};

/// Interior floor for certificate sample points.
pub const CERTIFICATE_FLOOR: f64 = 1e-9;
/// Slack allowed between the observed minimum eigenvalue and the theoretical bound.
pub const CERTIFICATE_SLACK: f64 = 1e-8;

/// `A^{low,high} + (A^{high,low})^T`; its 2-norm is orientation independent.
pub fn edge_interaction_matrix(edge: &Edge) -> DMatrix<f64> {
    edge.low_high.as_matrix() + edge.high_low.as_matrix().transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeNorm {
    pub k: usize,
    pub l: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionCoefficient {
    pub value: f64,
    pub per_edge: Vec<EdgeNorm>,
    /// Set when the game has no edges; `value` is then 0.
    pub no_edges: bool,
}

/// `delta_S = max over edges of |A^{kl} + (A^{lk})^T|_2`.
pub fn interaction_coefficient(game: &NetworkGame) -> Result<InteractionCoefficient> {
    let per_edge = game
        .edges()
        .iter()
        .map(|e| {
            Ok(EdgeNorm {
                k: e.low,
                l: e.high,
                norm: operator_two_norm(&edge_interaction_matrix(e))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let no_edges = per_edge.is_empty();
    if no_edges {
        warn!("game has no edges; interaction coefficient is 0");
    }
    Ok(InteractionCoefficient {
        value: per_edge.iter().map(|e| e.norm).fold(0.0, f64::max),
        per_edge,
        no_edges,
    })
}

/// Stability certificate inputs for one game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub delta_s: f64,
    pub g_inf_norm: f64,
    pub g_one_norm: f64,
    /// Reported only; never used in `threshold`.
    pub g_two_norm: f64,
    /// `0.5 * delta_s * g_inf_norm`
    pub threshold: f64,
    /// Keyed `"k-l"` with `k < l`.
    pub per_edge_norms: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl StabilityReport {
    /// True when the rates satisfy the sufficient condition `min_k T_k > threshold`.
    pub fn certifies(&self, rates: &ExplorationRates) -> bool {
        rates.min() > self.threshold
    }
}

pub fn stability_threshold(game: &NetworkGame) -> Result<StabilityReport> {
    let delta = interaction_coefficient(game)?;
    let g = game.adjacency();
    let g_inf_norm = operator_inf_norm(&g)?;
    let g_one_norm = operator_one_norm(&g)?;
    let g_two_norm = operator_two_norm(&g)?;
    let mut warnings = Vec::new();
    if delta.no_edges {
        warnings.push("game has no edges".to_owned());
    }
    Ok(StabilityReport {
        delta_s: delta.value,
        g_inf_norm,
        g_one_norm,
        g_two_norm,
        threshold: 0.5 * delta.value * g_inf_norm,
        per_edge_norms: delta
            .per_edge
            .iter()
            .map(|e| (format!("{}-{}", e.k, e.l), e.norm))
            .collect(),
        warnings,
    })
}

fn check_rates(game: &NetworkGame, rates: &ExplorationRates) -> Result<()> {
    if rates.len() != game.num_agents() {
        return Err(Error::ShapeMismatch(format!(
            "{} exploration rates for {} agents",
            rates.len(),
            game.num_agents()
        )));
    }
    Ok(())
}

/// Pseudo-gradient of the entropy-perturbed game, flat and agent-major.
pub fn pseudo_gradient(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
) -> Result<DVector<f64>> {
    check_rates(game, rates)?;
    game.check_strategy(x)?;
    x.require_interior()?;
    let mut r = vec![0.0; game.dimension()];
    game.all_rewards_into(x, &mut r);
    let offsets = game.offsets();
    Ok(DVector::from_fn(game.dimension(), |idx, _| {
        let k = offsets.partition_point(|&o| o <= idx) - 1;
        -(r[idx] - rates.get(k) * (x.as_slice()[idx].ln() + 1.0))
    }))
}

/// Entropy part `D(x)` and network part `N` of the pseudo-Hessian.
pub fn pseudo_hessian_parts(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_rates(game, rates)?;
    game.check_strategy(x)?;
    x.require_interior()?;
    let dim = game.dimension();
    let offsets = game.offsets();
    let mut d = DMatrix::zeros(dim, dim);
    for k in 0..game.num_agents() {
        for (i, &p) in x.agent(k).iter().enumerate() {
            let idx = offsets[k] + i;
            d[(idx, idx)] = rates.get(k) / p;
        }
    }
    let mut n = DMatrix::zeros(dim, dim);
    for e in game.edges() {
        let (lo, hi) = (offsets[e.low], offsets[e.high]);
        let a = e.low_high.as_matrix();
        n.view_mut((lo, hi), a.shape()).copy_from(&(-a));
        let b = e.high_low.as_matrix();
        n.view_mut((hi, lo), b.shape()).copy_from(&(-b));
    }
    Ok((d, n))
}

/// Jacobian of [`pseudo_gradient`]: `J(x) = D(x) + N`.
pub fn pseudo_hessian(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
) -> Result<DMatrix<f64>> {
    let (d, n) = pseudo_hessian_parts(game, rates, x)?;
    Ok(d + n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityCertificate {
    pub sampled_points: usize,
    /// Minimum over samples of `lambda_min((J + J^T) / 2)`.
    pub min_eigenvalue_observed: f64,
    /// `T - delta_S |G|_inf / 2` with `T = min_k T_k`.
    pub theoretical_lower_bound: f64,
    pub satisfied: bool,
}

/// Samples interior points, evaluates the symmetrized pseudo-Hessian's smallest
/// eigenvalue at each, and compares the minimum with the theoretical lower bound.
///
/// Sample `i` is drawn from RNG stream `i` under `seed`, so results do not depend on
/// how rayon schedules the work.
pub fn monotonicity_certificate(
    game: &NetworkGame,
    rates: &ExplorationRates,
    num_samples: usize,
    seed: u64,
) -> Result<MonotonicityCertificate> {
    if num_samples == 0 {
        return Err(Error::InvalidParameter(
            "num_samples must be at least 1".into(),
        ));
    }
    check_rates(game, rates)?;
    let report = stability_threshold(game)?;
    let bound = rates.min() - report.threshold;
    let min_observed = (0..num_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let x = random_joint_strategy(&mut rng, game.action_counts(), CERTIFICATE_FLOOR);
            lambda_min(&symmetrize(&pseudo_hessian(game, rates, &x)?))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(MonotonicityCertificate {
        sampled_points: num_samples,
        min_eigenvalue_observed: min_observed,
        theoretical_lower_bound: bound,
        satisfied: min_observed >= bound - CERTIFICATE_SLACK,
    })
}

/// Both sides of the block two-norm bound
/// `|N|_2 <= sqrt(|G|_1 |G|_inf) * max_{ij} |A_ij|_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockNormCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl BlockNormCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-9 * self.rhs.max(1.0)
    }
}

/// Assembles the block matrix with `blocks[(i, j)]` wherever `g[(i, j)] == 1` and
/// evaluates both sides of the bound. `sizes[i]` is the row count of block row `i`.
pub fn block_norm_bound(
    g: &DMatrix<f64>,
    sizes: &[usize],
    blocks: &BTreeMap<(usize, usize), DMatrix<f64>>,
) -> Result<BlockNormCheck> {
    let n = g.nrows();
    if g.ncols() != n || sizes.len() != n {
        return Err(Error::ShapeMismatch(
            "G must be square with one size per row".into(),
        ));
    }
    let mut offsets = vec![0usize];
    for s in sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let dim = offsets[n];
    let mut big = DMatrix::zeros(dim, dim);
    let mut max_block = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let gij = g[(i, j)];
            if gij != 0.0 && gij != 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "G[{i}][{j}] = {gij} is not 0/1"
                )));
            }
            match (gij == 1.0, blocks.get(&(i, j))) {
                (true, Some(b)) => {
                    if b.shape() != (sizes[i], sizes[j]) {
                        return Err(Error::ShapeMismatch(format!(
                            "block ({i}, {j}) is {:?}, expected {:?}",
                            b.shape(),
                            (sizes[i], sizes[j])
                        )));
                    }
                    big.view_mut((offsets[i], offsets[j]), b.shape())
                        .copy_from(b);
                    max_block = max_block.max(operator_two_norm(b)?);
                }
                (true, None) => {
                    return Err(Error::InvalidParameter(format!("missing block ({i}, {j})")))
                }
                (false, Some(_)) => {
                    return Err(Error::InvalidParameter(format!(
                        "block ({i}, {j}) where G is 0"
                    )))
                }
                (false, None) => {}
            }
        }
    }
    let lhs = operator_two_norm(&big)?;
    let rhs = (operator_one_norm(g)? * operator_inf_norm(g)?).sqrt() * max_block;
    Ok(BlockNormCheck { lhs, rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport<C> {
    pub checks: Vec<C>,
    pub violations: usize,
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Runs [`block_norm_bound`] on `trials` random Gaussian block fillings of `g`,
/// each block `block_dim x block_dim`.
pub fn verify_block_norm_lemma(
    g: &DMatrix<f64>,
    block_dim: usize,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport<BlockNormCheck>> {
    let sizes = vec![block_dim; g.nrows()];
    let checks = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let mut blocks = BTreeMap::new();
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    if g[(i, j)] == 1.0 {
                        blocks.insert((i, j), gaussian_matrix(&mut rng, block_dim, block_dim));
                    }
                }
            }
            block_norm_bound(g, &sizes, &blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = checks.iter().filter(|c| !c.holds()).count();
    Ok(LemmaReport { checks, violations })
}

/// `lambda_min(D + N)` against `lambda_min(D) + lambda_min(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl WeylCheck {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs - 1e-9
    }
}

pub fn weyl_check(d: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<WeylCheck> {
    if d.shape() != n.shape() || !d.is_square() {
        return Err(Error::ShapeMismatch(
            "Weyl check needs square matrices of equal size".into(),
        ));
    }
    Ok(WeylCheck {
        lhs: lambda_min(&(d + n))?,
        rhs: lambda_min(d)? + lambda_min(n)?,
    })
}

/// Weyl's lower bound on `trials` random symmetric pairs of size `1..=max_dim`.
pub fn verify_weyl(max_dim: usize, trials: usize, seed: u64) -> Result<LemmaReport<WeylCheck>> {
    if max_dim == 0 {
        return Err(Error::InvalidParameter("max_dim must be positive".into()));
    }
    let checks = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let dim = rng.random_range(1..=max_dim);
            let d = symmetrize(&gaussian_matrix(&mut rng, dim, dim));
            let n = symmetrize(&gaussian_matrix(&mut rng, dim, dim));
            weyl_check(&d, &n)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = checks.iter().filter(|c| !c.holds()).count();
    Ok(LemmaReport { checks, violations })
}
