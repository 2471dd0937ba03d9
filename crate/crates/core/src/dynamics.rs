//! Boltzmann Q-learning, its continuous-time limit, QRE computation, and the
//! final-window convergence test.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{dot, ExplorationRates, JointStrategy, NetworkGame, INTERIOR_FLOOR};

/// Per-agent Q-values, stored with the same layout as a [`JointStrategy`].
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl QState {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q-values".into()));
        }
        let mut offsets = vec![0];
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        Ok(Self {
            offsets,
            values: blocks.into_iter().flatten().collect(),
        })
    }

    pub fn zeros(action_counts: &[usize]) -> Self {
        Self::new(action_counts.iter().map(|&n| vec![0.0; n]).collect()).unwrap()
    }

    /// Q-values whose Boltzmann policy is `x`: `Q_k = T_k ln x_k`.
    pub fn from_strategy(x: &JointStrategy, rates: &ExplorationRates) -> Result<Self> {
        x.require_interior()?;
        if rates.len() != x.num_agents() {
            return Err(Error::ShapeMismatch(
                "one exploration rate per agent".into(),
            ));
        }
        Self::new(
            x.blocks()
                .enumerate()
                .map(|(k, b)| b.iter().map(|p| rates.get(k) * p.ln()).collect())
                .collect(),
        )
    }

    pub fn agent(&self, k: usize) -> &[f64] {
        &self.values[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn num_agents(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn softmax_into(q: &[f64], temperature: f64, out: &mut [f64]) {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(q) {
        *o = ((v - max) / temperature).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// `x_{ki} = exp(Q_{ki} / T_k) / sum_j exp(Q_{kj} / T_k)`, evaluated after subtracting
/// the per-agent maximum. Components can underflow to exactly 0 when Q-values are
/// hundreds of temperatures apart.
pub fn boltzmann_policy(q: &QState, rates: &ExplorationRates) -> Result<JointStrategy> {
    if rates.len() != q.num_agents() {
        return Err(Error::ShapeMismatch(
            "one exploration rate per agent".into(),
        ));
    }
    if q.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Q-values".into()));
    }
    let mut values = vec![0.0; q.values.len()];
    for k in 0..q.num_agents() {
        let (s, e) = (q.offsets[k], q.offsets[k + 1]);
        softmax_into(&q.values[s..e], rates.get(k), &mut values[s..e]);
    }
    Ok(JointStrategy::from_flat_unchecked(
        q.offsets.clone(),
        values,
    ))
}

fn check_alpha(alpha: &[f64], num_agents: usize) -> Result<()> {
    if alpha.len() != num_agents {
        return Err(Error::ShapeMismatch(format!(
            "{} learning rates for {num_agents} agents",
            alpha.len()
        )));
    }
    if let Some(k) = alpha.iter().position(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidParameter(format!(
            "learning rate alpha[{k}] = {} is outside [0, 1]",
            alpha[k]
        )));
    }
    Ok(())
}

/// One simultaneous Q-update: `Q_k <- (1 - alpha_k) Q_k + alpha_k r_k(x_{-k})` with `x`
/// the current Boltzmann policy.
pub fn q_learning_step(
    game: &NetworkGame,
    q: &QState,
    rates: &ExplorationRates,
    alpha: &[f64],
) -> Result<QState> {
    check_alpha(alpha, game.num_agents())?;
    let x = boltzmann_policy(q, rates)?;
    game.check_strategy(&x)?;
    let mut r = vec![0.0; game.dimension()];
    game.all_rewards_into(&x, &mut r);
    let mut next = q.clone();
    for k in 0..game.num_agents() {
        let a = alpha[k];
        for i in q.offsets[k]..q.offsets[k + 1] {
            next.values[i] = (1.0 - a) * q.values[i] + a * r[i];
        }
    }
    Ok(next)
}

// Field evaluation shared by the public entry point and the integrator. Stage values
// of an explicit step may graze zero; `ln` is taken of the clamped value there.
fn qld_field_into(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
    rewards: &mut [f64],
    out: &mut [f64],
) {
    game.all_rewards_into(x, rewards);
    let offsets = x.offsets();
    for k in 0..x.num_agents() {
        let (s, e) = (offsets[k], offsets[k + 1]);
        let xk = &x.as_slice()[s..e];
        let rk = &rewards[s..e];
        let mass: f64 = xk.iter().sum();
        let mean_reward = dot(xk, rk);
        let neg_entropy: f64 = xk.iter().map(|&p| p * p.max(f64::MIN_POSITIVE).ln()).sum();
        let t = rates.get(k);
        for i in 0..xk.len() {
            let p = xk[i];
            let log_ratio_mean = neg_entropy - mass * p.max(f64::MIN_POSITIVE).ln();
            out[s + i] = p * (rk[i] - mean_reward + t * log_ratio_mean);
        }
    }
}

/// Continuous-time Q-learning vector field
/// `dx_{ki}/dt = x_{ki} [r_{ki} - <x_k, r_k> + T_k sum_j x_{kj} ln(x_{kj} / x_{ki})]`.
pub fn qld_vector_field(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
) -> Result<Vec<f64>> {
    game.check_strategy(x)?;
    if rates.len() != game.num_agents() {
        return Err(Error::ShapeMismatch(
            "one exploration rate per agent".into(),
        ));
    }
    x.require_interior()?;
    let mut r = vec![0.0; game.dimension()];
    let mut out = vec![0.0; game.dimension()];
    qld_field_into(game, rates, x, &mut r, &mut out);
    Ok(out)
}

/// What to record along a trajectory and how to judge convergence at the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordingConfig {
    /// Number of integrator steps or Q-learning iterations.
    pub steps: usize,
    /// Record every `stride`-th state (the initial state is always recorded).
    pub stride: usize,
    /// Length `W` of the final window, in recorded states.
    pub window: usize,
    /// Convergence tolerance `l` on the relative range statistic.
    pub tolerance: f64,
    /// Keep only the last `retain` recorded states (at least `window`); `None` keeps all.
    pub retain: Option<usize>,
}

impl Default for RecordingConfig {
    fn default() -> Self {
        Self {
            steps: 20_000,
            stride: 1,
            window: 2_500,
            tolerance: 1e-5,
            retain: None,
        }
    }
}

impl RecordingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::InvalidParameter("stride must be positive".into()));
        }
        if self.window == 0 || self.window > self.steps / self.stride + 1 {
            return Err(Error::InvalidParameter(format!(
                "window {} must be in 1..={} for {} steps at stride {}",
                self.window,
                self.steps / self.stride + 1,
                self.steps,
                self.stride
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if let Some(r) = self.retain {
            if r < self.window {
                return Err(Error::InvalidParameter(
                    "retain must be at least window".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Time-indexed joint strategies plus the final-window convergence verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub time_points: Vec<f64>,
    pub states: Vec<JointStrategy>,
    pub window: usize,
    pub tolerance: f64,
    pub converged: bool,
    /// Max over agents and actions of `(max_t x - min_t x) / max_t x` on the final window.
    pub per_component_relative_range: f64,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &JointStrategy {
        self.states
            .last()
            .expect("trajectory records its initial state")
    }

    pub fn final_window(&self) -> &[JointStrategy] {
        &self.states[self.states.len() - self.window..]
    }
}

struct Recorder {
    stride: usize,
    retain: Option<usize>,
    times: VecDeque<f64>,
    states: VecDeque<JointStrategy>,
}

impl Recorder {
    fn new(cfg: &RecordingConfig) -> Self {
        Self {
            stride: cfg.stride,
            retain: cfg.retain,
            times: VecDeque::new(),
            states: VecDeque::new(),
        }
    }

    fn offer(&mut self, step: usize, time: f64, x: &JointStrategy) {
        if step % self.stride != 0 {
            return;
        }
        let slot = if self.retain.is_some_and(|r| self.states.len() == r) {
            self.times.pop_front();
            self.states.pop_front().map(|mut s| {
                s.as_mut_slice().copy_from_slice(x.as_slice());
                s
            })
        } else {
            None
        };
        self.times.push_back(time);
        self.states.push_back(slot.unwrap_or_else(|| x.clone()));
    }

    fn finish(self, cfg: &RecordingConfig) -> TrajectoryRecord {
        let states: Vec<JointStrategy> = self.states.into();
        let window = cfg.window.min(states.len());
        let verdict = convergence_check(&states[states.len() - window..], cfg.tolerance)
            .expect("window is non-empty");
        TrajectoryRecord {
            time_points: self.times.into(),
            states,
            window,
            tolerance: cfg.tolerance,
            converged: verdict.converged,
            per_component_relative_range: verdict.statistic,
        }
    }
}

fn check_start(game: &NetworkGame, rates: &ExplorationRates, x0: &JointStrategy) -> Result<()> {
    game.check_strategy(x0)?;
    if rates.len() != game.num_agents() {
        return Err(Error::ShapeMismatch(
            "one exploration rate per agent".into(),
        ));
    }
    x0.require_interior()
}

/// Classical fourth-order Runge-Kutta on [`qld_vector_field`] at fixed `dt`.
///
/// After every step each agent block is clamped to [`INTERIOR_FLOOR`] and renormalized.
pub fn integrate_qld(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x0: &JointStrategy,
    dt: f64,
    cfg: &RecordingConfig,
) -> Result<TrajectoryRecord> {
    check_start(game, rates, x0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be positive"
        )));
    }
    cfg.validate()?;

    let dim = game.dimension();
    let mut x = x0.clone();
    let mut stage = x0.clone();
    let mut r = vec![0.0; dim];
    let mut k = [
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    ];
    let mut rec = Recorder::new(cfg);
    rec.offer(0, 0.0, &x);

    for step in 1..=cfg.steps {
        let [k1, k2, k3, k4] = &mut k;
        qld_field_into(game, rates, &x, &mut r, k1);
        set_stage(&mut stage, &x, k1, 0.5 * dt);
        qld_field_into(game, rates, &stage, &mut r, k2);
        set_stage(&mut stage, &x, k2, 0.5 * dt);
        qld_field_into(game, rates, &stage, &mut r, k3);
        set_stage(&mut stage, &x, k3, dt);
        qld_field_into(game, rates, &stage, &mut r, k4);
        for (i, v) in x.as_mut_slice().iter_mut().enumerate() {
            *v += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
        x.clamp_to_floor(INTERIOR_FLOOR);
        rec.offer(step, step as f64 * dt, &x);
    }
    Ok(rec.finish(cfg))
}

fn set_stage(stage: &mut JointStrategy, x: &JointStrategy, k: &[f64], h: f64) {
    for ((s, a), b) in stage.as_mut_slice().iter_mut().zip(x.as_slice()).zip(k) {
        *s = a + h * b;
    }
}

/// Runs the discrete Boltzmann Q-learning algorithm from the Q-values whose policy is
/// `x0`, recording the policy after every update. Time points are iteration counts.
pub fn simulate_q_learning(
    game: &NetworkGame,
    rates: &ExplorationRates,
    alpha: &[f64],
    x0: &JointStrategy,
    cfg: &RecordingConfig,
) -> Result<TrajectoryRecord> {
    check_start(game, rates, x0)?;
    check_alpha(alpha, game.num_agents())?;
    cfg.validate()?;

    let mut q = QState::from_strategy(x0, rates)?;
    let offsets = q.offsets.clone();
    let mut x = x0.clone();
    let mut r = vec![0.0; game.dimension()];
    let mut rec = Recorder::new(cfg);
    rec.offer(0, 0.0, &x);

    for step in 1..=cfg.steps {
        game.all_rewards_into(&x, &mut r);
        for k in 0..game.num_agents() {
            let a = alpha[k];
            for i in offsets[k]..offsets[k + 1] {
                q.values[i] = (1.0 - a) * q.values[i] + a * r[i];
            }
        }
        if q.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
        for k in 0..game.num_agents() {
            let (s, e) = (offsets[k], offsets[k + 1]);
            softmax_into(&q.values[s..e], rates.get(k), x.agent_mut(k));
        }
        rec.offer(step, step as f64, &x);
    }
    Ok(rec.finish(cfg))
}

/// Settings for [`solve_qre`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QreConfig {
    /// Initial damping `gamma` in `x <- (1 - gamma) x + gamma L(x)`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QreConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QreSolution {
    pub strategies: JointStrategy,
    /// `|x - L(x)|_inf` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Logit response `L(x)_k = softmax(r_k(x_{-k}) / T_k)`.
pub fn logit_response(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
) -> Result<JointStrategy> {
    game.check_strategy(x)?;
    if rates.len() != game.num_agents() {
        return Err(Error::ShapeMismatch(
            "one exploration rate per agent".into(),
        ));
    }
    let mut r = vec![0.0; game.dimension()];
    let mut out = x.clone();
    logit_into(game, rates, x, &mut r, &mut out);
    Ok(out)
}

fn logit_into(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x: &JointStrategy,
    r: &mut [f64],
    out: &mut JointStrategy,
) {
    game.all_rewards_into(x, r);
    let offsets = x.offsets().to_vec();
    for k in 0..x.num_agents() {
        softmax_into(
            &r[offsets[k]..offsets[k + 1]],
            rates.get(k),
            out.agent_mut(k),
        );
    }
}

/// Iterations spent on damped fixed-point steps before switching to Newton.
const FIXED_POINT_PHASE: usize = 2_000;
const MIN_DAMPING: f64 = 1e-4;

/// Solves `x = L(x)` for the logit map `L`.
///
/// Damped fixed-point iteration first: the damping halves whenever the residual grows
/// and recovers by 10% per decrease, which tames the rotation that non-symmetric games
/// induce in the plain iteration. If that has not converged after a few thousand steps,
/// which happens when the QRE repels the iteration, the best iterate seeds a damped
/// Newton method on `x - L(x)`. Both phases share the `max_iter` budget. Fails with
/// [`Error::NoConvergence`] carrying the best residual seen.
pub fn solve_qre(
    game: &NetworkGame,
    rates: &ExplorationRates,
    x0: &JointStrategy,
    cfg: &QreConfig,
) -> Result<QreSolution> {
    game.check_strategy(x0)?;
    if rates.len() != game.num_agents() {
        return Err(Error::ShapeMismatch(
            "one exploration rate per agent".into(),
        ));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping {} must be in (0, 1]",
            cfg.damping
        )));
    }
    let mut x = x0.clone();
    let mut lx = x0.clone();
    let mut r = vec![0.0; game.dimension()];
    let mut gamma = cfg.damping;
    let mut previous = f64::INFINITY;
    let mut best = (f64::INFINITY, x0.clone());
    let phase = cfg.max_iter.min(FIXED_POINT_PHASE);
    for it in 0..=phase {
        logit_into(game, rates, &x, &mut r, &mut lx);
        let residual = x.distance_inf(&lx);
        if !residual.is_finite() {
            return Err(Error::NonFinite("QRE iterate".into()));
        }
        if residual < cfg.tol {
            return Ok(QreSolution {
                strategies: x,
                residual,
                iterations: it,
            });
        }
        if residual < best.0 {
            best = (residual, x.clone());
        }
        if it == phase {
            break;
        }
        if residual > previous {
            gamma = (gamma * 0.5).max(MIN_DAMPING);
        } else {
            gamma = (gamma * 1.1).min(cfg.damping);
        }
        previous = residual;
        for (a, b) in x.as_mut_slice().iter_mut().zip(lx.as_slice()) {
            *a = (1.0 - gamma) * *a + gamma * b;
        }
    }
    newton_qre(game, rates, best, phase, cfg)
}

// Damped Newton on G(x) = x - L(x). Row sums of each agent's block of dL/dx vanish, so
// the step keeps every block's mass; the step length keeps x strictly positive and is
// halved until the residual drops.
fn newton_qre(
    game: &NetworkGame,
    rates: &ExplorationRates,
    start: (f64, JointStrategy),
    spent: usize,
    cfg: &QreConfig,
) -> Result<QreSolution> {
    let dim = game.dimension();
    let offsets = game.offsets().to_vec();
    let (mut residual, mut x) = start;
    let mut lx = x.clone();
    let mut trial_l = x.clone();
    let mut r = vec![0.0; dim];
    let mut best = residual;
    for it in spent + 1..=cfg.max_iter {
        logit_into(game, rates, &x, &mut r, &mut lx);
        let mut jac = DMatrix::<f64>::identity(dim, dim);
        for k in 0..game.num_agents() {
            let lk = lx.agent(k);
            let t = rates.get(k);
            for (l, a) in game.interactions(k) {
                let a = a.as_matrix();
                for i in 0..lk.len() {
                    for j in 0..a.ncols() {
                        let mut v = lk[i] * a[(i, j)];
                        for (m, &lm) in lk.iter().enumerate() {
                            v -= lk[i] * lm * a[(m, j)];
                        }
                        jac[(offsets[k] + i, offsets[l] + j)] -= v / t;
                    }
                }
            }
        }
        let g = DVector::from_iterator(
            dim,
            x.as_slice().iter().zip(lx.as_slice()).map(|(a, b)| a - b),
        );
        let Some(step) = jac.lu().solve(&(-&g)) else {
            break;
        };
        let mut s = 1.0f64;
        for (xi, di) in x.as_slice().iter().zip(step.iter()) {
            if *di < 0.0 {
                s = s.min(0.99 * xi / -di);
            }
        }
        let mut accepted = None;
        while s > 1e-12 {
            let values: Vec<f64> = x
                .as_slice()
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + s * d)
                .collect();
            let trial = JointStrategy::from_flat_unchecked(offsets.clone(), values);
            logit_into(game, rates, &trial, &mut r, &mut trial_l);
            let res = trial.distance_inf(&trial_l);
            if res.is_finite() && res < residual {
                accepted = Some((res, trial));
                break;
            }
            s *= 0.5;
        }
        let Some((res, trial)) = accepted else {
            break;
        };
        residual = res;
        x = trial;
        best = best.min(residual);
        if residual < cfg.tol {
            x.clamp_to_floor(0.0);
            return Ok(QreSolution {
                strategies: x,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual: best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub converged: bool,
    pub statistic: f64,
}

/// Relative range test over a window of states: for every component,
/// `(max_t x - min_t x) / max_t x < l`. A component that is identically zero counts
/// as converged.
pub fn convergence_check(window: &[JointStrategy], tolerance: f64) -> Result<ConvergenceVerdict> {
    let first = window
        .first()
        .ok_or_else(|| Error::InvalidParameter("convergence window is empty".into()))?;
    let dim = first.dimension();
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut lo = vec![f64::INFINITY; dim];
    for s in window {
        if s.dimension() != dim {
            return Err(Error::ShapeMismatch(
                "states in window differ in shape".into(),
            ));
        }
        for (i, &v) in s.as_slice().iter().enumerate() {
            hi[i] = hi[i].max(v);
            lo[i] = lo[i].min(v);
        }
    }
    let statistic = hi
        .iter()
        .zip(&lo)
        .map(|(&h, &l)| if h == 0.0 { 0.0 } else { (h - l) / h })
        .fold(0.0, f64::max);
    Ok(ConvergenceVerdict {
        converged: statistic < tolerance,
        statistic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PayoffMatrix;

    fn zero_game(counts: Vec<usize>) -> NetworkGame {
        NetworkGame::builder(counts).build().unwrap()
    }

    fn matching_pennies() -> NetworkGame {
        let a = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let b = PayoffMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        NetworkGame::builder(vec![2, 2])
            .edge(0, 1, a, b)
            .build()
            .unwrap()
    }

    #[test]
    fn boltzmann_examples() {
        let t = ExplorationRates::uniform(1.0, 1).unwrap();
        let x = boltzmann_policy(&QState::new(vec![vec![0.0, 0.0]]).unwrap(), &t).unwrap();
        assert_eq!(x.agent(0), &[0.5, 0.5]);
        let x = boltzmann_policy(&QState::new(vec![vec![2f64.ln(), 0.0]]).unwrap(), &t).unwrap();
        assert!((x.agent(0)[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x.agent(0)[1] - 1.0 / 3.0).abs() < 1e-15);
        let x = boltzmann_policy(&QState::new(vec![vec![1000.0, 0.0]]).unwrap(), &t).unwrap();
        assert_eq!(x.agent(0)[0], 1.0);
        assert!(x.agent(0)[1] < 1e-300);
    }

    #[test]
    fn q_state_rejects_non_finite() {
        assert!(QState::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn q_step_extremes() {
        let g = matching_pennies();
        let t = ExplorationRates::uniform(0.7, 2).unwrap();
        let q = QState::new(vec![vec![0.3, -0.1], vec![0.2, 0.5]]).unwrap();
        let x = boltzmann_policy(&q, &t).unwrap();
        let full = q_learning_step(&g, &q, &t, &[1.0, 1.0]).unwrap();
        for k in 0..2 {
            assert_eq!(
                full.agent(k),
                crate::game::reward(&g, k, &x).unwrap().as_slice()
            );
        }
        let frozen = q_learning_step(&g, &q, &t, &[0.0, 0.0]).unwrap();
        assert_eq!(frozen, q);
        assert!(q_learning_step(&g, &q, &t, &[1.5, 0.1]).is_err());
        assert!(q_learning_step(&g, &q, &t, &[0.1]).is_err());
    }

    #[test]
    fn q_values_decay_geometrically_without_payoffs() {
        let g = zero_game(vec![2, 3]);
        let t = ExplorationRates::uniform(1.0, 2).unwrap();
        let q0 = QState::new(vec![vec![1.0, -2.0], vec![0.5, 4.0, -1.0]]).unwrap();
        let alpha = 0.1;
        let mut q = q0.clone();
        for _ in 0..25 {
            q = q_learning_step(&g, &q, &t, &[alpha, alpha]).unwrap();
        }
        let factor = (1.0f64 - alpha).powi(25);
        for (a, b) in q.as_slice().iter().zip(q0.as_slice()) {
            assert!((a - factor * b).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_is_rest_point_without_payoffs() {
        let g = zero_game(vec![3, 2]);
        let t = ExplorationRates::uniform(0.4, 2).unwrap();
        let f = qld_vector_field(&g, &t, &JointStrategy::uniform(&[3, 2])).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn single_agent_field_by_hand() {
        let g = zero_game(vec![2]);
        let t = ExplorationRates::uniform(1.0, 1).unwrap();
        let x = JointStrategy::new(vec![vec![0.9, 0.1]]).unwrap();
        let f = qld_vector_field(&g, &t, &x).unwrap();
        // x_i * T * sum_j x_j ln(x_j / x_i)
        let e0 = 0.9 * (0.9 * (0.9f64 / 0.9).ln() + 0.1 * (0.1f64 / 0.9).ln());
        let e1 = 0.1 * (0.9 * (0.9f64 / 0.1).ln() + 0.1 * (0.1f64 / 0.1).ln());
        assert!((f[0] - e0).abs() < 1e-15);
        assert!((f[1] - e1).abs() < 1e-15);
        assert!((f[0] + f[1]).abs() < 1e-15);
    }

    #[test]
    fn field_rejects_boundary() {
        let g = zero_game(vec![2]);
        let t = ExplorationRates::uniform(1.0, 1).unwrap();
        let x = JointStrategy::new(vec![vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            qld_vector_field(&g, &t, &x),
            Err(Error::BoundaryStrategy { .. })
        ));
    }

    #[test]
    fn qre_of_zero_game_is_uniform() {
        let g = zero_game(vec![2, 4]);
        for temp in [0.05, 1.0, 10.0] {
            let t = ExplorationRates::uniform(temp, 2).unwrap();
            let x0 = JointStrategy::new(vec![vec![0.9, 0.1], vec![0.1, 0.2, 0.3, 0.4]]).unwrap();
            let s = solve_qre(&g, &t, &x0, &QreConfig::default()).unwrap();
            assert!(s.strategies.distance_inf(&JointStrategy::uniform(&[2, 4])) < 1e-9);
        }
    }

    #[test]
    fn qre_of_matching_pennies_is_uniform() {
        let t = ExplorationRates::uniform(1.0, 2).unwrap();
        let x0 = JointStrategy::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let s = solve_qre(&matching_pennies(), &t, &x0, &QreConfig::default()).unwrap();
        assert!(s.residual < 1e-10);
        assert!(s.strategies.distance_inf(&JointStrategy::uniform(&[2, 2])) < 1e-9);
    }

    #[test]
    fn qre_reports_failure_with_best_residual() {
        let t = ExplorationRates::uniform(1.0, 2).unwrap();
        let x0 = JointStrategy::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let cfg = QreConfig {
            max_iter: 2,
            ..QreConfig::default()
        };
        match solve_qre(&matching_pennies(), &t, &x0, &cfg) {
            Err(Error::NoConvergence {
                iterations: 2,
                residual,
            }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convergence_statistic_examples() {
        let c = JointStrategy::new(vec![vec![0.4, 0.6]]).unwrap();
        let v = convergence_check(&vec![c; 10], 1e-12).unwrap();
        assert_eq!(v.statistic, 0.0);
        assert!(v.converged);

        let a = JointStrategy::new(vec![vec![0.2, 0.8]]).unwrap();
        let b = JointStrategy::new(vec![vec![0.8, 0.2]]).unwrap();
        let v = convergence_check(&[a, b], 1e-5).unwrap();
        assert!((v.statistic - 0.75).abs() < 1e-15);
        assert!(!v.converged);

        let z = JointStrategy::new(vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            convergence_check(&[z.clone(), z], 1e-5).unwrap().statistic,
            0.0
        );

        assert!(convergence_check(&[], 1e-5).is_err());
    }

    #[test]
    fn geometric_decay_converges_in_late_window() {
        // x(t) = p* + 0.3 * 0.99^t * d with d tangent to the simplex
        let states: Vec<JointStrategy> = (0..20_000)
            .map(|t| {
                let e = 0.3 * 0.99f64.powi(t);
                JointStrategy::new(vec![vec![0.4 + e, 0.6 - e]]).unwrap()
            })
            .collect();
        let late = &states[states.len() - 2500..];
        assert!(convergence_check(late, 1e-5).unwrap().converged);
        let early = &states[..2500];
        assert!(!convergence_check(early, 1e-5).unwrap().converged);
    }

    #[test]
    fn recording_config_is_checked() {
        let bad = RecordingConfig {
            steps: 10,
            window: 50,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RecordingConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(RecordingConfig::default().validate().is_ok());
    }

    #[test]
    fn retained_window_matches_full_record() {
        let g = matching_pennies();
        let t = ExplorationRates::uniform(0.5, 2).unwrap();
        let x0 = JointStrategy::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let full = RecordingConfig {
            steps: 400,
            window: 50,
            ..Default::default()
        };
        let kept = RecordingConfig {
            retain: Some(60),
            ..full
        };
        let a = integrate_qld(&g, &t, &x0, 0.01, &full).unwrap();
        let b = integrate_qld(&g, &t, &x0, 0.01, &kept).unwrap();
        assert_eq!(b.states.len(), 60);
        assert_eq!(a.final_window(), b.final_window());
        assert_eq!(
            a.per_component_relative_range,
            b.per_component_relative_range
        );
    }
}
