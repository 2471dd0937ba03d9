use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(x_k) == 1` for a point of the product simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Floor used for strictly interior strategies (entropy and pseudo-Hessian need `ln x`).
pub const INTERIOR_FLOOR: f64 = 1e-12;

/// A point of the product simplex: one probability vector per agent, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStrategy {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl JointStrategy {
    /// Builds a joint strategy from per-agent blocks, checking every block lies on its simplex.
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (k, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::ShapeMismatch(format!(
                    "agent {k} has an empty strategy"
                )));
            }
            if let Some(i) = block.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("strategy x[{k}][{i}]")));
            }
            if let Some(i) = block.iter().position(|&v| v < 0.0) {
                return Err(Error::NotOnSimplex(format!(
                    "x[{k}][{i}] = {} is negative",
                    block[i]
                )));
            }
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::NotOnSimplex(format!("x[{k}] sums to {sum}")));
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        Ok(Self {
            offsets,
            values: blocks.into_iter().flatten().collect(),
        })
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        let blocks = action_counts
            .iter()
            .map(|&n| vec![1.0 / n as f64; n])
            .collect();
        Self::new(blocks).expect("uniform strategy is on the simplex")
    }

    /// Wraps a flat vector without checking simplex membership.
    pub(crate) fn from_flat_unchecked(offsets: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(*offsets.last().unwrap(), values.len());
        Self { offsets, values }
    }

    pub fn num_agents(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn agent(&self, k: usize) -> &[f64] {
        &self.values[self.offsets[k]..self.offsets[k + 1]]
    }

    pub(crate) fn agent_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.offsets.windows(2).map(|w| &self.values[w[0]..w[1]])
    }

    pub fn to_blocks(&self) -> Vec<Vec<f64>> {
        self.blocks().map(<[f64]>::to_vec).collect()
    }

    /// All components, agent-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// True when every component is at least `floor`.
    pub fn is_interior(&self, floor: f64) -> bool {
        self.values.iter().all(|&v| v >= floor)
    }

    /// First component that is not strictly positive, as `(agent, action, value)`.
    pub fn first_boundary_component(&self) -> Option<(usize, usize, f64)> {
        for k in 0..self.num_agents() {
            if let Some(i) = self.agent(k).iter().position(|&v| v <= 0.0) {
                return Some((k, i, self.agent(k)[i]));
            }
        }
        None
    }

    pub(crate) fn require_interior(&self) -> Result<()> {
        match self.first_boundary_component() {
            Some((agent, action, value)) => Err(Error::BoundaryStrategy {
                agent,
                action,
                value,
            }),
            None => Ok(()),
        }
    }

    /// Raises every component to at least `floor` and renormalizes each agent block.
    ///
    /// This is the only place where strategies are silently moved back into the interior;
    /// the integrators call it after each step.
    pub fn clamp_to_floor(&mut self, floor: f64) {
        for k in 0..self.num_agents() {
            clamp_block(self.agent_mut(k), floor);
        }
    }

    /// Largest absolute componentwise difference.
    pub fn distance_inf(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for JointStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_blocks().serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let blocks = Vec::<Vec<f64>>::deserialize(d)?;
        JointStrategy::new(blocks).map_err(serde::de::Error::custom)
    }
}

/// Per-agent exploration rates (Boltzmann temperatures), all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplorationRates(Vec<f64>);

impl ExplorationRates {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(k) = rates.iter().position(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exploration rate T[{k}] = {} must be a positive finite number",
                rates[k]
            )));
        }
        Ok(Self(rates))
    }

    pub fn uniform(rate: f64, num_agents: usize) -> Result<Self> {
        Self::new(vec![rate; num_agents])
    }

    #[cfg(test)]
    pub(crate) fn zeros_for_test(num_agents: usize) -> Self {
        Self(vec![0.0; num_agents])
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `T = min_k T_k`, the rate that enters the stability condition.
    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

// Entries at or below `floor` are pinned to it; the rest share the remaining mass.
// Rescaling can push a free entry under the floor, so repeat until nothing moves.
fn clamp_block(block: &mut [f64], floor: f64) {
    if block.iter().all(|v| v.is_finite() && *v > floor) {
        let sum: f64 = block.iter().sum();
        if (sum - 1.0).abs() <= f64::EPSILON * block.len() as f64 {
            return;
        }
    }
    for v in block.iter_mut() {
        if !v.is_finite() {
            *v = floor;
        }
    }
    for _ in 0..block.len() + 1 {
        let mut pinned = 0usize;
        let mut free_mass = 0.0;
        for v in block.iter_mut() {
            if *v <= floor {
                *v = floor;
                pinned += 1;
            } else {
                free_mass += *v;
            }
        }
        if pinned == block.len() || free_mass <= 0.0 {
            block.fill(1.0 / block.len() as f64);
            return;
        }
        let scale = (1.0 - floor * pinned as f64) / free_mass;
        let mut moved_below = false;
        for v in block.iter_mut() {
            if *v > floor {
                *v *= scale;
                moved_below |= *v <= floor;
            }
        }
        if !moved_below {
            return;
        }
    }
}

/// Shannon entropy `-sum x ln x`, with `0 ln 0 = 0`.
pub fn entropy(x: &[f64]) -> f64 {
    -x.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_off_simplex_blocks() {
        assert!(JointStrategy::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(JointStrategy::new(vec![vec![1.5, -0.5]]).is_err());
        assert!(JointStrategy::new(vec![vec![f64::NAN, 1.0]]).is_err());
        assert!(JointStrategy::new(vec![vec![0.3, 0.7], vec![1.0]]).is_ok());
    }

    #[test]
    fn clamp_keeps_floor_and_normalization() {
        let mut x = JointStrategy::from_flat_unchecked(vec![0, 3], vec![0.0, -1e-3, 1.2]);
        x.clamp_to_floor(1e-9);
        let b = x.agent(0);
        assert!(b.iter().all(|&v| v >= 1e-9 * (1.0 - 1e-12)));
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(b[2] > 0.99);
    }

    #[test]
    fn clamp_is_identity_on_interior_points() {
        let mut x = JointStrategy::new(vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let before = x.clone();
        x.clamp_to_floor(1e-9);
        assert!(x.distance_inf(&before) < 1e-15);
    }

    #[test]
    fn rates_must_be_positive() {
        assert!(ExplorationRates::new(vec![1.0, 0.0]).is_err());
        assert!(ExplorationRates::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(ExplorationRates::new(vec![2.0, 0.5]).unwrap().min(), 0.5);
    }

    #[test]
    fn entropy_of_uniform_is_log_n() {
        assert!((entropy(&[0.25; 4]) - 4f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
    }
}
