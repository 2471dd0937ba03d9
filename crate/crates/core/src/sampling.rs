//! Seeded random streams and simplex sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::game::JointStrategy;

/// Independent RNG stream `stream` under `seed`. Same pair, same numbers, on any thread.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a list of integers into one stream id (FNV-1a over little-endian bytes).
pub fn stream_id(parts: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Uniform point of the `n`-simplex, i.e. a Dirichlet(1, ..., 1) draw.
pub fn dirichlet_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

/// Independent Dirichlet(1, ..., 1) strategy per agent, clamped to `floor` and renormalized.
pub fn random_joint_strategy<R: Rng + ?Sized>(
    rng: &mut R,
    action_counts: &[usize],
    floor: f64,
) -> JointStrategy {
    let blocks = action_counts
        .iter()
        .map(|&n| dirichlet_uniform(rng, n))
        .collect();
    let mut x = JointStrategy::new(blocks).expect("dirichlet draw lies on the simplex");
    x.clamp_to_floor(floor);
    x
}
