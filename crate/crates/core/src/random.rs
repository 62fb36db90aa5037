//! Seeded generators for distributions, joints and subspaces.
//!
//! Everything is driven by `ChaCha8Rng`, whose output is fixed across
//! platforms and releases of `rand_chacha`, so a seed reproduces the same
//! fixtures everywhere.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{Dist, JointDist};
use crate::gf2::Subspace;

/// Identifier recorded next to every seed.
pub const PRNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3)";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    // -ln(U) gives Dirichlet(1, ..., 1) after normalization
    let raw: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-12)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Random law on `support` distinct points of F_2^n (clamped to `2^n`).
pub fn random_dist<R: Rng>(rng: &mut R, n: usize, support: usize) -> Dist {
    let size = 1usize << n;
    let k = support.clamp(1, size);
    let points = sample(rng, size, k).into_vec();
    let w = weights(rng, k);
    let mut mass = vec![0.0; size];
    for (x, p) in points.into_iter().zip(w) {
        mass[x] = p;
    }
    Dist::from_raw(n, mass).expect("weights are normalized")
}

/// Random law whose support size is itself uniform in `1..=2^n`.
pub fn random_dist_any_support<R: Rng>(rng: &mut R, n: usize) -> Dist {
    let support = rng.gen_range(1..=(1usize << n));
    random_dist(rng, n, support)
}

/// Uniform law on a random subset of F_2^n.
pub fn random_uniform_set<R: Rng>(rng: &mut R, n: usize, size: usize) -> Dist {
    let total = 1usize << n;
    let k = size.clamp(1, total);
    let p = 1.0 / k as f64;
    let mut mass = vec![0.0; total];
    for x in sample(rng, total, k).into_vec() {
        mass[x] = p;
    }
    Dist::from_raw(n, mass).expect("uniform weights are normalized")
}

/// Random joint over blocks of the given dimensions with `support` atoms.
pub fn random_joint<R: Rng>(rng: &mut R, dims: &[usize], support: usize) -> JointDist {
    let bits: usize = dims.iter().sum();
    let size = 1usize << bits;
    let k = support.clamp(1, size);
    let points = sample(rng, size, k).into_vec();
    let w = weights(rng, k);
    let mut mass = vec![0.0; size];
    for (x, p) in points.into_iter().zip(w) {
        mass[x] = p;
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    JointDist::new(dims, mass).expect("random joint is valid")
}

/// Span of `k` uniformly random vectors.
pub fn random_subspace<R: Rng>(rng: &mut R, n: usize, generators: usize) -> Subspace {
    let masks: Vec<u32> = (0..generators)
        .map(|_| rng.gen_range(0..(1u64 << n)) as u32)
        .collect();
    Subspace::span_masks(n, &masks).expect("masks fit in n bits")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_dist(&mut rng(11), 5, 9);
        let b = random_dist(&mut rng(11), 5, 9);
        assert_eq!(a, b);
        assert_eq!(a.support().len(), 9);
        assert!((a.total() - 1.0).abs() < 1e-12);
        let v = random_subspace(&mut rng(3), 6, 3);
        assert_eq!(v, random_subspace(&mut rng(3), 6, 3));
        assert!(v.dim() <= 3);
    }
}
