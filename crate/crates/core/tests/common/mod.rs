//! Brute-force reference computations shared by the integration tests. Only
//! plain loops and hash maps here, nothing from the library's transforms.
#![allow(dead_code)]

use std::collections::HashMap;
use std::hash::Hash;

use entropic_doubling::random::random_subspace;
use entropic_doubling::Dist;
use rand::Rng;

pub fn entropy<K: Eq + Hash>(law: &HashMap<K, f64>) -> f64 {
    law.values()
        .filter(|&&m| m > 0.0)
        .map(|&m| -m * m.log2())
        .sum()
}

pub fn entropy_of(mass: &[f64]) -> f64 {
    mass.iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| -m * m.log2())
        .sum()
}

/// All elements of the span of `gens`, by closing under XOR.
pub fn span(gens: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32];
    for &g in gens {
        if out.contains(&g) {
            continue;
        }
        let shifted: Vec<u32> = out.iter().map(|&e| e ^ g).collect();
        out.extend(shifted);
    }
    out.sort_unstable();
    out
}

/// Coset label of `x` modulo the subspace with elements `v`.
pub fn coset_rep(x: u32, v: &[u32]) -> u32 {
    v.iter().map(|&e| e ^ x).min().unwrap()
}

/// Law of `f(X)` for `X ~ mass`.
pub fn push<K: Eq + Hash>(mass: &[f64], f: impl Fn(u32) -> K) -> HashMap<K, f64> {
    let mut law = HashMap::new();
    for (x, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            *law.entry(f(x as u32)).or_insert(0.0) += m;
        }
    }
    law
}

/// Law of `f(X, Y)` for independent `X ~ p`, `Y ~ q`.
pub fn push2<K: Eq + Hash>(p: &[f64], q: &[f64], f: impl Fn(u32, u32) -> K) -> HashMap<K, f64> {
    let mut law = HashMap::new();
    for (x, &a) in p.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (y, &b) in q.iter().enumerate() {
            if b > 0.0 {
                *law.entry(f(x as u32, y as u32)).or_insert(0.0) += a * b;
            }
        }
    }
    law
}

pub fn convolve(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for (x, &a) in p.iter().enumerate() {
        for (y, &b) in q.iter().enumerate() {
            out[x ^ y] += a * b;
        }
    }
    out
}

/// `H[pi_V X]` with `v` given by its elements.
pub fn quotient_entropy(mass: &[f64], v: &[u32]) -> f64 {
    entropy(&push(mass, |x| coset_rep(x, v)))
}

/// Near-uniform law on a random coset of a random proper subspace, plus a
/// little full-support noise. Gives pairs with real additive structure.
pub fn structured<R: Rng>(r: &mut R, n: usize) -> Dist {
    let g = r.gen_range(1..n.max(2));
    let v = random_subspace(r, n, g);
    let shift: u32 = r.gen_range(0..1u32 << n);
    let mut mass = vec![0.0; 1 << n];
    for e in v.element_masks() {
        mass[(e ^ shift) as usize] += r.gen_range(0.5..1.5);
    }
    let noise = r.gen_range(0.0..0.2);
    for m in mass.iter_mut() {
        *m += noise * r.gen::<f64>() / (1 << n) as f64;
    }
    let t: f64 = mass.iter().sum();
    Dist::new(n, mass.into_iter().map(|m| m / t).collect()).unwrap()
}

/// A structured pair; half the time `Y` is a copy of `X`.
pub fn structured_pair<R: Rng>(r: &mut R, n: usize) -> (Dist, Dist) {
    let p = structured(r, n);
    let q = if r.gen_bool(0.5) {
        p.clone()
    } else {
        structured(r, n)
    };
    (p, q)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
