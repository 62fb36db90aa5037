//! Entropy calculus over F_2^n, in bits.
//!
//! Every conditional functional is computed from exact tables. Quantities
//! that involve a quotient `pi_V` are evaluated fiber by fiber: the law of
//! `X` restricted to a coset `t + V` is stored in the coordinates of `V`'s
//! canonical basis, so fiber sums `X_t + Y_r` are convolutions over `V` only.

use serde::{Deserialize, Serialize};

use crate::dist::{compress_quotient, wht_in_place, xor_convolve, Dist, Fibers, JointDist};
use crate::error::{Error, Result};
use crate::gf2::Subspace;
use crate::tol;

// ============================================================================
// Basic functionals
// ============================================================================

/// `-sum p log2 p` over masses above the floor.
pub fn entropy_of_masses<'a>(masses: impl IntoIterator<Item = &'a f64>) -> f64 {
    let h: f64 = masses
        .into_iter()
        .filter(|&&p| p > tol::MASS_FLOOR)
        .map(|&p| -p * p.log2())
        .sum();
    // -0.0 and sub-ulp negatives from cancellation
    h.max(0.0)
}

pub fn shannon_entropy(p: &Dist) -> f64 {
    entropy_of_masses(p.mass())
}

/// Entropy of the listed blocks of a joint.
pub fn joint_entropy(j: &JointDist, blocks: &[usize]) -> Result<f64> {
    if blocks.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy_of_masses(j.marginal(blocks)?.mass()))
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = a.to_vec();
    for &x in b {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// `H[target | given] = H[target, given] - H[given]`.
pub fn conditional_entropy(j: &JointDist, target: &[usize], given: &[usize]) -> Result<f64> {
    j.check_blocks(target)?;
    j.check_blocks(given)?;
    Ok(joint_entropy(j, &union(target, given))? - joint_entropy(j, given)?)
}

/// `I[A : B] = H[A] + H[B] - H[A, B]`.
pub fn mutual_information(j: &JointDist, a: &[usize], b: &[usize]) -> Result<f64> {
    j.check_blocks(a)?;
    j.check_blocks(b)?;
    Ok(joint_entropy(j, a)? + joint_entropy(j, b)? - joint_entropy(j, &union(a, b))?)
}

/// `I[A : B | S] = H[A, S] + H[B, S] - H[A, B, S] - H[S]`.
pub fn conditional_mutual_information(
    j: &JointDist,
    a: &[usize],
    b: &[usize],
    s: &[usize],
) -> Result<f64> {
    j.check_blocks(a)?;
    j.check_blocks(b)?;
    j.check_blocks(s)?;
    let as_ = union(a, s);
    let bs = union(b, s);
    let abs = union(&union(a, b), s);
    Ok(joint_entropy(j, &as_)? + joint_entropy(j, &bs)?
        - joint_entropy(j, &abs)?
        - joint_entropy(j, s)?)
}

/// `d[X; Y] = H[X' + Y'] - H[X]/2 - H[Y]/2` for independent copies.
pub fn ruzsa_distance(p: &Dist, q: &Dist) -> Result<f64> {
    let s = xor_convolve(p, q)?;
    Ok(shannon_entropy(&s) - 0.5 * shannon_entropy(p) - 0.5 * shannon_entropy(q))
}

/// `s[X; Y] = H[X] + H[Y] - H[X' + Y']` for independent copies.
pub fn doubling_mass(p: &Dist, q: &Dist) -> Result<f64> {
    let s = xor_convolve(p, q)?;
    Ok(shannon_entropy(p) + shannon_entropy(q) - shannon_entropy(&s))
}

/// `E_{u,w} s[X_u; Y_w]` with the fibers drawn independently.
pub fn conditional_doubling_mass(fx: &Fibers, fy: &Fibers) -> Result<f64> {
    if fx.n() != fy.n() {
        return Err(Error::DimensionMismatch {
            expected: fx.n(),
            found: fy.n(),
        });
    }
    let hx: f64 = fx
        .entries
        .iter()
        .map(|f| f.weight * shannon_entropy(&f.dist))
        .sum();
    let hy: f64 = fy
        .entries
        .iter()
        .map(|f| f.weight * shannon_entropy(&f.dist))
        .sum();
    let tx = Transformed::new(fx.entries.iter().map(|f| (f.weight, f.dist.mass())));
    let ty = Transformed::new(fy.entries.iter().map(|f| (f.weight, f.dist.mass())));
    Ok(hx + hy - tx.expected_sum_entropy(&ty))
}

/// `H[pi_V(X)]`.
pub fn quotient_entropy(p: &Dist, v: &Subspace) -> Result<f64> {
    Ok(shannon_entropy(&compress_quotient(p, v)?))
}

/// `H[pi_V(X)]` computed as `H[X + U_V] - H[U_V]`.
pub fn quotient_entropy_via_uniform(p: &Dist, v: &Subspace) -> Result<f64> {
    let u = Dist::uniform_on_subspace(v)?;
    let smeared = xor_convolve(p, &u)?;
    Ok(shannon_entropy(&smeared) - v.dim() as f64)
}

/// `H[X | pi_V(X)] = H[X] - H[pi_V(X)]`.
pub fn fiber_entropy(p: &Dist, v: &Subspace) -> Result<f64> {
    Ok(shannon_entropy(p) - quotient_entropy(p, v)?)
}

// ============================================================================
// Fibers over cosets of a subspace
// ============================================================================

/// Laws of `X` restricted to each coset of `V`, in `V`-coordinates.
pub(crate) struct CosetFibers {
    pub weights: Vec<f64>,
    pub tables: Vec<Vec<f64>>,
}

impl CosetFibers {
    pub fn new(p: &Dist, v: &Subspace) -> Result<Self> {
        if p.n() != v.n() {
            return Err(Error::DimensionMismatch {
                expected: v.n(),
                found: p.n(),
            });
        }
        let pivots = v.pivots();
        let d = v.dim();
        let mut slot: Vec<usize> = vec![usize::MAX; p.mass().len()];
        let mut weights = Vec::new();
        let mut tables: Vec<Vec<f64>> = Vec::new();
        for (x, &px) in p.mass().iter().enumerate() {
            if px <= 0.0 {
                continue;
            }
            let t = v.reduce(x as u32);
            let inside = x as u32 ^ t;
            let coord = pivots
                .iter()
                .enumerate()
                .fold(0usize, |c, (i, &pv)| c | ((inside >> pv & 1) as usize) << i);
            if slot[t as usize] == usize::MAX {
                slot[t as usize] = tables.len();
                tables.push(vec![0.0; 1 << d]);
                weights.push(0.0);
            }
            let k = slot[t as usize];
            tables[k][coord] += px;
            weights[k] += px;
        }
        for (table, &w) in tables.iter_mut().zip(&weights) {
            table.iter_mut().for_each(|m| *m /= w);
        }
        Ok(Self { weights, tables })
    }

    /// `E_t H[X_t] = H[X | pi_V(X)]`.
    pub fn expected_entropy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.tables)
            .map(|(w, t)| w * entropy_of_masses(t))
            .sum()
    }
}

/// Weighted tables with their Walsh–Hadamard transforms precomputed, so
/// that the entropy of every pairwise convolution costs one inverse
/// transform.
pub(crate) struct Transformed {
    weights: Vec<f64>,
    spectra: Vec<Vec<f64>>,
}

impl Transformed {
    pub fn new<'a>(items: impl IntoIterator<Item = (f64, &'a [f64])>) -> Self {
        let mut weights = Vec::new();
        let mut spectra = Vec::new();
        for (w, t) in items {
            let mut s = t.to_vec();
            wht_in_place(&mut s).expect("tables have power-of-two length");
            weights.push(w);
            spectra.push(s);
        }
        Self { weights, spectra }
    }

    /// `sum_{i,j} w_i w'_j H[T_i * T'_j]`.
    pub fn expected_sum_entropy(&self, other: &Transformed) -> f64 {
        let mut total = 0.0;
        let mut buf = Vec::new();
        for (wa, sa) in self.weights.iter().zip(&self.spectra) {
            if sa.len() == 1 {
                // fibers over the zero subspace are point masses
                continue;
            }
            let scale = 1.0 / sa.len() as f64;
            for (wb, sb) in other.weights.iter().zip(&other.spectra) {
                buf.clear();
                buf.extend(sa.iter().zip(sb).map(|(a, b)| a * b));
                wht_in_place(&mut buf).expect("power of two");
                let h: f64 = buf
                    .iter()
                    .map(|x| x * scale)
                    .filter(|&p| p > tol::MASS_FLOOR)
                    .map(|p| -p * p.log2())
                    .sum();
                total += wa * wb * h.max(0.0);
            }
        }
        total
    }
}

/// The fiber interaction `s[X | pi_V(X); Y | pi_V(Y)] = E_{t,r} s[X_t; Y_r]`.
pub fn fiber_doubling(p: &Dist, q: &Dist, v: &Subspace) -> Result<f64> {
    let fx = CosetFibers::new(p, v)?;
    let fy = CosetFibers::new(q, v)?;
    let tx = Transformed::new(
        fx.weights
            .iter()
            .copied()
            .zip(fx.tables.iter().map(Vec::as_slice)),
    );
    let ty = Transformed::new(
        fy.weights
            .iter()
            .copied()
            .zip(fy.tables.iter().map(Vec::as_slice)),
    );
    Ok(fx.expected_entropy() + fy.expected_entropy() - tx.expected_sum_entropy(&ty))
}

// ============================================================================
// Fibring identity
// ============================================================================

/// The four terms of `s[X;Y] = s[pi X; pi Y] + s[X|pi X; Y|pi Y] - I`,
/// where `I = I[X+Y : (pi X, pi Y) | pi(X+Y)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibringReport {
    pub s_total: f64,
    pub s_quotient: f64,
    pub s_fiber: f64,
    pub residual_mi: f64,
}

impl FibringReport {
    /// `s_total - (s_quotient + s_fiber - residual_mi)`.
    pub fn defect(&self) -> f64 {
        self.s_total - (self.s_quotient + self.s_fiber - self.residual_mi)
    }
}

/// Each term is computed along its own route: `s_total` from the full
/// convolution, `s_quotient` from the compressed quotient laws, `s_fiber`
/// and the residual from the per-coset fiber sums.
pub fn fibring_decompose(p: &Dist, q: &Dist, v: &Subspace) -> Result<FibringReport> {
    let s_total = doubling_mass(p, q)?;
    let px = compress_quotient(p, v)?;
    let qy = compress_quotient(q, v)?;
    let s_quotient = doubling_mass(&px, &qy)?;

    let fx = CosetFibers::new(p, v)?;
    let fy = CosetFibers::new(q, v)?;
    let tx = Transformed::new(
        fx.weights
            .iter()
            .copied()
            .zip(fx.tables.iter().map(Vec::as_slice)),
    );
    let ty = Transformed::new(
        fy.weights
            .iter()
            .copied()
            .zip(fy.tables.iter().map(Vec::as_slice)),
    );
    // H[X+Y | pi X, pi Y]
    let h_sum_given_both = tx.expected_sum_entropy(&ty);
    let s_fiber = fx.expected_entropy() + fy.expected_entropy() - h_sum_given_both;

    let sum = xor_convolve(p, q)?;
    let h_sum_given_quotient = shannon_entropy(&sum) - quotient_entropy(&sum, v)?;
    let residual_mi = h_sum_given_quotient - h_sum_given_both;

    Ok(FibringReport {
        s_total,
        s_quotient,
        s_fiber,
        residual_mi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{product, uniform_on, LinearMap};
    use crate::gf2::GroupElement;

    fn set(items: &[&str]) -> Vec<GroupElement> {
        items
            .iter()
            .map(|s| GroupElement::from_coords(s).unwrap())
            .collect()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn three_point() -> Dist {
        uniform_on(&set(&["000", "001", "010"]), 3).unwrap()
    }

    #[test]
    fn shannon_entropy_examples() {
        let u8 = Dist::uniform_on_subspace(&Subspace::full(3)).unwrap();
        assert!(close(shannon_entropy(&u8), 3.0, 1e-12));
        assert_eq!(shannon_entropy(&Dist::point_mass(3, 5).unwrap()), 0.0);
        let p = Dist::new(2, vec![0.5, 0.25, 0.25, 0.0]).unwrap();
        assert!(close(shannon_entropy(&p), 1.5, 1e-15));
    }

    #[test]
    fn conditional_entropy_examples() {
        let p = Dist::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let q = Dist::new(2, vec![0.25, 0.25, 0.4, 0.1]).unwrap();
        let j = product(&[&p, &q]).unwrap();
        assert!(close(
            conditional_entropy(&j, &[0], &[1]).unwrap(),
            shannon_entropy(&p),
            1e-12
        ));
        assert!(close(
            conditional_entropy(&j, &[0], &[0]).unwrap(),
            0.0,
            1e-12
        ));

        // (X1, X1 + X2) for X uniform on three points
        let x = three_point();
        let j = product(&[&x, &x])
            .unwrap()
            .map(&LinearMap::new(vec![vec![0], vec![0, 1]]))
            .unwrap();
        let h = conditional_entropy(&j, &[0], &[1]).unwrap();
        // 2 log2 3 - H(3/9, 2/9, 2/9, 2/9)
        let h_sum =
            -(1.0 / 3.0f64) * (1.0 / 3.0f64).log2() - 3.0 * (2.0 / 9.0) * (2.0f64 / 9.0).log2();
        assert!(close(h, 2.0 * 3f64.log2() - h_sum, 1e-12));
        assert!(close(h, 1.1950, 1e-4));
        assert!(matches!(
            conditional_entropy(&j, &[2], &[]),
            Err(Error::InvalidBlock { .. })
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let p = Dist::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let j = product(&[&p, &p]).unwrap();
        assert!(close(
            mutual_information(&j, &[0], &[1]).unwrap(),
            0.0,
            1e-12
        ));
        assert!(close(
            mutual_information(&j, &[0], &[0]).unwrap(),
            shannon_entropy(&p),
            1e-12
        ));

        // (X, X + N) with N constant
        let x = Dist::new(1, vec![0.5, 0.5]).unwrap();
        let noise = Dist::point_mass(1, 1).unwrap();
        let j = product(&[&x, &noise])
            .unwrap()
            .map(&LinearMap::new(vec![vec![0], vec![0, 1]]))
            .unwrap();
        assert!(close(
            mutual_information(&j, &[0], &[1]).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn conditional_mutual_information_examples() {
        let p = Dist::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = Dist::point_mass(2, 3).unwrap();
        let j = product(&[&p, &p, &c]).unwrap();
        assert!(close(
            conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap(),
            mutual_information(&j, &[0], &[1]).unwrap(),
            1e-12
        ));
        let j = product(&[&p, &p, &p]).unwrap();
        assert!(close(
            conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap(),
            0.0,
            1e-12
        ));

        // Z-system over four uniform bits (X1, X2, Y1, Y2)
        let bit = Dist::new(1, vec![0.5, 0.5]).unwrap();
        let j = product(&[&bit, &bit, &bit, &bit]).unwrap();
        let z = j
            .map(&LinearMap::new(vec![
                vec![0, 2],
                vec![1, 2],
                vec![0, 1],
                vec![0, 1, 2, 3],
            ]))
            .unwrap();
        assert!(close(
            conditional_mutual_information(&z, &[0], &[1], &[3]).unwrap(),
            0.0,
            1e-12
        ));
    }

    #[test]
    fn ruzsa_distance_examples() {
        let v = Subspace::span(3, &set(&["110", "011"])).unwrap();
        let w = Subspace::full(3);
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let uw = Dist::uniform_on_subspace(&w).unwrap();
        assert!(close(ruzsa_distance(&uv, &uv).unwrap(), 0.0, 1e-12));
        assert!(close(ruzsa_distance(&uv, &uw).unwrap(), 0.5, 1e-12));
        let x = three_point();
        assert!(close(ruzsa_distance(&x, &x).unwrap(), 0.3900, 1e-4));
    }

    #[test]
    fn doubling_mass_examples() {
        let v = Subspace::span(3, &set(&["110", "011"])).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        assert!(close(doubling_mass(&uv, &uv).unwrap(), 2.0, 1e-12));
        let x = three_point();
        assert!(close(
            doubling_mass(&x, &Dist::point_mass(3, 6).unwrap()).unwrap(),
            0.0,
            1e-12
        ));
        assert!(close(doubling_mass(&x, &x).unwrap(), 1.1950, 1e-4));
    }

    #[test]
    fn conditional_doubling_mass_examples() {
        let x = three_point();
        let single = Fibers::renormalized(vec![crate::dist::Fiber {
            label: 0,
            weight: 1.0,
            dist: x.clone(),
        }])
        .unwrap();
        assert!(close(
            conditional_doubling_mass(&single, &single).unwrap(),
            doubling_mass(&x, &x).unwrap(),
            1e-12
        ));
        let points = Fibers::renormalized(
            (0..4)
                .map(|u| crate::dist::Fiber {
                    label: u,
                    weight: 0.25,
                    dist: Dist::point_mass(3, u).unwrap(),
                })
                .collect(),
        )
        .unwrap();
        assert!(close(
            conditional_doubling_mass(&points, &points).unwrap(),
            0.0,
            1e-12
        ));
    }

    #[test]
    fn quotient_entropy_examples() {
        let x = uniform_on(&set(&["000", "001", "110"]), 3).unwrap();
        assert!(close(
            quotient_entropy(&x, &Subspace::zero(3)).unwrap(),
            shannon_entropy(&x),
            1e-12
        ));
        let v = Subspace::span(3, &set(&["001"])).unwrap();
        let h2 = -(2.0 / 3.0f64) * (2.0f64 / 3.0).log2() - (1.0 / 3.0f64) * (1.0f64 / 3.0).log2();
        assert!(close(quotient_entropy(&x, &v).unwrap(), h2, 1e-12));
        assert!(close(quotient_entropy(&x, &v).unwrap(), 0.9183, 1e-4));
        assert!(close(
            quotient_entropy_via_uniform(&x, &v).unwrap(),
            h2,
            1e-9
        ));
        let u = Dist::uniform_on_subspace(&v).unwrap();
        assert!(close(quotient_entropy(&u, &v).unwrap(), 0.0, 1e-12));
    }

    #[test]
    fn fibring_trivial_subspaces() {
        let x = three_point();
        let r = fibring_decompose(&x, &x, &Subspace::zero(3)).unwrap();
        assert!(close(r.s_quotient, r.s_total, 1e-12));
        assert!(close(r.s_fiber, 0.0, 1e-12));
        assert!(close(r.residual_mi, 0.0, 1e-12));

        let r = fibring_decompose(&x, &x, &Subspace::full(3)).unwrap();
        assert!(close(r.s_fiber, r.s_total, 1e-12));
        assert!(close(r.s_quotient, 0.0, 1e-12));
        assert!(close(r.residual_mi, 0.0, 1e-12));
    }
}
