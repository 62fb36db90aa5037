//! Dense probability distributions over F_2^n and joint tables of up to four
//! blocks.
//!
//! A distribution over a quotient `G/V` is stored either inside `G`,
//! supported on canonical coset representatives ([`pushforward_quotient`]),
//! or compressed to `F_2^(n - dim V)` ([`compress_quotient`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::caps;
use crate::error::{Error, Result};
use crate::gf2::{parse_hex, GroupElement, Subspace};
use crate::tol;

// ============================================================================
// Dist
// ============================================================================

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct Dist {
    n: u8,
    mass: Vec<f64>,
}

impl std::fmt::Debug for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let support: Vec<String> = self
            .support()
            .into_iter()
            .map(|x| format!("{:x}:{:.6}", x, self.mass[x as usize]))
            .collect();
        write!(f, "Dist(n={}, {{{}}})", self.n, support.join(", "))
    }
}

impl Dist {
    /// Validates nonnegativity and normalization of a dense table.
    pub fn new(n: usize, mass: Vec<f64>) -> Result<Self> {
        caps::check_dense_n(n)?;
        if mass.len() != 1 << n {
            return Err(Error::Validation(format!(
                "mass table has length {}, expected 2^{n}",
                mass.len()
            )));
        }
        for (index, &m) in mass.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMass { index, mass: m });
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > tol::NORMALIZATION {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self { n: n as u8, mass })
    }

    /// Builds from a table that is normalized up to floating-point drift:
    /// dust below the mass floor is zeroed and the table rescaled.
    pub(crate) fn from_raw(n: usize, mut mass: Vec<f64>) -> Result<Self> {
        for m in mass.iter_mut() {
            if *m < tol::MASS_FLOOR {
                *m = 0.0;
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > tol::NORMALIZATION {
            return Err(Error::NotNormalized { total });
        }
        if total != 1.0 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        Ok(Self { n: n as u8, mass })
    }

    pub fn from_sparse(n: usize, support: &[(u32, f64)]) -> Result<Self> {
        caps::check_dense_n(n)?;
        let mut mass = vec![0.0; 1 << n];
        for &(x, p) in support {
            if n < 32 && x >> n != 0 {
                return Err(Error::Validation(format!("{x:#x} does not fit in F_2^{n}")));
            }
            mass[x as usize] += p;
        }
        Self::new(n, mass)
    }

    pub fn point_mass(n: usize, x: u32) -> Result<Self> {
        Self::from_sparse(n, &[(x, 1.0)])
    }

    pub fn uniform_on_subspace(v: &Subspace) -> Result<Self> {
        let elems = v.element_masks();
        let p = 1.0 / elems.len() as f64;
        let pairs: Vec<(u32, f64)> = elems.into_iter().map(|x| (x, p)).collect();
        Self::from_sparse(v.n(), &pairs)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    #[inline]
    pub fn prob(&self, x: u32) -> f64 {
        self.mass[x as usize]
    }

    pub fn support(&self) -> Vec<u32> {
        (0..self.mass.len() as u32)
            .filter(|&x| self.mass[x as usize] > 0.0)
            .collect()
    }

    pub fn support_pairs(&self) -> Vec<(u32, f64)> {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, &p)| (x as u32, p))
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn translate(&self, a: u32) -> Dist {
        let mut mass = vec![0.0; self.mass.len()];
        for (x, &p) in self.mass.iter().enumerate() {
            mass[x ^ a as usize] = p;
        }
        Dist { n: self.n, mass }
    }

    pub fn max_abs_diff(&self, other: &Dist) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Exact bit pattern of the table, used as a cache key.
    pub(crate) fn key(&self) -> Vec<u64> {
        let mut k = Vec::with_capacity(self.mass.len() + 1);
        k.push(self.n as u64);
        k.extend(self.mass.iter().map(|m| m.to_bits()));
        k
    }

    /// Mixture `sum_i w_i P_i` of same-dimension distributions.
    pub fn mixture(components: &[(f64, &Dist)]) -> Result<Dist> {
        let n = components.first().ok_or(Error::EmptySupport)?.1.n();
        let mut mass = vec![0.0; 1 << n];
        for &(w, d) in components {
            same_n(n, d.n())?;
            for (m, &p) in mass.iter_mut().zip(&d.mass) {
                *m += w * p;
            }
        }
        Dist::from_raw(n, mass)
    }
}

fn same_n(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DistRepr {
    Dense {
        n: usize,
        mass: Vec<f64>,
    },
    Sparse {
        n: usize,
        support: BTreeMap<String, f64>,
    },
}

impl From<Dist> for DistRepr {
    fn from(d: Dist) -> Self {
        DistRepr::Dense {
            n: d.n(),
            mass: d.mass,
        }
    }
}

impl TryFrom<DistRepr> for Dist {
    type Error = Error;

    fn try_from(r: DistRepr) -> Result<Self> {
        match r {
            DistRepr::Dense { n, mass } => Dist::new(n, mass),
            DistRepr::Sparse { n, support } => {
                let pairs = support
                    .iter()
                    .map(|(k, &v)| Ok((parse_hex(k)?, v)))
                    .collect::<Result<Vec<_>>>()?;
                Dist::from_sparse(n, &pairs)
            }
        }
    }
}

// ============================================================================
// Constructors and transforms
// ============================================================================

/// Uniform distribution on a nonempty set (duplicates are ignored).
pub fn uniform_on(set: &[GroupElement], n: usize) -> Result<Dist> {
    if set.is_empty() {
        return Err(Error::EmptySupport);
    }
    caps::check_dense_n(n)?;
    let mut hit = vec![false; 1 << n];
    for a in set {
        same_n(n, a.n())?;
        hit[a.bits() as usize] = true;
    }
    let count = hit.iter().filter(|&&h| h).count();
    let p = 1.0 / count as f64;
    let mass = hit.into_iter().map(|h| if h { p } else { 0.0 }).collect();
    Dist::new(n, mass)
}

/// Unnormalized Walsh–Hadamard transform in place. Applying it twice
/// multiplies the table by its length.
pub fn wht_in_place(table: &mut [f64]) -> Result<()> {
    let len = table.len();
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut half = 1;
    while half < len {
        for block in table.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn wht(table: &[f64]) -> Result<Vec<f64>> {
    let mut out = table.to_vec();
    wht_in_place(&mut out)?;
    Ok(out)
}

/// XOR convolution of two raw tables of equal power-of-two length.
pub(crate) fn convolve_tables(p: &[f64], q: &[f64]) -> Vec<f64> {
    debug_assert_eq!(p.len(), q.len());
    if p.len() <= 4 {
        return convolve_tables_naive(p, q);
    }
    let mut a = p.to_vec();
    let mut b = q.to_vec();
    wht_in_place(&mut a).expect("power of two");
    wht_in_place(&mut b).expect("power of two");
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    wht_in_place(&mut a).expect("power of two");
    let scale = 1.0 / p.len() as f64;
    a.iter_mut().for_each(|x| *x *= scale);
    a
}

pub(crate) fn convolve_tables_naive(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &qy) in q.iter().enumerate() {
            out[x ^ y] += px * qy;
        }
    }
    out
}

/// Distribution of `X + Y` for independent `X ~ p`, `Y ~ q`, via the fast
/// transform.
pub fn xor_convolve(p: &Dist, q: &Dist) -> Result<Dist> {
    same_n(p.n(), q.n())?;
    Dist::from_raw(p.n(), convolve_tables(&p.mass, &q.mass))
}

/// Same as [`xor_convolve`] by the explicit double sum.
pub fn xor_convolve_naive(p: &Dist, q: &Dist) -> Result<Dist> {
    same_n(p.n(), q.n())?;
    Dist::from_raw(p.n(), convolve_tables_naive(&p.mass, &q.mass))
}

/// Distribution of `pi_V(X)` on canonical representatives inside `G`.
pub fn pushforward_quotient(p: &Dist, v: &Subspace) -> Result<Dist> {
    same_n(p.n(), v.n())?;
    let mut mass = vec![0.0; p.mass.len()];
    for (x, &px) in p.mass.iter().enumerate() {
        if px > 0.0 {
            mass[v.reduce(x as u32) as usize] += px;
        }
    }
    Dist::from_raw(p.n(), mass)
}

/// Distribution of `pi_V(X)` in the compressed coordinates of `G/V`.
pub fn compress_quotient(p: &Dist, v: &Subspace) -> Result<Dist> {
    same_n(p.n(), v.n())?;
    let q = v.quotient_map();
    let mut mass = vec![0.0; 1 << q.quotient_dim()];
    for (x, &px) in p.mass.iter().enumerate() {
        if px > 0.0 {
            mass[q.compress_mask(x as u32) as usize] += px;
        }
    }
    Dist::from_raw(q.quotient_dim(), mass)
}

/// `Pr[X + Y = u]` for independent `X ~ p`, `Y ~ q`.
pub fn sum_probability(p: &Dist, q: &Dist, u: u32) -> f64 {
    p.mass
        .iter()
        .enumerate()
        .map(|(x, &px)| px * q.mass[x ^ u as usize])
        .sum()
}

/// Law of `X` given `X + Y = u`: mass `p(x) q(x + u) / Pr[X + Y = u]`.
pub fn condition_on_sum(p: &Dist, q: &Dist, u: u32) -> Result<Dist> {
    same_n(p.n(), q.n())?;
    if p.n() < 32 && u >> p.n() != 0 {
        return Err(Error::Validation(format!(
            "{u:#x} does not fit in F_2^{}",
            p.n()
        )));
    }
    let mut mass: Vec<f64> = p
        .mass
        .iter()
        .enumerate()
        .map(|(x, &px)| px * q.mass[x ^ u as usize])
        .collect();
    let z: f64 = mass.iter().sum();
    if z <= tol::MASS_FLOOR {
        return Err(Error::ZeroProbabilityEvent);
    }
    mass.iter_mut().for_each(|m| *m /= z);
    Dist::from_raw(p.n(), mass)
}

/// A weighted family of conditional laws `(X | U = u)`, one per atom of `U`
/// with positive probability.
#[derive(Clone, Debug)]
pub struct Fibers {
    pub entries: Vec<Fiber>,
}

#[derive(Clone, Debug)]
pub struct Fiber {
    /// Value of the conditioning variable.
    pub label: u32,
    pub weight: f64,
    pub dist: Dist,
}

impl Fibers {
    pub fn new(entries: Vec<Fiber>) -> Result<Self> {
        let first = entries.first().ok_or(Error::EmptySupport)?;
        let n = first.dist.n();
        let mut total = 0.0;
        for f in &entries {
            same_n(n, f.dist.n())?;
            if !(f.weight >= 0.0) {
                return Err(Error::Validation(format!(
                    "negative fiber weight {}",
                    f.weight
                )));
            }
            total += f.weight;
        }
        if (total - 1.0).abs() > tol::NORMALIZATION {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self { entries })
    }

    /// Fibers of `X` given `X + Y = u` over the support of `X + Y`.
    pub fn of_sum(p: &Dist, q: &Dist) -> Result<Self> {
        let sum = xor_convolve(p, q)?;
        let mut entries = Vec::new();
        for (u, w) in sum.support_pairs() {
            entries.push(Fiber {
                label: u,
                weight: w,
                dist: condition_on_sum(p, q, u)?,
            });
        }
        Self::renormalized(entries)
    }

    /// Conditioning events of zero probability are dropped and the weights
    /// rescaled.
    pub(crate) fn renormalized(mut entries: Vec<Fiber>) -> Result<Self> {
        entries.retain(|f| f.weight > tol::MASS_FLOOR);
        let total: f64 = entries.iter().map(|f| f.weight).sum();
        if entries.is_empty() {
            return Err(Error::EmptySupport);
        }
        entries.iter_mut().for_each(|f| f.weight /= total);
        Self::new(entries)
    }

    pub fn n(&self) -> usize {
        self.entries[0].dist.n()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The unconditioned law, `sum_u Pr[U = u] (X | U = u)`.
    pub fn mixture(&self) -> Result<Dist> {
        let parts: Vec<(f64, &Dist)> = self.entries.iter().map(|f| (f.weight, &f.dist)).collect();
        Dist::mixture(&parts)
    }
}

// ============================================================================
// JointDist
// ============================================================================

/// Joint law of up to four F_2-vector blocks. Block `i` occupies the index
/// bits starting at the sum of the earlier block dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist {
    dims: Vec<u8>,
    mass: Vec<f64>,
}

pub const MAX_BLOCKS: usize = 4;

fn check_joint_shape(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.len() > MAX_BLOCKS {
        return Err(Error::Capacity {
            what: "joint distribution blocks",
            requested: dims.len(),
            limit: MAX_BLOCKS,
        });
    }
    let bits: usize = dims.iter().sum();
    if bits > caps::MAX_JOINT_BITS {
        return Err(Error::Capacity {
            what: "joint distribution index bits",
            requested: bits,
            limit: caps::MAX_JOINT_BITS,
        });
    }
    Ok(bits)
}

impl JointDist {
    pub fn new(dims: &[usize], mass: Vec<f64>) -> Result<Self> {
        let bits = check_joint_shape(dims)?;
        if mass.len() != 1 << bits {
            return Err(Error::Validation(format!(
                "joint table has length {}, expected 2^{bits}",
                mass.len()
            )));
        }
        for (index, &m) in mass.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMass { index, mass: m });
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > tol::NORMALIZATION {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self {
            dims: dims.iter().map(|&d| d as u8).collect(),
            mass,
        })
    }

    pub fn from_dist(d: &Dist) -> Self {
        Self {
            dims: vec![d.n],
            mass: d.mass.clone(),
        }
    }

    pub fn blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.dims.iter().map(|&d| d as usize).collect()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn offset(&self, block: usize) -> u32 {
        self.dims[..block].iter().map(|&d| d as u32).sum()
    }

    #[inline]
    fn block_value(&self, index: usize, block: usize) -> u32 {
        let d = self.dims[block] as u32;
        ((index as u64 >> self.offset(block)) & ((1u64 << d) - 1)) as u32
    }

    pub(crate) fn check_blocks(&self, blocks: &[usize]) -> Result<()> {
        for &b in blocks {
            if b >= self.blocks() {
                return Err(Error::InvalidBlock {
                    index: b,
                    blocks: self.blocks(),
                });
            }
        }
        Ok(())
    }

    /// Joint law of the listed blocks, in the listed order. Repeated blocks
    /// are allowed.
    pub fn marginal(&self, blocks: &[usize]) -> Result<JointDist> {
        self.check_blocks(blocks)?;
        let dims: Vec<usize> = blocks.iter().map(|&b| self.dims[b] as usize).collect();
        if blocks.is_empty() {
            return Ok(JointDist {
                dims: vec![0],
                mass: vec![1.0],
            });
        }
        let bits = check_joint_shape(&dims)?;
        let offsets: Vec<u32> = (0..self.blocks()).map(|b| self.offset(b)).collect();
        let mut mass = vec![0.0; 1 << bits];
        for (index, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let mut out = 0usize;
            let mut shift = 0;
            for &b in blocks {
                let d = self.dims[b] as u32;
                let v = (index >> offsets[b]) & ((1usize << d) - 1);
                out |= v << shift;
                shift += d;
            }
            mass[out] += m;
        }
        Ok(JointDist {
            dims: dims.iter().map(|&d| d as u8).collect(),
            mass,
        })
    }

    /// Pushforward under a map whose output blocks are XORs of input blocks.
    pub fn map(&self, f: &LinearMap) -> Result<JointDist> {
        f.validate(self)?;
        let dims: Vec<usize> = f.outputs.iter().map(|o| self.dims[o[0]] as usize).collect();
        let bits = check_joint_shape(&dims)?;
        let mut mass = vec![0.0; 1 << bits];
        for (index, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let mut out = 0usize;
            let mut shift = 0;
            for (o, &d) in f.outputs.iter().zip(&dims) {
                let v = o
                    .iter()
                    .fold(0u32, |acc, &b| acc ^ self.block_value(index, b));
                out |= (v as usize) << shift;
                shift += d;
            }
            mass[out] += m;
        }
        Ok(JointDist {
            dims: dims.iter().map(|&d| d as u8).collect(),
            mass,
        })
    }

    /// The law of a single-block joint.
    pub fn to_dist(&self) -> Result<Dist> {
        if self.blocks() != 1 {
            return Err(Error::Validation(format!(
                "joint has {} blocks, expected 1",
                self.blocks()
            )));
        }
        Dist::from_raw(self.dims[0] as usize, self.mass.clone())
    }
}

/// Output block `i` is the XOR of the input blocks listed in `outputs[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMap {
    pub outputs: Vec<Vec<usize>>,
}

impl LinearMap {
    pub fn new(outputs: Vec<Vec<usize>>) -> Self {
        Self { outputs }
    }

    pub fn identity(blocks: usize) -> Self {
        Self::new((0..blocks).map(|b| vec![b]).collect())
    }

    fn validate(&self, j: &JointDist) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::MalformedMap("no output blocks".into()));
        }
        for o in &self.outputs {
            if o.is_empty() {
                return Err(Error::MalformedMap("empty output block".into()));
            }
            for &b in o {
                if b >= j.blocks() {
                    return Err(Error::MalformedMap(format!(
                        "input block {b} out of range for {} blocks",
                        j.blocks()
                    )));
                }
                if j.dims[b] != j.dims[o[0]] {
                    return Err(Error::MalformedMap(format!(
                        "blocks {} and {b} have different dimensions",
                        o[0]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Product measure of independent factors.
pub fn product(factors: &[&Dist]) -> Result<JointDist> {
    let dims: Vec<usize> = factors.iter().map(|d| d.n()).collect();
    let bits = check_joint_shape(&dims)?;
    let mut mass = vec![0.0; 1 << bits];
    let supports: Vec<Vec<(u32, f64)>> = factors.iter().map(|d| d.support_pairs()).collect();
    let mut stack: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0)];
    // Depth-first over the product of supports.
    while let Some((depth, index, p)) = stack.pop() {
        if depth == factors.len() {
            mass[index] += p;
            continue;
        }
        let shift: usize = dims[..depth].iter().sum();
        for &(x, px) in &supports[depth] {
            stack.push((depth + 1, index | (x as usize) << shift, p * px));
        }
    }
    Ok(JointDist {
        dims: dims.iter().map(|&d| d as u8).collect(),
        mass,
    })
}
