//! Bit-packed linear algebra over F_2.
//!
//! An element of F_2^n is a `u32` bitmask with bit `i` holding coordinate
//! `i`. Subspaces are kept in reduced row echelon form where the pivot of a
//! row is its lowest set bit, rows are sorted by pivot, and every pivot
//! column is zero in all other rows. That form is unique, so structural
//! equality of [`Subspace`] values is equality of subspaces.
//!
//! The quotient `G/V` is realised inside `G`: a coset is represented by the
//! unique member with zeros in all pivot coordinates of `V`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::caps;
use crate::error::{Error, Result};

// ============================================================================
// GroupElement
// ============================================================================

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    bits: u32,
    n: u8,
}

impl GroupElement {
    pub fn new(n: usize, bits: u32) -> Result<Self> {
        caps::check_element_n(n)?;
        if n < 32 && (bits >> n) != 0 {
            return Err(Error::Validation(format!(
                "element {bits:#x} does not fit in F_2^{n}"
            )));
        }
        Ok(Self { bits, n: n as u8 })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            bits: 0,
            n: n as u8,
        }
    }

    /// Parses a coordinate string such as `"110"`: character `i` is
    /// coordinate `i`, so `"110"` has bits 0 and 1 set.
    pub fn from_coords(coords: &str) -> Result<Self> {
        let mut bits = 0u32;
        for (i, c) in coords.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                other => {
                    return Err(Error::Validation(format!(
                        "unexpected character {other:?} in coordinate string"
                    )))
                }
            }
        }
        Self::new(coords.len(), bits)
    }

    pub fn from_hex(n: usize, s: &str) -> Result<Self> {
        Self::new(n, parse_hex(s)?)
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.bits)
    }

    pub fn coords(self) -> String {
        (0..self.n)
            .map(|i| if self.bits >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

impl std::ops::Add for GroupElement {
    type Output = GroupElement;

    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.n, rhs.n);
        Self {
            bits: self.bits ^ rhs.bits,
            n: self.n,
        }
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coords())
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coords())
    }
}

pub(crate) fn parse_hex(s: &str) -> Result<u32> {
    let t = s.trim();
    let t = t
        .strip_prefix("0x")
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    u32::from_str_radix(t, 16).map_err(|e| Error::Validation(format!("bad hex {s:?}: {e}")))
}

fn check_same_n(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

// ============================================================================
// Subspace
// ============================================================================

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SubspaceRepr", into = "SubspaceRepr")]
pub struct Subspace {
    n: u8,
    basis: Vec<u32>,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Self {
            n: n as u8,
            basis: Vec::new(),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n: n as u8,
            basis: (0..n).map(|i| 1u32 << i).collect(),
        }
    }

    /// Canonical basis of the linear span of `vectors`.
    pub fn span(n: usize, vectors: &[GroupElement]) -> Result<Self> {
        caps::check_element_n(n)?;
        let mut out = Self::zero(n);
        for v in vectors {
            check_same_n(n, v.n())?;
            out.insert(v.bits);
        }
        Ok(out)
    }

    /// Span of raw bitmasks; masks must fit in `n` bits.
    pub fn span_masks(n: usize, masks: &[u32]) -> Result<Self> {
        caps::check_element_n(n)?;
        let mut out = Self::zero(n);
        for &m in masks {
            if n < 32 && m >> n != 0 {
                return Err(Error::Validation(format!("{m:#x} does not fit in F_2^{n}")));
            }
            out.insert(m);
        }
        Ok(out)
    }

    /// Accepts a basis only if it is already in canonical form.
    pub fn from_rref(n: usize, basis: Vec<u32>) -> Result<Self> {
        let canon = Self::span_masks(n, &basis)?;
        if canon.basis != basis {
            return Err(Error::Validation(format!(
                "basis {basis:x?} is not in reduced row echelon form"
            )));
        }
        Ok(canon)
    }

    /// Adds `x` to the span, keeping the basis reduced. Returns whether the
    /// dimension grew.
    pub(crate) fn insert(&mut self, x: u32) -> bool {
        let x = self.reduce(x);
        if x == 0 {
            return false;
        }
        let pivot = x.trailing_zeros();
        for row in &mut self.basis {
            if *row >> pivot & 1 == 1 {
                *row ^= x;
            }
        }
        let at = self.basis.partition_point(|r| r.trailing_zeros() < pivot);
        self.basis.insert(at, x);
        true
    }

    /// Canonical coset representative of `x`: clears every pivot coordinate.
    #[inline]
    pub(crate) fn reduce(&self, mut x: u32) -> u32 {
        for &row in &self.basis {
            if x >> row.trailing_zeros() & 1 == 1 {
                x ^= row;
            }
        }
        x
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_masks(&self) -> &[u32] {
        &self.basis
    }

    pub fn basis(&self) -> Vec<GroupElement> {
        self.basis
            .iter()
            .map(|&b| GroupElement { bits: b, n: self.n })
            .collect()
    }

    pub fn pivots(&self) -> Vec<u32> {
        self.basis.iter().map(|r| r.trailing_zeros()).collect()
    }

    pub fn pivot_mask(&self) -> u32 {
        self.basis
            .iter()
            .fold(0, |m, r| m | (1 << r.trailing_zeros()))
    }

    pub fn contains(&self, x: GroupElement) -> bool {
        x.n() == self.n() && self.reduce(x.bits) == 0
    }

    pub(crate) fn contains_mask(&self, x: u32) -> bool {
        self.reduce(x) == 0
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.n == other.n && self.basis.iter().all(|&b| other.contains_mask(b))
    }

    /// All `2^dim` members, indexed by their coefficient vector.
    pub fn element_masks(&self) -> Vec<u32> {
        let mut out = vec![0u32; 1 << self.dim()];
        for (i, &row) in self.basis.iter().enumerate() {
            let half = 1 << i;
            for j in 0..half {
                out[half + j] = out[j] ^ row;
            }
        }
        out
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.element_masks()
            .into_iter()
            .map(|b| GroupElement { bits: b, n: self.n })
            .collect()
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        check_same_n(self.n(), other.n())?;
        let mut out = self.clone();
        for &b in &other.basis {
            out.insert(b);
        }
        Ok(out)
    }

    /// Intersection by the kernel method: eliminate the rows of `other`
    /// first, then each row of `self` while tracking which rows of `self`
    /// were combined. A row that reduces to zero yields a combination of
    /// `self`'s basis lying in `other`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        check_same_n(self.n(), other.n())?;
        // (vector, coefficients over self.basis)
        let mut echelon: Vec<(u32, u32)> = other.basis.iter().map(|&b| (b, 0)).collect();
        let mut kernel = Vec::new();
        for (i, &a) in self.basis.iter().enumerate() {
            let mut v = a;
            let mut coeff = 1u32 << i;
            for &(row, row_coeff) in &echelon {
                if v >> row.trailing_zeros() & 1 == 1 {
                    v ^= row;
                    coeff ^= row_coeff;
                }
            }
            if v == 0 {
                let element = self
                    .basis
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| coeff >> j & 1 == 1)
                    .fold(0u32, |acc, (_, &b)| acc ^ b);
                kernel.push(element);
            } else {
                // Keep rows with distinct lowest bits; no need for full RREF.
                let pivot = v.trailing_zeros();
                for row in echelon.iter_mut() {
                    if row.0 >> pivot & 1 == 1 {
                        row.0 ^= v;
                        row.1 ^= coeff;
                    }
                }
                echelon.push((v, coeff));
            }
        }
        Subspace::span_masks(self.n(), &kernel)
    }

    pub fn quotient_map(&self) -> QuotientMap {
        QuotientMap::new(self)
    }

    /// Preimage of a subspace `w` of the compressed quotient `G/self` (see
    /// [`QuotientMap::compress`]), i.e. `self + lift(w)`.
    pub fn preimage(&self, w: &Subspace) -> Result<Subspace> {
        let q = self.quotient_map();
        check_same_n(q.quotient_dim(), w.n())?;
        let mut out = self.clone();
        for &b in &w.basis {
            out.insert(q.lift_mask(b));
        }
        Ok(out)
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<GroupElement> = self.basis();
        write!(f, "span{rows:?} in F_2^{}", self.n)
    }
}

#[derive(Serialize, Deserialize)]
struct SubspaceRepr {
    n: usize,
    basis: Vec<String>,
}

impl From<Subspace> for SubspaceRepr {
    fn from(v: Subspace) -> Self {
        Self {
            n: v.n(),
            basis: v.basis.iter().map(|b| format!("{b:x}")).collect(),
        }
    }
}

impl TryFrom<SubspaceRepr> for Subspace {
    type Error = Error;

    fn try_from(r: SubspaceRepr) -> Result<Self> {
        let basis = r
            .basis
            .iter()
            .map(|s| parse_hex(s))
            .collect::<Result<Vec<_>>>()?;
        Subspace::from_rref(r.n, basis)
    }
}

// ============================================================================
// QuotientMap
// ============================================================================

/// The projection `pi_V : G -> G/V` with the pivot-clearing representative.
///
/// Besides `project`, which stays inside `G`, the map can `compress` a
/// representative to `F_2^(n - dim V)` by packing its non-pivot coordinates,
/// which identifies `G/V` with a smaller ambient space.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    subspace: Subspace,
    free_positions: Vec<u32>,
}

impl QuotientMap {
    pub fn new(v: &Subspace) -> Self {
        let pivots = v.pivot_mask();
        let free_positions = (0..v.n() as u32).filter(|i| pivots >> i & 1 == 0).collect();
        Self {
            subspace: v.clone(),
            free_positions,
        }
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn n(&self) -> usize {
        self.subspace.n()
    }

    pub fn quotient_dim(&self) -> usize {
        self.free_positions.len()
    }

    pub fn project(&self, x: GroupElement) -> Result<GroupElement> {
        check_same_n(self.n(), x.n())?;
        Ok(GroupElement {
            bits: self.subspace.reduce(x.bits),
            n: x.n,
        })
    }

    #[inline]
    pub fn project_mask(&self, x: u32) -> u32 {
        self.subspace.reduce(x)
    }

    /// Packs the non-pivot coordinates of `project(x)` into the low bits.
    #[inline]
    pub fn compress_mask(&self, x: u32) -> u32 {
        let r = self.subspace.reduce(x);
        let mut out = 0u32;
        for (j, &p) in self.free_positions.iter().enumerate() {
            out |= (r >> p & 1) << j;
        }
        out
    }

    /// Inverse of `compress_mask` on representatives.
    #[inline]
    pub fn lift_mask(&self, y: u32) -> u32 {
        let mut out = 0u32;
        for (j, &p) in self.free_positions.iter().enumerate() {
            out |= (y >> j & 1) << p;
        }
        out
    }

    /// Image of `u` in the compressed coordinates of `G/V`.
    pub fn image(&self, u: &Subspace) -> Result<Subspace> {
        if u.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: u.n(),
            });
        }
        let masks: Vec<u32> = u
            .basis_masks()
            .iter()
            .map(|&b| self.compress_mask(b))
            .collect();
        Subspace::span_masks(self.quotient_dim(), &masks)
    }
}

// ============================================================================
// Enumeration and coset decomposition
// ============================================================================

/// Every subspace of F_2^n of dimension at most `max_dim`, once each, ordered
/// by dimension and then lexicographically by canonical basis.
pub fn enumerate_subspaces(n: usize, max_dim: usize) -> Result<Vec<Subspace>> {
    if n > caps::enumeration_n() {
        return Err(Error::Capacity {
            what: "exhaustive subspace enumeration",
            requested: n,
            limit: caps::enumeration_n(),
        });
    }
    if max_dim > n {
        return Err(Error::Parameter(format!(
            "max_dim {max_dim} exceeds n = {n}"
        )));
    }
    let mut out = Vec::new();
    for d in 0..=max_dim {
        let mut level = Vec::new();
        for pivot_set in 0u32..(1 << n) {
            if pivot_set.count_ones() as usize != d {
                continue;
            }
            let pivots: Vec<u32> = (0..n as u32).filter(|i| pivot_set >> i & 1 == 1).collect();
            // Free coordinates of the row with pivot p: non-pivot positions above p.
            let free: Vec<Vec<u32>> = pivots
                .iter()
                .map(|&p| {
                    (p + 1..n as u32)
                        .filter(|j| pivot_set >> j & 1 == 0)
                        .collect()
                })
                .collect();
            let total_free: usize = free.iter().map(Vec::len).sum();
            for assignment in 0u64..(1u64 << total_free) {
                let mut bit = 0;
                let mut basis = Vec::with_capacity(d);
                for (row, &p) in pivots.iter().enumerate() {
                    let mut mask = 1u32 << p;
                    for &j in &free[row] {
                        if assignment >> bit & 1 == 1 {
                            mask |= 1 << j;
                        }
                        bit += 1;
                    }
                    basis.push(mask);
                }
                level.push(Subspace { n: n as u8, basis });
            }
        }
        level.sort_by(|a, b| a.basis.cmp(&b.basis));
        out.extend(level);
    }
    Ok(out)
}

/// Partitions `set` by cosets of `v`, keyed by canonical representative.
pub fn coset_decompose(
    set: &[GroupElement],
    v: &Subspace,
) -> Result<BTreeMap<GroupElement, Vec<GroupElement>>> {
    let q = v.quotient_map();
    let mut parts: BTreeMap<GroupElement, Vec<GroupElement>> = BTreeMap::new();
    for &a in set {
        parts.entry(q.project(a)?).or_default().push(a);
    }
    Ok(parts)
}

/// Number of k-dimensional subspaces of F_2^n.
pub fn gaussian_binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (1u128 << (n - i)) - 1;
        den *= (1u128 << (i + 1)) - 1;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> GroupElement {
        GroupElement::from_coords(s).unwrap()
    }

    fn span(s: &[&str]) -> Subspace {
        let n = s.first().map_or(3, |x| x.len());
        Subspace::span(n, &s.iter().map(|x| e(x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn span_examples() {
        let empty = Subspace::span(3, &[]).unwrap();
        assert_eq!(empty.dim(), 0);
        assert_eq!(empty, Subspace::zero(3));

        let v = span(&["110", "011", "101"]);
        assert_eq!(v.dim(), 2);
        assert_eq!(v.basis(), vec![e("101"), e("011")]);

        assert_eq!(span(&["100", "010", "001"]), Subspace::full(3));
    }

    #[test]
    fn span_is_idempotent() {
        let v = span(&["110", "011", "101"]);
        assert_eq!(Subspace::span(3, &v.basis()).unwrap(), v);
    }

    #[test]
    fn span_rejects_mixed_dimensions() {
        let err = Subspace::span(3, &[e("110"), e("0110")]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn sum_examples() {
        let a = span(&["100", "010"]);
        let b = span(&["010", "001"]);
        assert_eq!(a.sum(&b).unwrap(), Subspace::full(3));
        assert_eq!(a.sum(&Subspace::zero(3)).unwrap(), a);
        assert_eq!(a.sum(&a).unwrap(), a);
    }

    #[test]
    fn intersect_examples() {
        let a = span(&["100", "010"]);
        let b = span(&["010", "001"]);
        assert_eq!(a.intersect(&b).unwrap(), span(&["010"]));
        assert_eq!(a.intersect(&Subspace::full(3)).unwrap(), a);
        assert!(a.intersect(&Subspace::full(4)).is_err());
    }

    #[test]
    fn intersection_membership_matches_brute_force_in_f2_4() {
        let all = enumerate_subspaces(4, 4).unwrap();
        for a in &all {
            for b in &all {
                let c = a.intersect(b).unwrap();
                for x in 0..16u32 {
                    assert_eq!(
                        c.contains_mask(x),
                        a.contains_mask(x) && b.contains_mask(x),
                        "{a:?} ∩ {b:?} at {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn dimension_formula_over_all_pairs_in_f2_4() {
        let all = enumerate_subspaces(4, 4).unwrap();
        for a in &all {
            for b in &all {
                let s = a.sum(b).unwrap();
                let i = a.intersect(b).unwrap();
                assert_eq!(a.dim() + b.dim(), s.dim() + i.dim());
            }
        }
    }

    #[test]
    fn project_examples() {
        let q = span(&["001"]).quotient_map();
        assert_eq!(q.project(e("101")).unwrap(), e("100"));
        assert_eq!(q.project(e("001")).unwrap(), e("000"));

        let q = span(&["110"]).quotient_map();
        assert_eq!(q.project(e("100")).unwrap(), q.project(e("010")).unwrap());
    }

    #[test]
    fn quotient_is_linear_and_idempotent_for_n_up_to_4() {
        for n in 1..=4 {
            for v in enumerate_subspaces(n, n).unwrap() {
                let q = v.quotient_map();
                for x in 0..(1u32 << n) {
                    let px = q.project_mask(x);
                    assert_eq!(q.project_mask(px), px);
                    assert_eq!(px & v.pivot_mask(), 0);
                    for y in 0..(1u32 << n) {
                        assert_eq!(px ^ q.project_mask(y), q.project_mask(x ^ y));
                        assert_eq!(px == q.project_mask(y), v.contains_mask(x ^ y));
                    }
                }
            }
        }
    }

    #[test]
    fn compress_and_lift_invert_on_representatives() {
        let v = span(&["1100", "0011"]);
        let q = v.quotient_map();
        assert_eq!(q.quotient_dim(), 2);
        for x in 0..16u32 {
            let c = q.compress_mask(x);
            assert!(c < 4);
            assert_eq!(q.lift_mask(c), q.project_mask(x));
        }
    }

    #[test]
    fn preimage_of_compressed_subspace() {
        let v = span(&["1000"]);
        // G/V has coordinates 1, 2, 3 of G packed into bits 0, 1, 2.
        let w = Subspace::span_masks(3, &[0b001]).unwrap();
        let pre = v.preimage(&w).unwrap();
        assert_eq!(pre, span(&["1000", "0100"]));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_subspaces(2, 2).unwrap().len(), 5);
        assert_eq!(enumerate_subspaces(3, 3).unwrap().len(), 16);
        assert_eq!(enumerate_subspaces(1, 0).unwrap(), vec![Subspace::zero(1)]);
        for n in 0..=6 {
            let total: u128 = (0..=n).map(|k| gaussian_binomial(n, k)).sum();
            let all = enumerate_subspaces(n, n).unwrap();
            assert_eq!(all.len() as u128, total);
            let mut dedup = all.clone();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
        }
        assert!(matches!(
            enumerate_subspaces(7, 2),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn enumeration_yields_canonical_forms_in_order() {
        let all = enumerate_subspaces(4, 4).unwrap();
        for w in all.windows(2) {
            assert!((w[0].dim(), &w[0].basis) < (w[1].dim(), &w[1].basis));
        }
        for v in &all {
            assert_eq!(&Subspace::span_masks(4, v.basis_masks()).unwrap(), v);
        }
    }

    #[test]
    fn coset_decompose_examples() {
        let a = vec![e("000"), e("001"), e("110")];
        let parts = coset_decompose(&a, &span(&["001"])).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&e("000")], vec![e("000"), e("001")]);
        assert_eq!(parts[&e("110")], vec![e("110")]);

        let v = span(&["110", "011"]);
        let parts = coset_decompose(&v.elements(), &v).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts.values().next().unwrap().len(), 4);

        let parts = coset_decompose(&a, &Subspace::zero(3)).unwrap();
        assert_eq!(parts.len(), 3);
    }

    #[test]
    fn serde_requires_rref() {
        let v = span(&["110", "011"]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"n":3,"basis":["5","6"]}"#);
        let back: Subspace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let bad = r#"{"n":3,"basis":["3","6"]}"#;
        assert!(serde_json::from_str::<Subspace>(bad).is_err());
    }
}
