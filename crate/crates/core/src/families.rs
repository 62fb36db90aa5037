//! Example set families and set-level sumset statistics.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::error::{Error, Result};
use crate::gf2::{coset_decompose, GroupElement, Subspace};

fn elements(n: usize, masks: impl IntoIterator<Item = u32>) -> Vec<GroupElement> {
    masks
        .into_iter()
        .map(|m| GroupElement::new(n, m).expect("mask fits in n bits"))
        .collect()
}

/// All vectors of Hamming weight at most `r`, in increasing bitmask order.
pub fn hamming_ball(n: usize, r: usize) -> Result<Vec<GroupElement>> {
    caps::check_element_n(n)?;
    if r > n {
        return Err(Error::Parameter(format!("radius {r} exceeds n = {n}")));
    }
    Ok(elements(
        n,
        (0..1u32 << n).filter(|x| x.count_ones() as usize <= r),
    ))
}

/// A uniformly random `count`-subset of the coordinate subspace spanned by
/// the first `dim_v` basis vectors.
pub fn random_subset_of_subspace<R: Rng>(
    rng: &mut R,
    n: usize,
    dim_v: usize,
    count: usize,
) -> Result<Vec<GroupElement>> {
    caps::check_element_n(n)?;
    if dim_v > n {
        return Err(Error::Parameter(format!("dim V = {dim_v} exceeds n = {n}")));
    }
    let size = 1usize << dim_v;
    if count == 0 || count > size {
        return Err(Error::Parameter(format!(
            "count {count} must lie in 1..={size}"
        )));
    }
    let mut masks: Vec<u32> = sample(rng, size, count)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    masks.sort_unstable();
    Ok(elements(n, masks))
}

/// `V + Lambda` where `V` is spanned by the first `dim_v` coordinates and
/// `Lambda` holds zero plus `num_cosets - 1` distinct random nonzero vectors
/// supported on the remaining coordinates.
pub fn union_of_cosets<R: Rng>(
    rng: &mut R,
    n: usize,
    dim_v: usize,
    num_cosets: usize,
) -> Result<Vec<GroupElement>> {
    caps::check_element_n(n)?;
    if dim_v > n {
        return Err(Error::Parameter(format!("dim V = {dim_v} exceeds n = {n}")));
    }
    let available = 1usize << (n - dim_v);
    if num_cosets == 0 || num_cosets > available {
        return Err(Error::Capacity {
            what: "number of cosets",
            requested: num_cosets,
            limit: available,
        });
    }
    let mut lambda = vec![0u32];
    lambda.extend(
        sample(rng, available - 1, num_cosets - 1)
            .into_iter()
            .map(|i| ((i + 1) as u32) << dim_v),
    );
    let mut masks: Vec<u32> = lambda
        .iter()
        .flat_map(|&l| (0..1u32 << dim_v).map(move |v| v | l))
        .collect();
    masks.sort_unstable();
    Ok(elements(n, masks))
}

/// On-disk form of a set: `{"n": int, "elements": [hex strings]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFile {
    pub n: usize,
    pub elements: Vec<String>,
}

impl SetFile {
    pub fn new(n: usize, set: &[GroupElement]) -> Self {
        Self {
            n,
            elements: set.iter().map(|e| e.to_hex()).collect(),
        }
    }

    /// Parses and validates the elements; duplicates are dropped.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        caps::check_element_n(self.n)?;
        let mut out = self
            .elements
            .iter()
            .map(|s| GroupElement::from_hex(self.n, s))
            .collect::<Result<Vec<_>>>()?;
        if out.is_empty() {
            return Err(Error::EmptySupport);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

fn common_n(set: &[GroupElement]) -> Result<usize> {
    let first = set.first().ok_or(Error::EmptySupport)?;
    let n = first.n();
    if let Some(bad) = set.iter().find(|e| e.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n(),
        });
    }
    Ok(n)
}

/// `A + A`, sorted, computed with a bitset over F_2^n.
pub fn sumset(set: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let n = common_n(set)?;
    let mut masks: Vec<u32> = set.iter().map(|e| e.bits()).collect();
    masks.sort_unstable();
    masks.dedup();
    let mut seen = vec![0u64; ((1usize << n) + 63) / 64];
    for (i, &a) in masks.iter().enumerate() {
        for &b in &masks[i..] {
            let s = (a ^ b) as usize;
            seen[s / 64] |= 1 << (s % 64);
        }
    }
    let out = seen.iter().enumerate().flat_map(|(w, &word)| {
        (0..64)
            .filter(move |b| word >> b & 1 == 1)
            .map(move |b| (w * 64 + b) as u32)
    });
    Ok(elements(n, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingStats {
    pub size: usize,
    pub sumset_size: usize,
    /// Solves `|A + A| = |A|^(2 - eta)`; zero when `|A| = 1`.
    pub eta: f64,
}

pub fn doubling_stats(set: &[GroupElement]) -> Result<DoublingStats> {
    let mut distinct: Vec<u32> = set.iter().map(|e| e.bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let size = distinct.len();
    let sumset_size = sumset(set)?.len();
    let eta = if size <= 1 {
        0.0
    } else {
        2.0 - (sumset_size as f64).log2() / (size as f64).log2()
    };
    Ok(DoublingStats {
        size,
        sumset_size,
        eta,
    })
}

/// `E_{a in A} log2 |A cap (V + a)|`, from the coset partition of `A`.
pub fn expected_log_intersection(set: &[GroupElement], v: &Subspace) -> Result<f64> {
    let n = common_n(set)?;
    let mut distinct = set.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if v.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.n(),
        });
    }
    let parts = coset_decompose(&distinct, v)?;
    let total = distinct.len() as f64;
    Ok(parts
        .values()
        .map(|part| {
            let k = part.len() as f64;
            k / total * k.log2()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;

    fn naive_sumset(set: &[GroupElement]) -> Vec<u32> {
        let mut out: Vec<u32> = set
            .iter()
            .flat_map(|a| set.iter().map(move |b| a.bits() ^ b.bits()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    #[test]
    fn hamming_ball_sizes() {
        assert_eq!(hamming_ball(4, 0).unwrap().len(), 1);
        assert_eq!(hamming_ball(4, 1).unwrap().len(), 5);
        assert_eq!(hamming_ball(4, 4).unwrap().len(), 16);
        assert_eq!(hamming_ball(12, 2).unwrap().len(), 1 + 12 + 66);
        assert!(hamming_ball(4, 5).is_err());
    }

    #[test]
    fn hamming_ball_doubling() {
        let a = hamming_ball(4, 1).unwrap();
        let s = doubling_stats(&a).unwrap();
        assert_eq!((s.size, s.sumset_size), (5, 11));
        let expected = 2.0 - 11f64.log2() / 5f64.log2();
        assert!((s.eta - expected).abs() < 1e-15);
        assert!((s.eta - 0.5101).abs() < 1e-4);
    }

    #[test]
    fn subspaces_have_eta_one() {
        let v = Subspace::span(3, &[GroupElement::from_coords("110").unwrap()]).unwrap();
        let s = doubling_stats(&v.elements()).unwrap();
        assert_eq!(s.eta, 1.0);
        let pair = [
            GroupElement::zero(3),
            GroupElement::from_coords("100").unwrap(),
        ];
        assert_eq!(doubling_stats(&pair).unwrap().sumset_size, 2);
        assert_eq!(doubling_stats(&[GroupElement::zero(3)]).unwrap().eta, 0.0);
        assert!(doubling_stats(&[]).is_err());
    }

    #[test]
    fn sumset_matches_naive_double_loop() {
        let mut r = rng(5);
        for trial in 0..100 {
            let n = 1 + trial % 10;
            let k = r.gen_range(1..=(1usize << n).min(40));
            let set: Vec<GroupElement> = sample(&mut r, 1 << n, k)
                .into_iter()
                .map(|x| GroupElement::new(n, x as u32).unwrap())
                .collect();
            let fast: Vec<u32> = sumset(&set).unwrap().iter().map(|e| e.bits()).collect();
            assert_eq!(fast, naive_sumset(&set));
        }
    }

    #[test]
    fn subset_of_subspace_family() {
        let whole = random_subset_of_subspace(&mut rng(1), 5, 3, 8).unwrap();
        assert_eq!(whole.len(), 8);
        assert!(whole.iter().all(|e| e.bits() < 8));
        let single = random_subset_of_subspace(&mut rng(1), 5, 3, 1).unwrap();
        assert_eq!(single.len(), 1);
        let a = random_subset_of_subspace(&mut rng(9), 8, 6, 16).unwrap();
        assert_eq!(a, random_subset_of_subspace(&mut rng(9), 8, 6, 16).unwrap());
        assert!(sumset(&a).unwrap().len() <= 64);
        assert!(random_subset_of_subspace(&mut rng(1), 5, 3, 9).is_err());
    }

    #[test]
    fn union_of_cosets_family() {
        let v = union_of_cosets(&mut rng(2), 6, 3, 1).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|e| e.bits() < 8));
        let lambda = union_of_cosets(&mut rng(2), 6, 0, 5).unwrap();
        assert_eq!(lambda.len(), 5);

        let a = union_of_cosets(&mut rng(4), 8, 3, 4).unwrap();
        assert_eq!(a.len(), 32);
        let lam: Vec<GroupElement> = a.iter().filter(|e| e.bits() & 7 == 0).copied().collect();
        assert_eq!(lam.len(), 4);
        let bound = 8 * sumset(&lam).unwrap().len();
        assert!(sumset(&a).unwrap().len() <= bound);
        assert!(union_of_cosets(&mut rng(4), 4, 3, 3).is_err());
    }

    #[test]
    fn set_file_round_trip() {
        let a = hamming_ball(5, 1).unwrap();
        let f = SetFile::new(5, &a);
        let json = serde_json::to_string(&f).unwrap();
        let back: SetFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.elements().unwrap(), a);
        assert!(SetFile {
            n: 3,
            elements: vec!["ff".into()]
        }
        .elements()
        .is_err());
        assert!(SetFile {
            n: 3,
            elements: vec![]
        }
        .elements()
        .is_err());
    }

    #[test]
    fn expected_log_intersection_cases() {
        let v = Subspace::span(
            3,
            &[
                GroupElement::from_coords("100").unwrap(),
                GroupElement::from_coords("010").unwrap(),
            ],
        )
        .unwrap();
        let a = v.elements();
        assert!((expected_log_intersection(&a, &v).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(
            expected_log_intersection(&a, &Subspace::zero(3)).unwrap(),
            0.0
        );
    }
}
