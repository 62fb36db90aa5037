//! Seeded property suite over random instances at a fixed `n`: identities
//! are compared along two computation routes, inequalities are checked for
//! sign. Used by the `verify` command.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::dist::{product, xor_convolve, xor_convolve_naive, Fibers, LinearMap};
use crate::entropy::{
    conditional_mutual_information, fiber_doubling, fibring_decompose, joint_entropy,
    quotient_entropy, quotient_entropy_via_uniform, shannon_entropy,
};
use crate::error::{Error, Result};
use crate::gf2::Subspace;
use crate::oracle::bsg_check;
use crate::pipeline::induction::derive_seed;
use crate::pipeline::y_size_lower_bound_check;
use crate::random::{random_dist_any_support, random_joint, random_subspace, rng};
use crate::tol;

pub const CHECKS: [&str; 10] = [
    "chain rule",
    "quotient entropy identity",
    "fibring identity",
    "fast convolution",
    "base case",
    "submodularity",
    "subspace submodularity",
    "fiber interaction",
    "Y-size lower bound",
    "entropic BSG",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest identity error or inequality shortfall seen.
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckTally>,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn all_pass(&self) -> bool {
        self.violations() == 0
    }
}

/// Errors of one trial, indexed like [`CHECKS`]; `None` when a check does
/// not apply at this `n`.
fn trial(n: usize, seed: u64) -> Result<[Option<f64>; CHECKS.len()]> {
    let mut r = rng(seed);
    let p = random_dist_any_support(&mut r, n);
    let q = random_dist_any_support(&mut r, n);
    let g1 = r.gen_range(0..=n);
    let v = random_subspace(&mut r, n, g1);
    let g2 = r.gen_range(0..=n);
    let v2 = random_subspace(&mut r, n, g2);
    let mut out = [None; CHECKS.len()];
    let shortfall = |lhs: f64, rhs: f64| (rhs - lhs).max(0.0);

    let sum = xor_convolve(&p, &q)?;
    let (hx, hy, hs) = (
        shannon_entropy(&p),
        shannon_entropy(&q),
        shannon_entropy(&sum),
    );

    // H[X, X+Y] against H[X+Y] + sum_t P(X+Y=t) H[X | X+Y=t]
    if 2 * n <= caps::MAX_JOINT_BITS {
        let j = product(&[&p, &q])?.map(&LinearMap::new(vec![vec![0], vec![0, 1]]))?;
        let fibers = Fibers::of_sum(&p, &q)?;
        let h_cond: f64 = fibers
            .entries
            .iter()
            .map(|f| f.weight * shannon_entropy(&f.dist))
            .sum();
        let joint = joint_entropy(&j, &[0, 1])?;
        out[0] = Some((joint - (hs + h_cond)).abs().max((joint - (hx + hy)).abs()));
    }
    out[1] = Some((quotient_entropy(&p, &v)? - quotient_entropy_via_uniform(&p, &v)?).abs());
    out[2] = Some(fibring_decompose(&p, &q, &v)?.defect().abs());
    out[3] = Some(xor_convolve_naive(&p, &q)?.max_abs_diff(&sum));
    out[4] = Some(shortfall(hs, hx.max(hy)));

    let k = n.min(3);
    let support = r.gen_range(1..=1usize << (3 * k));
    let j3 = random_joint(&mut r, &[k, k, k], support);
    out[5] = Some(shortfall(
        conditional_mutual_information(&j3, &[0], &[1], &[2])?,
        0.0,
    ));

    let meet = v.intersect(&v2)?;
    let join = v.sum(&v2)?;
    out[6] = Some(shortfall(
        quotient_entropy(&p, &v)? + quotient_entropy(&p, &v2)?,
        quotient_entropy(&p, &join)? + quotient_entropy(&p, &meet)?,
    ));

    // W ⊆ V from half of V's basis
    let w = Subspace::span_masks(n, &join.basis_masks()[..join.dim() / 2])?;
    let big = fiber_doubling(&p, &q, &join)?;
    let small = fiber_doubling(&p, &q, &w)?;
    let between = fiber_doubling(
        &crate::dist::compress_quotient(&p, &w)?,
        &crate::dist::compress_quotient(&q, &w)?,
        &w.quotient_map().image(&join)?,
    )?;
    out[7] = Some(shortfall(small + between, big));
    let ys = y_size_lower_bound_check(&p, &q, &w, &join)?;
    out[8] = Some(shortfall(ys.check.lhs, ys.check.rhs));

    if 2 * n <= caps::MAX_JOINT_BITS {
        let size = 1usize << (2 * n);
        let support = r.gen_range(1..=size.min(64));
        let jab = random_joint(&mut r, &[n, n], support);
        let b = bsg_check(&jab)?;
        out[9] = Some(shortfall(b.rhs, b.lhs));
    }
    Ok(out)
}

/// Runs `trials` seeded trials at `n`, in parallel.
pub fn run_suite(n: usize, trials: usize, seed: u64) -> Result<SuiteReport> {
    if n == 0 {
        return Err(Error::Parameter("the suite needs n >= 1".into()));
    }
    caps::check_dense_n(n)?;
    let results: Vec<[Option<f64>; CHECKS.len()]> = (0..trials)
        .into_par_iter()
        .map(|t| trial(n, derive_seed(seed, t as u64)))
        .collect::<Result<_>>()?;
    let checks = CHECKS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let errors: Vec<f64> = results.iter().filter_map(|r| r[i]).collect();
            let bound = if i == 3 { tol::ORACLE } else { tol::IDENTITY };
            CheckTally {
                name: name.to_string(),
                trials: errors.len(),
                violations: errors.iter().filter(|&&e| e > bound).count(),
                max_error: errors.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(SuiteReport {
        n,
        trials,
        seed,
        checks,
    })
}
