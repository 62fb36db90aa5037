//! Local-to-global: subspaces explaining the interaction of fiber pairs are
//! summed along a random fiber sequence until one subspace removes a fixed
//! fraction of the entropy of `Y`.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::Check;
use crate::dist::{compress_quotient, Dist, Fibers};
use crate::entropy::{fiber_doubling, shannon_entropy};
use crate::error::{Error, Result};
use crate::gf2::Subspace;
use crate::oracle::ProjectionCache;
use crate::random::rng;
use crate::tol;

/// Subspace table indexed by `[fiber of X][fiber of Y]`.
pub type SubspaceTable = Vec<Vec<Subspace>>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalToGlobalConfig {
    pub seed: u64,
    /// Largest number of distinct partial sums tracked per fiber of `X`
    /// before `h_j` switches to Monte Carlo.
    pub exact_budget: usize,
    pub mc_samples: usize,
}

impl Default for LocalToGlobalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            exact_budget: 4096,
            mc_samples: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub u: u32,
    pub ws: Vec<u32>,
    pub dim: usize,
    pub h_y_given_proj: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalToGlobalReport {
    pub subspace: Subspace,
    pub zeta: f64,
    pub tau: f64,
    pub k: usize,
    /// `h_0, h_1, ...` up to `h_{k+1}`.
    pub h: Vec<f64>,
    /// Monte Carlo sample count when `h` was estimated, `None` when exact.
    pub mc_samples: Option<usize>,
    pub expected_dim: f64,
    pub hypothesis: Check,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub retry_cap: usize,
    pub attempts: Vec<Attempt>,
}

fn check_table(fx: &Fibers, fy: &Fibers, table: &SubspaceTable) -> Result<()> {
    if table.len() != fx.len() || table.iter().any(|row| row.len() != fy.len()) {
        return Err(Error::Validation(format!(
            "subspace table must be {} x {}",
            fx.len(),
            fy.len()
        )));
    }
    if fx.n() != fy.n() || table.iter().flatten().any(|v| v.n() != fx.n()) {
        return Err(Error::DimensionMismatch {
            expected: fx.n(),
            found: fy.n(),
        });
    }
    Ok(())
}

/// `E_{u,w} s[X_u | pi X_u; Y_w | pi Y_w]` with `pi` by `V(u, w)`.
pub fn expected_fiber_doubling(fx: &Fibers, fy: &Fibers, table: &SubspaceTable) -> Result<f64> {
    check_table(fx, fy, table)?;
    let terms: Vec<f64> = (0..fx.len())
        .into_par_iter()
        .flat_map_iter(|i| (0..fy.len()).map(move |j| (i, j)))
        .map(|(i, j)| {
            let a = &fx.entries[i];
            let b = &fy.entries[j];
            Ok(a.weight * b.weight * fiber_doubling(&a.dist, &b.dist, &table[i][j])?)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// `h_0, ..., h_{max_j}`: exact over the law of the partial sums
/// `V(u,w1) + ... + V(u,wj)` when it stays within budget, else estimated.
fn h_profile(
    fx: &Fibers,
    fy: &Fibers,
    table: &SubspaceTable,
    max_j: usize,
    cfg: &LocalToGlobalConfig,
) -> Result<(Vec<f64>, Option<usize>)> {
    let caches: Vec<ProjectionCache> = fx
        .entries
        .iter()
        .map(|f| ProjectionCache::new(&f.dist))
        .collect();
    let exact: Option<Vec<f64>> = (|| -> Result<Option<Vec<f64>>> {
        let mut h = vec![0.0; max_j + 1];
        for (i, f) in fx.entries.iter().enumerate() {
            let mut law: HashMap<Subspace, f64> = HashMap::new();
            law.insert(Subspace::zero(fx.n()), 1.0);
            for j in 0..=max_j {
                let hj: f64 = law
                    .iter()
                    .map(|(v, p)| Ok(p * caches[i].entropy(v)?))
                    .sum::<Result<f64>>()?;
                h[j] += f.weight * hj;
                if j == max_j {
                    break;
                }
                let mut next: HashMap<Subspace, f64> = HashMap::new();
                for (v, p) in &law {
                    for (jj, g) in fy.entries.iter().enumerate() {
                        *next.entry(v.sum(&table[i][jj])?).or_insert(0.0) += p * g.weight;
                    }
                }
                if next.len() > cfg.exact_budget {
                    return Ok(None);
                }
                law = next;
            }
        }
        Ok(Some(h))
    })()?;
    if let Some(h) = exact {
        return Ok((h, None));
    }

    let mut r = rng(cfg.seed ^ 0x6a09_e667_f3bc_c908);
    let du = WeightedIndex::new(fx.entries.iter().map(|f| f.weight)).map_err(weights_error)?;
    let dw = WeightedIndex::new(fy.entries.iter().map(|f| f.weight)).map_err(weights_error)?;
    let mut h = vec![0.0; max_j + 1];
    for _ in 0..cfg.mc_samples {
        let i = du.sample(&mut r);
        let mut v = Subspace::zero(fx.n());
        for slot in h.iter_mut() {
            *slot += caches[i].entropy(&v)?;
            let jj = dw.sample(&mut r);
            v = v.sum(&table[i][jj])?;
        }
    }
    h.iter_mut().for_each(|x| *x /= cfg.mc_samples as f64);
    Ok((h, Some(cfg.mc_samples)))
}

fn weights_error(e: rand::distributions::WeightedError) -> Error {
    Error::Validation(format!("fiber weights: {e}"))
}

/// Finds `V̄ = V(u, w1) + ... + V(u, wk)` with
/// `H[Y | pi Y] >= (zeta/4)(H[X]+H[Y])` and
/// `H[U_V̄] <= (8/zeta^2) E H[U_V(u,w)]`, where `X` and `Y` are the mixtures
/// of the fibers. Requires the fiber-doubling hypothesis at `zeta`.
pub fn local_to_global(
    fx: &Fibers,
    fy: &Fibers,
    table: &SubspaceTable,
    zeta: f64,
    cfg: &LocalToGlobalConfig,
) -> Result<LocalToGlobalReport> {
    check_table(fx, fy, table)?;
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Parameter(format!("zeta = {zeta} not in (0, 1]")));
    }
    let x = fx.mixture()?;
    let y = fy.mixture()?;
    let (hx, hy) = (shannon_entropy(&x), shannon_entropy(&y));
    let total = hx + hy;

    let hypothesis = Check::ge(
        "E s[X_u|pi X_u; Y_w|pi Y_w] >= zeta(H[X]+H[Y])",
        expected_fiber_doubling(fx, fy, table)?,
        zeta * total,
    );
    if !hypothesis.holds {
        return Err(Error::Hypothesis {
            name: hypothesis.name.clone(),
            gap: -hypothesis.margin(),
        });
    }

    let tau = zeta / 2.0;
    let k_max = (1.0 / tau).ceil() as usize;
    let (h, mc_samples) = h_profile(fx, fy, table, k_max + 1, cfg)?;
    // smallest k >= 1 with h_k - h_{k+1} <= tau h_0; the flattest step if
    // estimation noise hides every such k
    let k = (1..=k_max)
        .find(|&k| h[k] - h[k + 1] <= tau * h[0] + tol::IDENTITY)
        .unwrap_or_else(|| {
            (1..=k_max)
                .min_by(|&a, &b| (h[a] - h[a + 1]).total_cmp(&(h[b] - h[b + 1])))
                .expect("k_max >= 1")
        });
    let h = h[..=k + 1].to_vec();

    let expected_dim: f64 = fx
        .entries
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            fy.entries
                .iter()
                .enumerate()
                .map(move |(j, b)| a.weight * b.weight * table[i][j].dim() as f64)
        })
        .sum();
    let y_floor = zeta / 4.0 * total;
    let dim_cap = 8.0 / (zeta * zeta) * expected_dim;

    let retry_cap = (100.0 / zeta).ceil() as usize;
    let du = WeightedIndex::new(fx.entries.iter().map(|f| f.weight)).map_err(weights_error)?;
    let dw = WeightedIndex::new(fy.entries.iter().map(|f| f.weight)).map_err(weights_error)?;
    let mut r = rng(cfg.seed);
    let cache_y = ProjectionCache::new(&y);
    let mut attempts = Vec::new();
    for _ in 0..retry_cap {
        let i = du.sample(&mut r);
        let mut v = Subspace::zero(fx.n());
        let mut ws = Vec::with_capacity(k);
        for _ in 0..k {
            let j = dw.sample(&mut r);
            ws.push(fy.entries[j].label);
            v = v.sum(&table[i][j])?;
        }
        let h_cond = hy - cache_y.entropy(&v)?;
        let checks = vec![
            Check::ge("H[Y|pi Y] >= (zeta/4)(H[X]+H[Y])", h_cond, y_floor),
            Check::le(
                "H[U_V] <= (8/zeta^2) E H[U_V(u,w)]",
                v.dim() as f64,
                dim_cap,
            ),
        ];
        let accepted = checks.iter().all(|c| c.holds);
        attempts.push(Attempt {
            u: fx.entries[i].label,
            ws,
            dim: v.dim(),
            h_y_given_proj: h_cond,
            accepted,
        });
        if accepted {
            return Ok(LocalToGlobalReport {
                subspace: v,
                zeta,
                tau,
                k,
                h,
                mc_samples,
                expected_dim,
                hypothesis,
                checks,
                seed: cfg.seed,
                retry_cap,
                attempts,
            });
        }
    }
    Err(Error::RetryCapExhausted {
        cap: retry_cap,
        attempts: attempts
            .iter()
            .map(|a| {
                format!(
                    "u={:x} w={:?} dim={} H[Y|pi Y]={:.6}",
                    a.u, a.ws, a.dim, a.h_y_given_proj
                )
            })
            .collect(),
    })
}

/// Re-evaluates the two success inequalities of a report against `Y`.
pub fn recheck(report: &LocalToGlobalReport, fx: &Fibers, fy: &Fibers) -> Result<bool> {
    let x = fx.mixture()?;
    let y = fy.mixture()?;
    let total = shannon_entropy(&x) + shannon_entropy(&y);
    let h_cond = shannon_entropy(&y) - shannon_entropy(&compress_quotient(&y, &report.subspace)?);
    Ok(h_cond >= report.zeta / 4.0 * total - tol::IDENTITY
        && report.subspace.dim() as f64
            <= 8.0 / (report.zeta * report.zeta) * report.expected_dim + tol::IDENTITY)
}

/// Fibers with their conditioning labels dropped, for callers holding a
/// plain family of laws.
pub fn fibers_from(weighted: &[(f64, Dist)]) -> Result<Fibers> {
    Fibers::new(
        weighted
            .iter()
            .enumerate()
            .map(|(i, (w, d))| crate::dist::Fiber {
                label: i as u32,
                weight: *w,
                dist: d.clone(),
            })
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YSizeReport {
    /// `H[Y | pi_W Y]`.
    pub h_y_given_w: f64,
    /// `s[X | pi_V X; Y | pi_V Y]`.
    pub fiber_doubling_v: f64,
    /// `H[pi_W X | pi_V X] = H[pi_W X] - H[pi_V X]`.
    pub h_xw_given_xv: f64,
    pub check: Check,
}

/// For `W ⊆ V`: `H[Y | pi_W Y] >= s[X|pi_V X; Y|pi_V Y] - H[pi_W X | pi_V X]`.
pub fn y_size_lower_bound_check(
    p: &Dist,
    q: &Dist,
    w: &Subspace,
    v: &Subspace,
) -> Result<YSizeReport> {
    if !w.is_subspace_of(v) {
        return Err(Error::Validation("W must be contained in V".into()));
    }
    let h_y_given_w = shannon_entropy(q) - shannon_entropy(&compress_quotient(q, w)?);
    let fiber_doubling_v = fiber_doubling(p, q, v)?;
    let h_xw_given_xv =
        shannon_entropy(&compress_quotient(p, w)?) - shannon_entropy(&compress_quotient(p, v)?);
    let check = Check::ge(
        "H[Y|pi_W Y] >= s[X|pi_V X;Y|pi_V Y] - H[pi_W X|pi_V X]",
        h_y_given_w,
        fiber_doubling_v - h_xw_given_xv,
    );
    Ok(YSizeReport {
        h_y_given_w,
        fiber_doubling_v,
        h_xw_given_xv,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Fiber;

    fn uniform(n: usize, masks: &[u32]) -> Dist {
        Dist::uniform_on_subspace(&Subspace::span_masks(n, masks).unwrap()).unwrap()
    }

    // X and Y uniform on F_2^2 split into two fibers each; every fiber pair
    // is explained by the full space.
    fn split_instance() -> (Fibers, Fibers, SubspaceTable) {
        let fib = |label: u32, d: Dist| Fiber {
            label,
            weight: 0.5,
            dist: d,
        };
        let a = uniform(2, &[0b01]);
        let b = a.translate(0b10);
        let fx = Fibers::new(vec![fib(0, a.clone()), fib(1, b.clone())]).unwrap();
        let fy = Fibers::new(vec![fib(0, a), fib(1, b)]).unwrap();
        let table = vec![vec![Subspace::full(2); 2]; 2];
        (fx, fy, table)
    }

    #[test]
    fn finds_a_subspace_that_kills_the_fibers() {
        let (fx, fy, table) = split_instance();
        // each fiber pair has s = 1 - 0 ... fiber doubling is 1 + 1 - 1 = 1
        let e = expected_fiber_doubling(&fx, &fy, &table).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        let report =
            local_to_global(&fx, &fy, &table, 0.25, &LocalToGlobalConfig::default()).unwrap();
        assert_eq!(report.subspace, Subspace::full(2));
        assert!(report.checks.iter().all(|c| c.holds));
        assert!(report.mc_samples.is_none());
        assert!(report.k >= 1);
        assert!(recheck(&report, &fx, &fy).unwrap());
    }

    #[test]
    fn hypothesis_and_shape_errors() {
        let (fx, fy, table) = split_instance();
        // expected fiber doubling is 1 < 0.5 * 4
        assert!(matches!(
            local_to_global(&fx, &fy, &table, 0.5, &LocalToGlobalConfig::default()),
            Err(Error::Hypothesis { .. })
        ));
        assert!(local_to_global(
            &fx,
            &fy,
            &table[..1].to_vec(),
            0.25,
            &LocalToGlobalConfig::default()
        )
        .is_err());
        assert!(local_to_global(&fx, &fy, &table, 0.0, &LocalToGlobalConfig::default()).is_err());
    }

    #[test]
    fn monte_carlo_profile_is_seeded() {
        let (fx, fy, table) = split_instance();
        let cfg = LocalToGlobalConfig {
            seed: 3,
            exact_budget: 0,
            mc_samples: 500,
        };
        let a = local_to_global(&fx, &fy, &table, 0.25, &cfg).unwrap();
        let b = local_to_global(&fx, &fy, &table, 0.25, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mc_samples, Some(500));
    }

    #[test]
    fn y_size_bound() {
        let mut r = crate::random::rng(12);
        for _ in 0..50 {
            let p = crate::random::random_dist(&mut r, 4, 6);
            let q = crate::random::random_dist(&mut r, 4, 6);
            let v = crate::random::random_subspace(&mut r, 4, 3);
            let w = Subspace::span_masks(4, &v.basis_masks()[..v.dim() / 2]).unwrap();
            let rep = y_size_lower_bound_check(&p, &q, &w, &v).unwrap();
            assert!(rep.check.holds, "{rep:?}");
            let same = y_size_lower_bound_check(&p, &q, &v, &v).unwrap();
            assert!(same.h_xw_given_xv.abs() < 1e-12);
        }
        let v = Subspace::span_masks(3, &[1]).unwrap();
        let u = uniform(3, &[1]);
        assert!(y_size_lower_bound_check(&u, &u, &Subspace::full(3), &v).is_err());
    }

    #[test]
    fn fibers_from_weights() {
        let f = fibers_from(&[(0.25, uniform(2, &[1])), (0.75, uniform(2, &[2]))]).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.entries[1].label, 1);
    }
}
