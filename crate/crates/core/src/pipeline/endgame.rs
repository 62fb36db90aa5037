//! The endgame: when none of the four doubling moves gains, the fibers
//! `X_u = (X1 | X1+Y2 = u)` and `Y_w = (Y1 | Y1+X2 = w)` are nearly killed by
//! PFR subspaces of `X_u + Y_w`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::certificate::Check;
use crate::dist::{compress_quotient, product, xor_convolve, Dist, Fibers, LinearMap};
use crate::entropy::{
    conditional_doubling_mass, conditional_entropy, conditional_mutual_information, ruzsa_distance,
    shannon_entropy,
};
use crate::error::{Error, Result};
use crate::gf2::Subspace;
use crate::oracle::{pfr_subspace, pfr_subspace_ranked};

/// How the per-fiber PFR subspace is chosen among the qualifying ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberOracle {
    /// Smallest qualifying subspace.
    Minimal,
    /// Qualifying subspace minimizing `dim V + H[pi X_u] + H[pi Y_w]`.
    #[default]
    Balanced,
}

/// Pairs beyond this many make the per-fiber table a capacity error.
pub const MAX_FIBER_PAIRS: usize = 4096;

/// The four quantities whose gain the endgame rules out, each with the
/// entropy it is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndgameQuantities {
    pub h_x: f64,
    pub h_y: f64,
    pub s_xy: f64,
    /// `s[X1+X2; Y1+Y2]` and `H[X1+X2] + H[Y1+Y2]`.
    pub s_sums_same: f64,
    pub h_sums_same: f64,
    /// `s[X1+Y2; X2+Y1]` and `H[X1+Y2] + H[X2+Y1]`.
    pub s_sums_cross: f64,
    pub h_sums_cross: f64,
    /// `s[X1|X1+X2; Y1|Y1+Y2]` and `H[X1|X1+X2] + H[Y1|Y1+Y2]`.
    pub s_fibers_same: f64,
    pub h_fibers_same: f64,
    /// `s[X1|X1+Y2; Y1|Y1+X2]` and `H[X1|X1+Y2] + H[Y1|Y1+X2]`.
    pub s_fibers_cross: f64,
    pub h_fibers_cross: f64,
}

impl EndgameQuantities {
    pub fn new(p: &Dist, q: &Dist) -> Result<Self> {
        let h_x = shannon_entropy(p);
        let h_y = shannon_entropy(q);
        let xx = xor_convolve(p, p)?;
        let yy = xor_convolve(q, q)?;
        let xy = xor_convolve(p, q)?;
        let (hxx, hyy, hxy) = (
            shannon_entropy(&xx),
            shannon_entropy(&yy),
            shannon_entropy(&xy),
        );
        let s_xy = h_x + h_y - hxy;
        let s_sums_same = hxx + hyy - shannon_entropy(&xor_convolve(&xx, &yy)?);
        let s_sums_cross = 2.0 * hxy - shannon_entropy(&xor_convolve(&xy, &xy)?);
        let s_fibers_same =
            conditional_doubling_mass(&Fibers::of_sum(p, p)?, &Fibers::of_sum(q, q)?)?;
        let s_fibers_cross =
            conditional_doubling_mass(&Fibers::of_sum(p, q)?, &Fibers::of_sum(q, p)?)?;
        Ok(Self {
            h_x,
            h_y,
            s_xy,
            s_sums_same,
            h_sums_same: hxx + hyy,
            s_sums_cross,
            h_sums_cross: 2.0 * hxy,
            s_fibers_same,
            // H[X1 | X1+X2] = 2H[X] - H[X1+X2]
            h_fibers_same: 2.0 * h_x - hxx + 2.0 * h_y - hyy,
            s_fibers_cross,
            // H[X1 | X1+Y2] = H[Y1 | Y1+X2] = s[X;Y]
            h_fibers_cross: 2.0 * s_xy,
        })
    }

    pub fn total(&self) -> f64 {
        self.h_x + self.h_y
    }

    /// `(name, s, H)` for the four moves in a fixed order.
    pub fn moves(&self) -> [(&'static str, f64, f64); 4] {
        [
            ("s[X1+X2;Y1+Y2]", self.s_sums_same, self.h_sums_same),
            ("s[X1+Y2;X2+Y1]", self.s_sums_cross, self.h_sums_cross),
            (
                "s[X1|X1+X2;Y1|Y1+Y2]",
                self.s_fibers_same,
                self.h_fibers_same,
            ),
            (
                "s[X1|X1+Y2;Y1|Y1+X2]",
                self.s_fibers_cross,
                self.h_fibers_cross,
            ),
        ]
    }

    /// Smallest `kappa >= 0` for which all four hypotheses hold at `eta`.
    pub fn kappa(&self, eta: f64) -> f64 {
        self.moves()
            .iter()
            .map(|(_, s, h)| s - eta * h)
            .fold(0.0, f64::max)
    }
}

/// One row of the per-fiber subspace table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPair {
    pub u: u32,
    pub w: u32,
    pub weight: f64,
    pub subspace: Subspace,
    pub h_xu: f64,
    pub h_yw: f64,
    pub h_proj_xu: f64,
    pub h_proj_yw: f64,
    /// `H[A_uw]` for `A_uw = X_u + Y_w`.
    pub h_sum: f64,
    /// `d[A_uw; A_uw + w]`, the distance fed to the PFR search.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndgameTranscript {
    pub eta: f64,
    pub kappa: f64,
    pub quantities: EndgameQuantities,
    /// `s[X;Y] >= eta (H[X]+H[Y])` followed by the four move hypotheses.
    pub hypotheses: Vec<Check>,
    pub i13: f64,
    pub i12: f64,
    /// `None` when the four-copy joint exceeds the joint capacity; the
    /// mutual informations then come from the fibring identities alone.
    pub i23: Option<f64>,
    pub h_z_given_s: Option<[f64; 3]>,
    pub expected_fiber_distance: f64,
    pub fiber_oracle: FiberOracle,
    pub table: Vec<FiberPair>,
    pub expectation: f64,
    pub checks: Vec<Check>,
}

impl EndgameTranscript {
    pub fn all_hold(&self) -> bool {
        self.hypotheses.iter().chain(&self.checks).all(|c| c.holds)
    }

    /// `V(u, w)` indexed like `(Fibers::of_sum(X, Y), Fibers::of_sum(Y, X))`.
    pub fn subspace_table(&self, fx: &Fibers, fy: &Fibers) -> Result<Vec<Vec<Subspace>>> {
        let index = |u: u32, w: u32| self.table.iter().find(|r| r.u == u && r.w == w);
        fx.entries
            .iter()
            .map(|a| {
                fy.entries
                    .iter()
                    .map(|b| {
                        index(a.label, b.label)
                            .map(|r| r.subspace.clone())
                            .ok_or_else(|| {
                                Error::Validation(format!(
                                    "no subspace for fibers ({}, {})",
                                    a.label, b.label
                                ))
                            })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Hypothesis checks of the endgame at `(eta, kappa)`.
pub fn endgame_hypotheses(q: &EndgameQuantities, eta: f64, kappa: f64) -> Vec<Check> {
    let mut checks = vec![Check::ge(
        "s[X;Y] >= eta(H[X]+H[Y])",
        q.s_xy,
        eta * q.total(),
    )];
    for (name, s, h) in q.moves() {
        checks.push(Check::le(
            format!("{name} <= eta H + kappa"),
            s,
            eta * h + kappa,
        ));
    }
    checks
}

/// Mutual informations of `Z1 = X1+Y1, Z2 = X2+Y1, Z3 = X1+X2` given
/// `S = X1+X2+Y1+Y2`, from the explicit four-copy joint.
fn z_information(p: &Dist, q: &Dist) -> Result<(f64, f64, f64, [f64; 3])> {
    let joint = product(&[p, p, q, q])?;
    let z = joint.map(&LinearMap::new(vec![
        vec![0, 2],
        vec![1, 2],
        vec![0, 1],
        vec![0, 1, 2, 3],
    ]))?;
    let i13 = conditional_mutual_information(&z, &[0], &[2], &[3])?;
    let i12 = conditional_mutual_information(&z, &[0], &[1], &[3])?;
    let i23 = conditional_mutual_information(&z, &[1], &[2], &[3])?;
    let h = [
        conditional_entropy(&z, &[0], &[3])?,
        conditional_entropy(&z, &[1], &[3])?,
        conditional_entropy(&z, &[2], &[3])?,
    ];
    Ok((i13, i12, i23, h))
}

/// Runs the endgame at `(eta, kappa)`; fails with the largest hypothesis
/// gap if a hypothesis does not hold.
pub fn endgame(
    p: &Dist,
    q: &Dist,
    eta: f64,
    kappa: f64,
    oracle: FiberOracle,
) -> Result<EndgameTranscript> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: q.n(),
        });
    }
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::Parameter(format!("eta = {eta} not in (0, 1/2]")));
    }
    if !(kappa >= 0.0) {
        return Err(Error::Parameter(format!("kappa = {kappa} must be >= 0")));
    }
    let quantities = EndgameQuantities::new(p, q)?;
    let hypotheses = endgame_hypotheses(&quantities, eta, kappa);
    if let Some(worst) = hypotheses
        .iter()
        .filter(|c| !c.holds)
        .min_by(|a, b| a.margin().total_cmp(&b.margin()))
    {
        return Err(Error::Hypothesis {
            name: worst.name.clone(),
            gap: -worst.margin(),
        });
    }
    let t = quantities.total();
    let mut checks = Vec::new();

    // fibring bookkeeping: each move pair sums to 2s plus a conditional MI
    let i13 = quantities.s_sums_same + quantities.s_fibers_same - 2.0 * quantities.s_xy;
    let i12 = quantities.s_sums_cross + quantities.s_fibers_cross - 2.0 * quantities.s_xy;
    let lhs_sum: f64 = quantities.moves().iter().map(|m| m.1).sum();
    let h_sum: f64 = quantities.moves().iter().map(|m| m.2).sum();
    checks.push(Check::eq(
        "sum of move entropies == 4(H[X]+H[Y])",
        h_sum,
        4.0 * t,
    ));
    checks.push(Check::eq(
        "sum of moves == 4 s[X;Y] + I[Z1:Z3|S] + I[Z1:Z2|S]",
        lhs_sum,
        4.0 * quantities.s_xy + i13 + i12,
    ));
    checks.push(Check::le(
        "I[Z1:Z3|S] + I[Z1:Z2|S] <= 4 kappa",
        i13 + i12,
        4.0 * kappa,
    ));

    let (i23, h_z) = if 4 * p.n() <= caps::MAX_JOINT_BITS {
        let (j13, j12, j23, h) = z_information(p, q)?;
        checks.push(Check::eq(
            "I[Z1:Z3|S] from joint == fibring value",
            j13,
            i13,
        ));
        checks.push(Check::eq(
            "I[Z1:Z2|S] from joint == fibring value",
            j12,
            i12,
        ));
        checks.push(Check::eq("I[Z2:Z3|S] == I[Z1:Z3|S]", j23, j13));
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            checks.push(Check::le(
                format!("|H[Z{}|S] - H[Z{}|S]| <= 4 kappa", a + 1, b + 1),
                (h[a] - h[b]).abs(),
                4.0 * kappa,
            ));
        }
        (Some(j23), Some(h))
    } else {
        (None, None)
    };

    // per-fiber PFR subspaces
    let fx = Fibers::of_sum(p, q)?;
    let fy = Fibers::of_sum(q, p)?;
    let pairs: Vec<(usize, usize)> = (0..fx.len())
        .flat_map(|i| (0..fy.len()).map(move |j| (i, j)))
        .collect();
    if pairs.len() > MAX_FIBER_PAIRS {
        return Err(Error::Capacity {
            what: "endgame fiber pairs",
            requested: pairs.len(),
            limit: MAX_FIBER_PAIRS,
        });
    }
    let table: Vec<FiberPair> = pairs
        .par_iter()
        .map(|&(i, j)| fiber_pair(&fx.entries[i], &fy.entries[j], oracle))
        .collect::<Result<_>>()?;
    let expectation: f64 = table
        .iter()
        .map(|r| r.weight * (r.h_proj_xu + r.h_proj_yw))
        .sum();
    let expected_fiber_distance: f64 = table.iter().map(|r| r.weight * r.distance).sum();
    let worst_size = table
        .iter()
        .map(|r| r.subspace.dim() as f64 - 14.0 * r.h_sum)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::le(
        "max_(u,w) H[U_V(u,w)] - 7(H[A_uw]+H[A_uw+w]) <= 0",
        worst_size,
        0.0,
    ));
    if let Some(h) = h_z {
        let bsg = 3.0 * i13 + 2.0 * h[1] - h[0] - h[2];
        checks.push(Check::le(
            "E d[Z1|Z2,S; Z3|Z2,S] <= 3I[Z1:Z3|S] + 2H[Z2|S] - H[Z1|S] - H[Z3|S]",
            expected_fiber_distance,
            bsg,
        ));
        checks.push(Check::le("BSG bound <= 20 kappa", bsg, 20.0 * kappa));
    }
    checks.push(Check::le(
        "E[H[pi X_u] + H[pi Y_w]] <= 480 kappa",
        expectation,
        480.0 * kappa,
    ));

    Ok(EndgameTranscript {
        eta,
        kappa,
        quantities,
        hypotheses,
        i13,
        i12,
        i23,
        h_z_given_s: h_z,
        expected_fiber_distance,
        fiber_oracle: oracle,
        table,
        expectation,
        checks,
    })
}

fn fiber_pair(
    a: &crate::dist::Fiber,
    b: &crate::dist::Fiber,
    oracle: FiberOracle,
) -> Result<FiberPair> {
    let sum = xor_convolve(&a.dist, &b.dist)?;
    // (X1 + X2 | U = u, W = w) is (X1 + Y1 | U = u, W = w) translated by w
    let shifted = sum.translate(b.label);
    let cert = match oracle {
        FiberOracle::Minimal => pfr_subspace(&sum, &shifted)?,
        FiberOracle::Balanced => pfr_subspace_ranked(&sum, &shifted, |v| {
            Ok(v.dim() as f64
                + shannon_entropy(&compress_quotient(&a.dist, v)?)
                + shannon_entropy(&compress_quotient(&b.dist, v)?))
        })?,
    };
    let v = cert.subspace;
    Ok(FiberPair {
        u: a.label,
        w: b.label,
        weight: a.weight * b.weight,
        h_xu: shannon_entropy(&a.dist),
        h_yw: shannon_entropy(&b.dist),
        h_proj_xu: shannon_entropy(&compress_quotient(&a.dist, &v)?),
        h_proj_yw: shannon_entropy(&compress_quotient(&b.dist, &v)?),
        distance: ruzsa_distance(&sum, &shifted)?,
        h_sum: shannon_entropy(&sum),
        subspace: v,
    })
}

/// `kappa` measured at `eta`, for callers that only know `eta`.
pub fn measured_kappa(p: &Dist, q: &Dist, eta: f64) -> Result<f64> {
    Ok(EndgameQuantities::new(p, q)?.kappa(eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_dist, rng};

    #[test]
    fn uniform_subspace_has_zero_kappa() {
        let v = Subspace::span_masks(3, &[0b011, 0b100]).unwrap();
        let u = Dist::uniform_on_subspace(&v).unwrap();
        let q = EndgameQuantities::new(&u, &u).unwrap();
        assert!(q.kappa(0.5).abs() < 1e-12);
        let t = endgame(&u, &u, 0.5, 0.0, FiberOracle::Minimal).unwrap();
        assert!(
            t.all_hold(),
            "{:?}",
            t.checks.iter().filter(|c| !c.holds).collect::<Vec<_>>()
        );
        assert!(t.expectation.abs() < 1e-12);
        assert!(t.i13.abs() < 1e-12 && t.i12.abs() < 1e-12);
    }

    #[test]
    fn failed_hypothesis_is_an_error() {
        let v = Subspace::span_masks(3, &[0b011, 0b100]).unwrap();
        let u = Dist::uniform_on_subspace(&v).unwrap();
        // s[X1+X2;Y1+Y2] = 2 > 0.3 * 4
        match endgame(&u, &u, 0.3, 0.0, FiberOracle::Minimal) {
            Err(Error::Hypothesis { gap, .. }) => assert!(gap > 0.0),
            other => panic!("expected a hypothesis error, got {other:?}"),
        }
        assert!(endgame(&u, &u, 0.3, -1.0, FiberOracle::Minimal).is_err());
    }

    #[test]
    fn random_instances_satisfy_all_checks() {
        let mut r = rng(31);
        for trial in 0..12 {
            let n = 2 + trial % 3;
            let p = random_dist(&mut r, n, 3 + trial % 4);
            let q = random_dist(&mut r, n, 3 + trial % 4);
            let quantities = EndgameQuantities::new(&p, &q).unwrap();
            let eta = (quantities.s_xy / quantities.total()).min(0.5);
            if eta <= 0.0 {
                continue;
            }
            let kappa = quantities.kappa(eta);
            for oracle in [FiberOracle::Minimal, FiberOracle::Balanced] {
                let t = endgame(&p, &q, eta, kappa, oracle).unwrap();
                let bad: Vec<_> = t.checks.iter().filter(|c| !c.holds).collect();
                assert!(bad.is_empty(), "trial {trial}: {bad:?}");
            }
        }
    }

    #[test]
    fn subspace_table_lines_up_with_fibers() {
        let mut r = rng(8);
        let p = random_dist(&mut r, 3, 4);
        let q = random_dist(&mut r, 3, 4);
        let eta = (EndgameQuantities::new(&p, &q).unwrap().s_xy
            / (shannon_entropy(&p) + shannon_entropy(&q)))
        .min(0.5);
        let t = endgame(
            &p,
            &q,
            eta,
            measured_kappa(&p, &q, eta).unwrap(),
            FiberOracle::default(),
        )
        .unwrap();
        let fx = Fibers::of_sum(&p, &q).unwrap();
        let fy = Fibers::of_sum(&q, &p).unwrap();
        let table = t.subspace_table(&fx, &fy).unwrap();
        assert_eq!(table.len(), fx.len());
        assert!(table.iter().all(|row| row.len() == fy.len()));
        let total: f64 = t.table.iter().map(|r| r.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
