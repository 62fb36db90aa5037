//! Consequences of statement B: rich cosets for a pair, projected k-fold
//! sums, and the large-intersection subspace for a set.

use serde::{Deserialize, Serialize};

use crate::certificate::{
    certify, CertInputs, Criterion, Parameters, ParamsB, SearchMode, SubspaceCertificate,
};
use crate::dist::{compress_quotient, uniform_on, xor_convolve, Dist};
use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::families::{doubling_stats, DoublingStats};
use crate::gf2::{GroupElement, Subspace};
use crate::tol;

use super::induction::{derive_seed, solve_b, PipelineConfig, PipelineTrace};

fn epsilon_in_range(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon = {epsilon} not in (0, 1]"
        )));
    }
    Ok(())
}

fn certify_or_fail(
    criterion: Criterion,
    inputs: &CertInputs,
    v: &Subspace,
    params: Parameters,
) -> Result<SubspaceCertificate> {
    certify(criterion, inputs, v, params, SearchMode::Pipeline)?.map_err(|v| {
        Error::SearchFailure(format!(
            "{criterion:?} fails at the pipeline subspace: {:?}",
            v.failing().map(|c| &c.name).collect::<Vec<_>>()
        ))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichCosets {
    pub certificate: SubspaceCertificate,
    pub trace: PipelineTrace,
}

/// `V` with `s[pi X; pi Y] <= eps(H[X]+H[Y])`, so both `H[X | pi X]` and
/// `H[Y | pi Y]` are at least `s[X;Y] - eps(H[X]+H[Y])`.
pub fn rich_cosets(p: &Dist, q: &Dist, epsilon: f64, cfg: &PipelineConfig) -> Result<RichCosets> {
    epsilon_in_range(epsilon)?;
    let half = epsilon / 2.0;
    let solution = solve_b(p, q, ParamsB::new(half.min(0.5), half, None)?, cfg)?;
    let certificate = certify_or_fail(
        Criterion::RichCosets,
        &CertInputs::pair(p, q),
        &solution.certificate.subspace,
        Parameters {
            epsilon: Some(epsilon),
            ..Default::default()
        },
    )?;
    Ok(RichCosets {
        certificate,
        trace: solution.trace,
    })
}

/// One refinement of [`many_sums`]: the prefix sum whose doubling with the
/// next summand was too large, and the subspace after refining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManySumsStep {
    pub prefix: usize,
    pub doubling: f64,
    pub subspace: Subspace,
    pub projected_total_before: f64,
    pub projected_total_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManySums {
    pub certificate: SubspaceCertificate,
    pub steps: Vec<ManySumsStep>,
}

/// Largest number of summands accepted by [`many_sums`].
pub const MAX_SUMMANDS: usize = 4;

/// `V` with `H[pi X_1 + ... + pi X_k] >= sum H[pi X_i] - eps sum H[X_i]`.
/// Refines `V` by rich cosets of the first prefix sum that doubles too much.
pub fn many_sums(dists: &[Dist], epsilon: f64, cfg: &PipelineConfig) -> Result<ManySums> {
    epsilon_in_range(epsilon)?;
    let k = dists.len();
    if !(2..=MAX_SUMMANDS).contains(&k) {
        return Err(Error::Capacity {
            what: "summands",
            requested: k,
            limit: MAX_SUMMANDS,
        });
    }
    let n = dists[0].n();
    if let Some(bad) = dists.iter().find(|d| d.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n(),
        });
    }
    let delta = epsilon / (k - 1) as f64;
    let total: f64 = dists.iter().map(shannon_entropy).sum();
    let inputs = CertInputs::Many {
        dists: dists.to_vec(),
    };
    let params = Parameters {
        epsilon: Some(epsilon),
        ..Default::default()
    };
    let cap = (2.0 / delta).ceil() as usize;
    let mut v = Subspace::zero(n);
    let mut steps = Vec::new();
    for round in 0..=cap {
        if let Ok(cert) = certify(
            Criterion::ManySums,
            &inputs,
            &v,
            params,
            SearchMode::Pipeline,
        )? {
            return Ok(ManySums {
                certificate: cert,
                steps,
            });
        }
        if round == cap {
            break;
        }
        let projected: Vec<Dist> = dists
            .iter()
            .map(|d| compress_quotient(d, &v))
            .collect::<Result<_>>()?;
        let before: f64 = projected.iter().map(shannon_entropy).sum();
        // the k-1 prefix doublings telescope to the total loss, so one of
        // them exceeds delta times the total
        let mut prefix = projected[0].clone();
        let mut culprit = None;
        for (i, next) in projected.iter().enumerate().skip(1) {
            let sum = xor_convolve(&prefix, next)?;
            let s = shannon_entropy(&prefix) + shannon_entropy(next) - shannon_entropy(&sum);
            if s > delta * total + tol::IDENTITY {
                culprit = Some((i, s, prefix.clone(), next.clone()));
                break;
            }
            prefix = sum;
        }
        let (i, s, a, b) = culprit.ok_or_else(|| {
            Error::SearchFailure("no prefix sum exceeds the per-step budget".into())
        })?;
        let rc_cfg = cfg.with_seed(derive_seed(cfg.seed, round as u64));
        let w = rich_cosets(&a, &b, delta / 2.0, &rc_cfg)?
            .certificate
            .subspace;
        let next_v = v.preimage(&w)?;
        let after: f64 = dists
            .iter()
            .map(|d| Ok(shannon_entropy(&compress_quotient(d, &next_v)?)))
            .sum::<Result<f64>>()?;
        if after >= before - tol::IDENTITY {
            return Err(Error::NoProgress(format!(
                "refining at prefix {i} left sum H[pi X_i] at {after}"
            )));
        }
        steps.push(ManySumsStep {
            prefix: i,
            doubling: s,
            subspace: next_v.clone(),
            projected_total_before: before,
            projected_total_after: after,
        });
        v = next_v;
    }
    Err(Error::NoProgress(format!(
        "projected sum bound still fails after {cap} refinements"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetAnalysis {
    pub n: usize,
    pub stats: DoublingStats,
    pub epsilon: f64,
    /// Certificate for `E_a log2|A cap (V+a)| >= (eta - eps) log2|A|`.
    pub certificate: SubspaceCertificate,
    pub rich_cosets: SubspaceCertificate,
    pub trace: PipelineTrace,
}

/// For `|A+A| = |A|^(2-eta)`, finds `V` with
/// `E_{a in A} log2 |A cap (V+a)| >= (eta - eps) log2 |A|` from rich cosets
/// of two independent uniform copies of `A`.
pub fn analyze_set(
    n: usize,
    set: &[GroupElement],
    epsilon: f64,
    cfg: &PipelineConfig,
) -> Result<SetAnalysis> {
    epsilon_in_range(epsilon)?;
    let stats = doubling_stats(set)?;
    let u = uniform_on(set, n)?;
    let rc = rich_cosets(&u, &u, epsilon / 2.0, cfg)?;
    let certificate = certify_or_fail(
        Criterion::Theorem11,
        &CertInputs::set(n, set),
        &rc.certificate.subspace,
        Parameters {
            epsilon: Some(epsilon),
            ..Default::default()
        },
    )?;
    Ok(SetAnalysis {
        n,
        stats,
        epsilon,
        certificate,
        rich_cosets: rc.certificate,
        trace: rc.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::reverify;
    use crate::families::{expected_log_intersection, hamming_ball, union_of_cosets};
    use crate::random::rng;

    fn uniform(n: usize, masks: &[u32]) -> Dist {
        Dist::uniform_on_subspace(&Subspace::span_masks(n, masks).unwrap()).unwrap()
    }

    #[test]
    fn rich_cosets_on_a_subspace() {
        let u = uniform(3, &[0b011, 0b100]);
        let rc = rich_cosets(&u, &u, 0.2, &PipelineConfig::default()).unwrap();
        assert!(rc.certificate.all_hold());
        assert!(
            reverify(&rc.certificate, &CertInputs::pair(&u, &u))
                .unwrap()
                .ok
        );
        // s[X;Y] = 2: both fibers must carry at least 2 - 0.2 * 4 bits
        assert!(rc.certificate.measured["H[X]"] - rc.certificate.measured["H[pi X]"] >= 1.2);
        assert!(rich_cosets(&u, &u, 0.0, &PipelineConfig::default()).is_err());
    }

    #[test]
    fn many_sums_bounds() {
        let u = uniform(3, &[0b001, 0b010]);
        let out = many_sums(&[u.clone(), u.clone(), u], 0.3, &PipelineConfig::default()).unwrap();
        assert!(out.certificate.all_hold());
        assert!(out
            .steps
            .iter()
            .all(|s| s.projected_total_after < s.projected_total_before));

        let x = uniform(3, &[1]);
        let y = uniform(3, &[2]);
        let easy = many_sums(&[x.clone(), y], 0.3, &PipelineConfig::default()).unwrap();
        assert_eq!(easy.certificate.dim(), 0);
        assert!(easy.steps.is_empty());
        assert!(many_sums(&[x.clone()], 0.3, &PipelineConfig::default()).is_err());
        assert!(many_sums(&vec![x; 5], 0.3, &PipelineConfig::default()).is_err());
    }

    #[test]
    fn hamming_ball_analysis() {
        let a = hamming_ball(4, 1).unwrap();
        let out = analyze_set(4, &a, 0.2, &PipelineConfig::default()).unwrap();
        assert_eq!((out.stats.size, out.stats.sumset_size), (5, 11));
        assert!(out.certificate.all_hold());
        let v = &out.certificate.subspace;
        let e = expected_log_intersection(&a, v).unwrap();
        assert!(e >= (out.stats.eta - 0.2) * 5f64.log2() - 1e-9);
        assert!(
            reverify(&out.certificate, &CertInputs::set(4, &a))
                .unwrap()
                .ok
        );
    }

    #[test]
    fn union_of_cosets_analysis() {
        let a = union_of_cosets(&mut rng(3), 6, 3, 3).unwrap();
        let out = analyze_set(6, &a, 0.2, &PipelineConfig::default()).unwrap();
        assert!(out.certificate.all_hold());
    }
}
