//! Statement checks and the parameter arithmetic linking A and B.

use crate::certificate::{
    certify, CertInputs, Criterion, ParamsA, ParamsB, SearchMode, SubspaceCertificate, Violation,
};
use crate::dist::{xor_convolve, Dist};
use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::gf2::Subspace;
use crate::tol;

/// Either a certificate for the statement or the report of what failed.
pub type Verdict = std::result::Result<SubspaceCertificate, Violation>;

/// Checks statement B (and the size bound when `L` is set) at `v`.
pub fn check_statement_b(p: &Dist, q: &Dist, v: &Subspace, params: ParamsB) -> Result<Verdict> {
    params.validate()?;
    certify(
        Criterion::StatementB,
        &CertInputs::pair(p, q),
        v,
        params.into(),
        SearchMode::Prescribed,
    )
}

/// Checks the doubling hypothesis and the conclusion of statement A at `v`.
/// A failed hypothesis is reported through [`Violation::hypothesis_not_met`].
pub fn check_statement_a(p: &Dist, q: &Dist, v: &Subspace, params: ParamsA) -> Result<Verdict> {
    params.validate()?;
    certify(
        Criterion::StatementA,
        &CertInputs::pair(p, q),
        v,
        params.into(),
        SearchMode::Prescribed,
    )
}

/// `B(eta, eps, L)` gives `A(eta', L, eta' - eta - eps)` whenever
/// `eta' > eta + eps`.
pub fn reduce_b_to_a(b: ParamsB, eta_prime: f64) -> Result<ParamsA> {
    b.validate()?;
    if eta_prime <= b.eta + b.epsilon {
        return Err(Error::Parameter(format!(
            "eta' = {eta_prime} must exceed eta + eps = {}",
            b.eta + b.epsilon
        )));
    }
    ParamsA::new(eta_prime, b.l, eta_prime - b.eta - b.epsilon)
}

/// `ceil(log2(1/eps) / c)`: iterations of A needed to shrink the entropy
/// below an `eps` fraction.
pub fn reduction_multiplier(c: f64, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon = {epsilon} not in (0, 1]"
        )));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Parameter(format!("c = {c} not in (0, 1]")));
    }
    Ok(((1.0 / epsilon).log2() / c).ceil() as u64)
}

/// `A(eta, L, c)` gives `B(eta, eps, ceil(log2(1/eps)/c) L)`.
pub fn reduce_a_to_b(a: ParamsA, epsilon: f64) -> Result<ParamsB> {
    a.validate()?;
    let m = reduction_multiplier(a.c, epsilon)?;
    ParamsB::new(a.eta, epsilon, a.l.map(|l| m as f64 * l))
}

/// `H[X+Y] >= max(H[X], H[Y])`, the inequality behind `B(1/2, 0, 0)`.
/// Returns the slack.
pub fn base_case_slack(p: &Dist, q: &Dist) -> Result<f64> {
    let h = shannon_entropy(&xor_convolve(p, q)?);
    Ok(h - shannon_entropy(p).max(shannon_entropy(q)))
}

pub fn base_case_holds(p: &Dist, q: &Dist) -> Result<bool> {
    Ok(base_case_slack(p, q)? >= -tol::IDENTITY)
}
