//! Subspace certificates and the statement contracts they attest.
//!
//! A certificate records a subspace, the criterion it was checked against,
//! every measured quantity and both sides of every inequality. The same
//! [`evaluate`] routine produces a certificate and re-verifies one, so a
//! certificate can only exist if its checks passed on its inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::{compress_quotient, uniform_on, xor_convolve, Dist};
use crate::entropy::{doubling_mass, fiber_doubling, ruzsa_distance, shannon_entropy};
use crate::error::{Error, Result};
use crate::families::{doubling_stats, expected_log_intersection};
use crate::gf2::{GroupElement, Subspace};
use crate::tol::{self, Tolerances};

// ============================================================================
// Parameters
// ============================================================================

/// Parameters of statement B: after projecting by `V`,
/// `H[pi X + pi Y] >= (1 - eta)(H[pi X] + H[pi Y]) - epsilon (H[X] + H[Y])`,
/// with `H[U_V] <= L (H[X] + H[Y])` when `l` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsB {
    pub eta: f64,
    pub epsilon: f64,
    pub l: Option<f64>,
}

/// Parameters of statement A: if `H[X + Y] <= (1 - eta)(H[X] + H[Y])` then
/// `H[pi X] + H[pi Y] <= (1 - c)(H[X] + H[Y])`, with the same optional size
/// bound as B.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsA {
    pub eta: f64,
    pub l: Option<f64>,
    pub c: f64,
}

fn check_l(l: Option<f64>) -> Result<()> {
    if let Some(l) = l {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::Parameter(format!("L = {l} must be finite and >= 0")));
        }
    }
    Ok(())
}

impl ParamsB {
    pub fn new(eta: f64, epsilon: f64, l: Option<f64>) -> Result<Self> {
        let p = Self { eta, epsilon, l };
        p.validate()?;
        Ok(p)
    }

    /// `eta` in (0, 1/2]; `epsilon` in [0, 1] (zero only occurs in the base
    /// case `B(1/2, 0, 0)`).
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::Parameter(format!(
                "eta = {} not in (0, 1/2]",
                self.eta
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Parameter(format!(
                "epsilon = {} not in [0, 1]",
                self.epsilon
            )));
        }
        check_l(self.l)
    }
}

impl ParamsA {
    pub fn new(eta: f64, l: Option<f64>, c: f64) -> Result<Self> {
        let p = Self { eta, l, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::Parameter(format!(
                "eta = {} not in (0, 1/2]",
                self.eta
            )));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::Parameter(format!("c = {} not in (0, 1]", self.c)));
        }
        check_l(self.l)
    }
}

// ============================================================================
// Certificate model
// ============================================================================

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Criterion {
    /// `H[U_V] <= 7(H[X]+H[Y])` and `max H[pi X], H[pi Y] <= 12 d[X;Y]`.
    PfrCor22,
    StatementB,
    StatementA,
    /// Set-level large-intersection bound plus the exact coset identity.
    #[serde(rename = "THEOREM_11")]
    Theorem11,
    /// Both conditional entropies at least `s[X;Y] - eps (H[X]+H[Y])`.
    RichCosets,
    /// k-fold sum loses at most `eps sum H[X_i]` after projection.
    ManySums,
    /// Records `s[pi X; pi Y]` for a minimizer over the subspace lattice.
    MinQuotientDoubling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    Greedy,
    Prescribed,
    Pipeline,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l: Option<f64>,
}

impl From<ParamsB> for Parameters {
    fn from(p: ParamsB) -> Self {
        Self {
            eta: Some(p.eta),
            epsilon: Some(p.epsilon),
            c: None,
            l: p.l,
        }
    }
}

impl From<ParamsA> for Parameters {
    fn from(p: ParamsA) -> Self {
        Self {
            eta: Some(p.eta),
            epsilon: None,
            c: Some(p.c),
            l: p.l,
        }
    }
}

impl Parameters {
    fn require(&self, field: Option<f64>, name: &str) -> Result<f64> {
        field.ok_or_else(|| Error::Parameter(format!("parameter {name} is required")))
    }

    pub fn params_b(&self) -> Result<ParamsB> {
        ParamsB::new(
            self.require(self.eta, "eta")?,
            self.require(self.epsilon, "epsilon")?,
            self.l,
        )
    }

    pub fn params_a(&self) -> Result<ParamsA> {
        ParamsA::new(
            self.require(self.eta, "eta")?,
            self.l,
            self.require(self.c, "c")?,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

/// One inequality (or identity) with both sides evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        lhs: f64,
        relation: Relation,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let mut c = Self {
            name: name.into(),
            lhs,
            relation,
            rhs,
            tolerance,
            holds: false,
        };
        c.holds = c.evaluate();
        c
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, Relation::Le, rhs, tol::IDENTITY)
    }

    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, Relation::Ge, rhs, tol::IDENTITY)
    }

    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, Relation::Eq, rhs, tol::IDENTITY)
    }

    /// Re-derives `holds` from the recorded sides.
    pub fn evaluate(&self) -> bool {
        match self.relation {
            Relation::Le => self.lhs <= self.rhs + self.tolerance,
            Relation::Ge => self.lhs >= self.rhs - self.tolerance,
            Relation::Eq => (self.lhs - self.rhs).abs() <= self.tolerance,
        }
    }

    /// Signed slack; negative means violated.
    pub fn margin(&self) -> f64 {
        match self.relation {
            Relation::Le => self.rhs - self.lhs,
            Relation::Ge => self.lhs - self.rhs,
            Relation::Eq => -(self.lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCertificate {
    pub subspace: Subspace,
    pub criterion: Criterion,
    pub parameters: Parameters,
    pub search_mode: SearchMode,
    pub measured: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
}

impl SubspaceCertificate {
    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds && c.evaluate())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What a certificate is about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertInputs {
    Pair { x: Dist, y: Dist },
    Many { dists: Vec<Dist> },
    Set { n: usize, elements: Vec<String> },
}

impl CertInputs {
    pub fn pair(x: &Dist, y: &Dist) -> Self {
        CertInputs::Pair {
            x: x.clone(),
            y: y.clone(),
        }
    }

    pub fn set(n: usize, elements: &[GroupElement]) -> Self {
        CertInputs::Set {
            n,
            elements: elements.iter().map(|e| e.to_hex()).collect(),
        }
    }

    pub fn set_elements(&self) -> Result<(usize, Vec<GroupElement>)> {
        match self {
            CertInputs::Set { n, elements } => Ok((
                *n,
                elements
                    .iter()
                    .map(|s| GroupElement::from_hex(*n, s))
                    .collect::<Result<Vec<_>>>()?,
            )),
            _ => Err(Error::Validation("expected set inputs".into())),
        }
    }

    fn pair_refs(&self) -> Result<(&Dist, &Dist)> {
        match self {
            CertInputs::Pair { x, y } => Ok((x, y)),
            _ => Err(Error::Validation("expected a pair of distributions".into())),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            CertInputs::Pair { x, .. } => x.n(),
            CertInputs::Many { dists } => dists.first().map_or(0, Dist::n),
            CertInputs::Set { n, .. } => *n,
        }
    }
}

// ============================================================================
// Evaluation
// ============================================================================

/// Measured quantities and checks for `criterion` at subspace `v`.
pub fn evaluate(
    criterion: Criterion,
    inputs: &CertInputs,
    v: &Subspace,
    params: &Parameters,
) -> Result<(BTreeMap<String, f64>, Vec<Check>)> {
    if v.n() != inputs.n() {
        return Err(Error::DimensionMismatch {
            expected: inputs.n(),
            found: v.n(),
        });
    }
    let mut m = BTreeMap::new();
    let mut checks = Vec::new();
    let dim_v = v.dim() as f64;
    m.insert("H[U_V]".to_string(), dim_v);

    match criterion {
        Criterion::PfrCor22 => {
            let (x, y) = inputs.pair_refs()?;
            let pe = PairEntropies::new(x, y, v)?;
            let d = ruzsa_distance(x, y)?;
            pe.record(&mut m);
            m.insert("d[X;Y]".into(), d);
            checks.push(Check::le("H[U_V] <= 7(H[X]+H[Y])", dim_v, 7.0 * pe.total()));
            checks.push(Check::le(
                "max(H[pi X],H[pi Y]) <= 12 d[X;Y]",
                pe.hpx.max(pe.hpy),
                12.0 * d,
            ));
        }
        Criterion::StatementB => {
            let p = params.params_b()?;
            let (x, y) = inputs.pair_refs()?;
            let pe = PairEntropies::new(x, y, v)?;
            pe.record(&mut m);
            checks.push(Check::ge(
                "H[pi X + pi Y] >= (1-eta)(H[pi X]+H[pi Y]) - eps(H[X]+H[Y])",
                pe.hsum_proj,
                (1.0 - p.eta) * (pe.hpx + pe.hpy) - p.epsilon * pe.total(),
            ));
            if let Some(l) = p.l {
                checks.push(Check::le("H[U_V] <= L(H[X]+H[Y])", dim_v, l * pe.total()));
            }
        }
        Criterion::StatementA => {
            let p = params.params_a()?;
            let (x, y) = inputs.pair_refs()?;
            let pe = PairEntropies::new(x, y, v)?;
            pe.record(&mut m);
            checks.push(Check::le(
                "hypothesis: H[X+Y] <= (1-eta)(H[X]+H[Y])",
                pe.hsum,
                (1.0 - p.eta) * pe.total(),
            ));
            checks.push(Check::le(
                "H[pi X]+H[pi Y] <= (1-c)(H[X]+H[Y])",
                pe.hpx + pe.hpy,
                (1.0 - p.c) * pe.total(),
            ));
            if let Some(l) = p.l {
                checks.push(Check::le("H[U_V] <= L(H[X]+H[Y])", dim_v, l * pe.total()));
            }
        }
        Criterion::RichCosets => {
            let eps = params.require(params.epsilon, "epsilon")?;
            let (x, y) = inputs.pair_refs()?;
            let pe = PairEntropies::new(x, y, v)?;
            pe.record(&mut m);
            let s = pe.hx + pe.hy - pe.hsum;
            let s_proj = pe.hpx + pe.hpy - pe.hsum_proj;
            let s_fiber = fiber_doubling(x, y, v)?;
            m.insert("s[X;Y]".into(), s);
            m.insert("s[pi X;pi Y]".into(), s_proj);
            m.insert("s[X|pi X;Y|pi Y]".into(), s_fiber);
            let floor = s - eps * pe.total();
            checks.push(Check::le(
                "s[pi X;pi Y] <= eps(H[X]+H[Y])",
                s_proj,
                eps * pe.total(),
            ));
            checks.push(Check::ge(
                "s[X|pi X;Y|pi Y] >= s[X;Y] - s[pi X;pi Y]",
                s_fiber,
                s - s_proj,
            ));
            checks.push(Check::ge(
                "H[X|pi X] >= s - eps(H[X]+H[Y])",
                pe.hx - pe.hpx,
                floor,
            ));
            checks.push(Check::ge(
                "H[Y|pi Y] >= s - eps(H[X]+H[Y])",
                pe.hy - pe.hpy,
                floor,
            ));
            if let Some(l) = params.l {
                checks.push(Check::le("H[U_V] <= L(H[X]+H[Y])", dim_v, l * pe.total()));
            }
        }
        Criterion::ManySums => {
            let eps = params.require(params.epsilon, "epsilon")?;
            let dists = match inputs {
                CertInputs::Many { dists } => dists,
                _ => return Err(Error::Validation("expected several distributions".into())),
            };
            let (total, projected_sum, sum_of_projected) = many_sum_entropies(dists, v)?;
            m.insert("sum H[X_i]".into(), total);
            m.insert("H[sum pi X_i]".into(), sum_of_projected);
            m.insert("sum H[pi X_i]".into(), projected_sum);
            checks.push(Check::ge(
                "H[sum pi X_i] >= sum H[pi X_i] - eps sum H[X_i]",
                sum_of_projected,
                projected_sum - eps * total,
            ));
        }
        Criterion::Theorem11 => {
            let eps = params.require(params.epsilon, "epsilon")?;
            let (n, set) = inputs.set_elements()?;
            let stats = doubling_stats(&set)?;
            let eta = stats.eta;
            let log_a = (stats.size as f64).log2();
            let u = uniform_on(&set, n)?;
            let h_fiber = shannon_entropy(&u) - shannon_entropy(&compress_quotient(&u, v)?);
            let e_log = expected_log_intersection(&set, v)?;
            m.insert("|A|".into(), stats.size as f64);
            m.insert("|A+A|".into(), stats.sumset_size as f64);
            m.insert("eta".into(), eta);
            m.insert("log2|A|".into(), log_a);
            m.insert("H[U_A|pi U_A]".into(), h_fiber);
            m.insert("E_a log2|A cap (V+a)|".into(), e_log);
            checks.push(Check::ge(
                "E_a log2|A cap (V+a)| >= (eta-eps) log2|A|",
                e_log,
                (eta - eps) * log_a,
            ));
            checks.push(Check::eq(
                "H[U_A|pi_V(U_A)] == E_a log2|A cap (V+a)|",
                h_fiber,
                e_log,
            ));
        }
        Criterion::MinQuotientDoubling => {
            let (x, y) = inputs.pair_refs()?;
            let pe = PairEntropies::new(x, y, v)?;
            pe.record(&mut m);
            let s_proj = pe.hpx + pe.hpy - pe.hsum_proj;
            m.insert("s[pi X;pi Y]".into(), s_proj);
            checks.push(Check::ge("s[pi X;pi Y] >= 0", s_proj, 0.0));
            if let Some(l) = params.l {
                checks.push(Check::le("H[U_V] <= L(H[X]+H[Y])", dim_v, l * pe.total()));
            }
        }
    }
    Ok((m, checks))
}

/// `(sum H[X_i], sum H[pi X_i], H[sum pi X_i])`.
pub(crate) fn many_sum_entropies(dists: &[Dist], v: &Subspace) -> Result<(f64, f64, f64)> {
    let first = dists.first().ok_or(Error::EmptySupport)?;
    let total: f64 = dists.iter().map(shannon_entropy).sum();
    let projected: Vec<Dist> = dists
        .iter()
        .map(|d| compress_quotient(d, v))
        .collect::<Result<_>>()?;
    let projected_sum: f64 = projected.iter().map(shannon_entropy).sum();
    let mut acc = compress_quotient(first, v)?;
    for d in &projected[1..] {
        acc = xor_convolve(&acc, d)?;
    }
    Ok((total, projected_sum, shannon_entropy(&acc)))
}

/// Entropies of a pair and of its projections.
pub(crate) struct PairEntropies {
    pub hx: f64,
    pub hy: f64,
    pub hsum: f64,
    pub hpx: f64,
    pub hpy: f64,
    pub hsum_proj: f64,
}

impl PairEntropies {
    pub fn new(x: &Dist, y: &Dist, v: &Subspace) -> Result<Self> {
        let px = compress_quotient(x, v)?;
        let py = compress_quotient(y, v)?;
        Ok(Self {
            hx: shannon_entropy(x),
            hy: shannon_entropy(y),
            hsum: shannon_entropy(&xor_convolve(x, y)?),
            hpx: shannon_entropy(&px),
            hpy: shannon_entropy(&py),
            hsum_proj: shannon_entropy(&xor_convolve(&px, &py)?),
        })
    }

    pub fn total(&self) -> f64 {
        self.hx + self.hy
    }

    fn record(&self, m: &mut BTreeMap<String, f64>) {
        m.insert("H[X]".into(), self.hx);
        m.insert("H[Y]".into(), self.hy);
        m.insert("H[X+Y]".into(), self.hsum);
        m.insert("H[pi X]".into(), self.hpx);
        m.insert("H[pi Y]".into(), self.hpy);
        m.insert("H[pi X + pi Y]".into(), self.hsum_proj);
    }
}

/// Evaluates `criterion` and returns a certificate if every check holds.
pub fn certify(
    criterion: Criterion,
    inputs: &CertInputs,
    v: &Subspace,
    params: Parameters,
    search_mode: SearchMode,
) -> Result<std::result::Result<SubspaceCertificate, Violation>> {
    let (measured, checks) = evaluate(criterion, inputs, v, &params)?;
    if checks.iter().all(|c| c.holds) {
        Ok(Ok(SubspaceCertificate {
            subspace: v.clone(),
            criterion,
            parameters: params,
            search_mode,
            measured,
            checks,
            tolerances: Tolerances::default(),
        }))
    } else {
        Ok(Err(Violation {
            subspace: v.clone(),
            criterion,
            parameters: params,
            measured,
            checks,
        }))
    }
}

/// Report of a failed statement check; lists every check with its margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub subspace: Subspace,
    pub criterion: Criterion,
    pub parameters: Parameters,
    pub measured: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl Violation {
    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.holds)
    }

    /// True when only a hypothesis (not a conclusion) failed.
    pub fn hypothesis_not_met(&self) -> bool {
        self.failing().all(|c| c.name.starts_with("hypothesis")) && self.failing().next().is_some()
    }
}

/// Outcome of re-verifying a certificate from its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reverification {
    pub ok: bool,
    pub problems: Vec<String>,
}

/// Recomputes every measured value and check of `cert` from `inputs` and
/// compares with the recorded numbers.
pub fn reverify(cert: &SubspaceCertificate, inputs: &CertInputs) -> Result<Reverification> {
    let tolerance = cert.tolerances.identity.max(tol::IDENTITY);
    let (measured, checks) = evaluate(cert.criterion, inputs, &cert.subspace, &cert.parameters)?;
    let mut problems = Vec::new();
    for (k, v) in &measured {
        match cert.measured.get(k) {
            Some(r) if (r - v).abs() <= tolerance => {}
            Some(r) => problems.push(format!("{k}: recorded {r}, recomputed {v}")),
            None => problems.push(format!("{k}: missing from certificate")),
        }
    }
    for c in &checks {
        match cert.check(&c.name) {
            Some(r) => {
                if (r.lhs - c.lhs).abs() > tolerance || (r.rhs - c.rhs).abs() > tolerance {
                    problems.push(format!(
                        "{}: recorded ({}, {}), recomputed ({}, {})",
                        c.name, r.lhs, r.rhs, c.lhs, c.rhs
                    ));
                }
                if !r.evaluate() {
                    problems.push(format!("{}: recorded sides violate the relation", c.name));
                }
            }
            None => problems.push(format!("{}: missing from certificate", c.name)),
        }
        if !c.holds {
            problems.push(format!(
                "{}: fails on recomputation (margin {})",
                c.name,
                c.margin()
            ));
        }
    }
    if checks.len() != cert.checks.len() {
        problems.push(format!(
            "certificate has {} checks, recomputation has {}",
            cert.checks.len(),
            checks.len()
        ));
    }
    Ok(Reverification {
        ok: problems.is_empty(),
        problems,
    })
}

/// `s[X;Y]` convenience for callers that only hold a pair.
pub fn pair_doubling(x: &Dist, y: &Dist) -> Result<f64> {
    doubling_mass(x, y)
}
