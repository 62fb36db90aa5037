//! The inductive step and the recursive solver for statement B.
//!
//! `solve_b` keeps a subspace `V` and, while statement B fails at `V`, runs
//! the inductive step on the quotient pair. Each step first fixes the
//! doubling of the sumsets `X+X, Y+Y` and `X+Y, X+Y`, then splits into the
//! three cases (two fiber cases and the endgame) and assembles the local
//! subspaces with [`local_to_global`].

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificate::{
    certify, CertInputs, Criterion, ParamsA, ParamsB, SearchMode, SubspaceCertificate,
};
use crate::dist::{compress_quotient, xor_convolve, Dist, Fibers};
use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::gf2::Subspace;
use crate::oracle::{exhaustive_best_subspace, Objective};
use crate::tol;

use super::endgame::{endgame, EndgameQuantities, FiberOracle, MAX_FIBER_PAIRS};
use super::local_global::{expected_fiber_doubling, local_to_global, LocalToGlobalConfig};
use super::statements::check_statement_b;

/// Constant in the faithful schedule `eps0 = eta0^2 / 2^15`.
pub const FAITHFUL_CONSTANT: f64 = 32768.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Measured constants: `zeta` and `c` are read off the instance.
    #[default]
    Practical,
    /// The worst-case constants of the proof.
    Faithful,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "practical" => Ok(Mode::Practical),
            "faithful" => Ok(Mode::Faithful),
            other => Err(Error::Parameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Practical-mode increment `eta0 - eta`; defaults to `max(eps, 0.1)`.
    pub step: Option<f64>,
    pub depth_cap: usize,
    pub local_to_global: LocalToGlobalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Practical,
            seed: 0,
            step: None,
            depth_cap: 64,
            local_to_global: LocalToGlobalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `(eta0, eps0)` for the inductive step that proves A at `eta`.
    pub fn schedule(&self, eta: f64, epsilon: f64) -> Result<(f64, f64)> {
        let (eta0, eps0) = match self.mode {
            Mode::Practical => {
                let step = self.step.unwrap_or(epsilon.max(0.1));
                if !(step > 0.0) {
                    return Err(Error::Parameter(format!("step = {step} must be positive")));
                }
                let eta0 = (eta + step).min(0.5);
                (eta0, eta0 - eta)
            }
            Mode::Faithful => {
                let c = FAITHFUL_CONSTANT;
                let eta0 = (c - (c * c - 4.0 * c * eta).sqrt()) / 2.0;
                if eta0 > 0.5 {
                    (0.5, 0.5 - eta)
                } else {
                    (eta0, eta0 * eta0 / c)
                }
            }
        };
        Ok((eta0, eps0))
    }
}

/// Per-call seed derived from a parent seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r.gen()
}

/// Supplies subspaces satisfying statement B for the inductive step.
pub trait BSolver: Sync {
    fn solve(&self, p: &Dist, q: &Dist, params: ParamsB, seed: u64) -> Result<Subspace>;
}

/// `B(1/2, 0, 0)`: the trivial subspace.
pub struct BaseSolver;

impl BSolver for BaseSolver {
    fn solve(&self, p: &Dist, _q: &Dist, params: ParamsB, _seed: u64) -> Result<Subspace> {
        if params.eta < 0.5 {
            return Err(Error::Parameter(format!(
                "the base solver only covers eta = 1/2, got {}",
                params.eta
            )));
        }
        Ok(Subspace::zero(p.n()))
    }
}

/// Smallest subspace satisfying B, by exhaustive scan.
pub struct ExhaustiveBSolver;

impl BSolver for ExhaustiveBSolver {
    fn solve(&self, p: &Dist, q: &Dist, params: ParamsB, _seed: u64) -> Result<Subspace> {
        Ok(exhaustive_best_subspace(p, q, Objective::StatementB(params), p.n())?.subspace)
    }
}

type MemoKey = (Vec<u64>, Vec<u64>, u64, u64);

/// State shared by every nested solve of one top-level call.
struct Shared {
    root_seed: u64,
    calls: AtomicUsize,
    memo: Mutex<HashMap<MemoKey, Subspace>>,
}

/// Solves B by recursing into the pipeline one level deeper. Results are
/// memoized on the exact input tables, and each nested solve is seeded from
/// the top-level seed and a digest of its inputs, so the outcome does not
/// depend on the order in which parallel callers reach it.
struct RecursiveBSolver {
    config: PipelineConfig,
    depth: usize,
    shared: Arc<Shared>,
}

fn content_seed(root: u64, key: &MemoKey) -> u64 {
    let mut h = Sha256::new();
    for word in key.0.iter().chain(&key.1).chain([&key.2, &key.3]) {
        h.update(word.to_le_bytes());
    }
    let digest = h.finalize();
    let tag = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    derive_seed(root, tag)
}

impl BSolver for RecursiveBSolver {
    fn solve(&self, p: &Dist, q: &Dist, params: ParamsB, _seed: u64) -> Result<Subspace> {
        self.shared.calls.fetch_add(1, Ordering::Relaxed);
        let key = (
            p.key(),
            q.key(),
            params.eta.to_bits(),
            params.epsilon.to_bits(),
        );
        if let Some(v) = self.shared.memo.lock().expect("memo lock").get(&key) {
            return Ok(v.clone());
        }
        let cfg = self
            .config
            .with_seed(content_seed(self.shared.root_seed, &key));
        let v = solve_level(p, q, params, &cfg, self.depth, &self.shared)?.0;
        self.shared
            .memo
            .lock()
            .expect("memo lock")
            .insert(key, v.clone());
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    #[serde(rename = "SUMSET_FIX_1")]
    SumsetFix1,
    #[serde(rename = "SUMSET_FIX_2")]
    SumsetFix2,
    #[serde(rename = "CASE1")]
    Case1,
    #[serde(rename = "CASE2")]
    Case2,
    #[serde(rename = "ENDGAME")]
    Endgame,
    #[serde(rename = "EARLY_EXIT")]
    EarlyExit,
    #[serde(rename = "BASE")]
    Base,
}

/// One recorded step. `subspace` is the accumulated subspace after the step
/// in the coordinates of the top-level inputs; `quantity` names the entropy
/// that `before` and `after` measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub kind: StepKind,
    pub subspace: Subspace,
    pub dim_added: usize,
    pub quantity: String,
    pub before: f64,
    pub after: f64,
    pub min_decrement: f64,
    pub detail: BTreeMap<String, f64>,
}

impl TraceStep {
    /// `after <= before - min_decrement`, within tolerance.
    pub fn decreases(&self) -> bool {
        self.after <= self.before - self.min_decrement + tol::IDENTITY
    }

    fn lifted(mut self, v: &Subspace) -> Result<Self> {
        self.subspace = v.preimage(&self.subspace)?;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub eta: f64,
    pub epsilon: f64,
    pub mode: Mode,
    pub seed: u64,
    pub steps: Vec<TraceStep>,
    pub b_solver_calls: usize,
    pub final_certificate: Option<SubspaceCertificate>,
}

impl PipelineTrace {
    /// Every step decreases its quantity and the subspaces are nested.
    pub fn is_monotone(&self) -> bool {
        self.steps.iter().all(TraceStep::decreases)
            && self
                .steps
                .windows(2)
                .all(|w| w[0].subspace.is_subspace_of(&w[1].subspace))
    }
}

fn pair_total(p: &Dist, q: &Dist) -> f64 {
    shannon_entropy(p) + shannon_entropy(q)
}

/// `H[pi X] + H[pi Y]` at `v`.
fn projected_total(p: &Dist, q: &Dist, v: &Subspace) -> Result<f64> {
    Ok(shannon_entropy(&compress_quotient(p, v)?) + shannon_entropy(&compress_quotient(q, v)?))
}

fn params_b(eta: f64, epsilon: f64) -> Result<ParamsB> {
    ParamsB::new(eta.min(0.5), epsilon.clamp(0.0, 1.0), None)
}

/// Calls `solver` and insists on a subspace that passes the B check.
fn solve_verified(
    solver: &dyn BSolver,
    p: &Dist,
    q: &Dist,
    params: ParamsB,
    seed: u64,
) -> Result<Subspace> {
    let w = solver.solve(p, q, params, seed)?;
    match check_statement_b(p, q, &w, params)? {
        Ok(_) => Ok(w),
        Err(v) => Err(Error::SearchFailure(format!(
            "B solver returned a subspace failing {:?}",
            v.failing().map(|c| &c.name).collect::<Vec<_>>()
        ))),
    }
}

/// Grows `V` until both
/// `H[X1+X2+Y1+Y2] >= (1-eta0)(H[X1+X2]+H[Y1+Y2]) - 4 eps0 T` and
/// `H[X1+X2+Y1+Y2] >= (1-eta0) 2H[X+Y] - 4 eps0 T` hold for the quotients,
/// where `T = H[X]+H[Y]` of the inputs. Every fix lowers the corresponding
/// sum-pair entropy by at least `2 eps0 T`.
pub fn make_sumsets_not_double(
    p: &Dist,
    q: &Dist,
    eta0: f64,
    eps0: f64,
    solver: &dyn BSolver,
    seed: u64,
) -> Result<(Subspace, Vec<TraceStep>)> {
    let n = p.n();
    let t = pair_total(p, q);
    let params = params_b(eta0, eps0)?;
    let cap = if eps0 > 0.0 {
        (2.0 / eps0).ceil() as usize
    } else {
        0
    };
    let mut v = Subspace::zero(n);
    let mut steps = Vec::new();
    for iteration in 0..=cap {
        let x = compress_quotient(p, &v)?;
        let y = compress_quotient(q, &v)?;
        let xx = xor_convolve(&x, &x)?;
        let yy = xor_convolve(&y, &y)?;
        let xy = xor_convolve(&x, &y)?;
        let h_s = shannon_entropy(&xor_convolve(&xx, &yy)?);
        let h_same = shannon_entropy(&xx) + shannon_entropy(&yy);
        let h_cross = 2.0 * shannon_entropy(&xy);
        let slack = 4.0 * eps0 * t;
        let fix1 = h_s + tol::IDENTITY < (1.0 - eta0) * h_same - slack;
        let fix2 = h_s + tol::IDENTITY < (1.0 - eta0) * h_cross - slack;
        if !fix1 && !fix2 {
            return Ok((v, steps));
        }
        if iteration == cap {
            break;
        }
        let (kind, a, b, before, quantity) = if fix1 {
            (StepKind::SumsetFix1, xx, yy, h_same, "H[X1+X2]+H[Y1+Y2]")
        } else {
            (StepKind::SumsetFix2, xy.clone(), xy, h_cross, "2H[X+Y]")
        };
        let w = solve_verified(solver, &a, &b, params, derive_seed(seed, iteration as u64))?;
        let after = projected_total(&a, &b, &w)?;
        let next = v.preimage(&w)?;
        let mut detail = BTreeMap::new();
        detail.insert("H[S]".into(), h_s);
        detail.insert("T".into(), t);
        let step = TraceStep {
            kind,
            subspace: next.clone(),
            dim_added: next.dim() - v.dim(),
            quantity: quantity.into(),
            before,
            after,
            min_decrement: 2.0 * eps0 * t,
            detail,
        };
        if !step.decreases() {
            return Err(Error::NoProgress(format!(
                "{quantity} fell from {before} to {after}, less than {}",
                step.min_decrement
            )));
        }
        steps.push(step);
        v = next;
    }
    Err(Error::NoProgress(format!(
        "sumset doubling not fixed within {cap} iterations"
    )))
}

/// Result of one inductive step: a subspace certified for statement A at
/// `eta0 - eps0` with gain `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductiveOutcome {
    pub subspace: Subspace,
    pub case: StepKind,
    pub c: f64,
    pub zeta: Option<f64>,
    pub steps: Vec<TraceStep>,
    pub certificate: SubspaceCertificate,
}

/// Builds the per-fiber table for a fiber case by solving B on every
/// pair of fibers.
fn fiber_case_table(
    fx: &Fibers,
    fy: &Fibers,
    params: ParamsB,
    solver: &dyn BSolver,
    seed: u64,
) -> Result<Vec<Vec<Subspace>>> {
    let pairs = fx.len() * fy.len();
    if pairs > MAX_FIBER_PAIRS {
        return Err(Error::Capacity {
            what: "fiber pairs",
            requested: pairs,
            limit: MAX_FIBER_PAIRS,
        });
    }
    (0..fx.len())
        .into_par_iter()
        .map(|i| {
            (0..fy.len())
                .map(|j| {
                    let tag = ((i as u64) << 32) | j as u64;
                    solve_verified(
                        solver,
                        &fx.entries[i].dist,
                        &fy.entries[j].dist,
                        params,
                        derive_seed(seed, tag),
                    )
                })
                .collect()
        })
        .collect()
}

/// Given `s[X;Y] >= (eta0 - eps0)(H[X]+H[Y])` and a solver for
/// `B(eta0, eps0)`, finds `V` with
/// `H[pi X] + H[pi Y] <= (1-c)(H[X]+H[Y])`.
pub fn inductive_step(
    p: &Dist,
    q: &Dist,
    eta0: f64,
    eps0: f64,
    solver: &dyn BSolver,
    cfg: &PipelineConfig,
) -> Result<InductiveOutcome> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: q.n(),
        });
    }
    if !(eta0 > 0.0 && eta0 <= 0.5 && eps0 > 0.0 && eps0 <= eta0) {
        return Err(Error::Parameter(format!(
            "need 0 < eps0 <= eta0 <= 1/2, got eta0 = {eta0}, eps0 = {eps0}"
        )));
    }
    if cfg.mode == Mode::Faithful && eps0 > eta0 * eta0 / FAITHFUL_CONSTANT + 1e-15 {
        return Err(Error::Parameter(format!(
            "faithful mode needs eps0 <= eta0^2/2^15, got {eps0}"
        )));
    }
    let t = pair_total(p, q);
    let s = t - shannon_entropy(&xor_convolve(p, q)?);
    let eta = eta0 - eps0;
    if s + tol::IDENTITY < eta * t {
        return Err(Error::Hypothesis {
            name: "s[X;Y] >= (eta0-eps0)(H[X]+H[Y])".into(),
            gap: eta * t - s,
        });
    }
    if t <= tol::IDENTITY {
        return Err(Error::NoProgress("both variables are constant".into()));
    }

    let (v0, mut steps) =
        make_sumsets_not_double(p, q, eta0, eps0, solver, derive_seed(cfg.seed, 1))?;
    let x = compress_quotient(p, &v0)?;
    let y = compress_quotient(q, &v0)?;
    let t_x = pair_total(&x, &y);
    let drop0 = t - t_x;

    let certify_a = |v: &Subspace, c: f64| -> Result<SubspaceCertificate> {
        let params = ParamsA::new(eta, None, c.min(1.0))?;
        certify(
            Criterion::StatementA,
            &CertInputs::pair(p, q),
            v,
            params.into(),
            SearchMode::Pipeline,
        )?
        .map_err(|v| {
            Error::SearchFailure(format!(
                "inductive step result fails statement A: {:?}",
                v.failing().map(|c| &c.name).collect::<Vec<_>>()
            ))
        })
    };

    let early = match cfg.mode {
        Mode::Practical => drop0 > tol::IDENTITY,
        Mode::Faithful => drop0 >= eps0 * t - tol::IDENTITY && drop0 > 0.0,
    };
    if early || t_x <= tol::IDENTITY {
        let c = match cfg.mode {
            Mode::Practical => drop0 / t,
            Mode::Faithful => eps0,
        };
        if !(c > 0.0) {
            return Err(Error::NoProgress("sumset fixes removed no entropy".into()));
        }
        let certificate = certify_a(&v0, c)?;
        let mut detail = BTreeMap::new();
        detail.insert("c".into(), c);
        steps.push(TraceStep {
            kind: StepKind::EarlyExit,
            subspace: v0.clone(),
            dim_added: 0,
            quantity: "H[pi X]+H[pi Y]".into(),
            before: t,
            after: t_x,
            min_decrement: c.min(1.0) * t,
            detail,
        });
        return Ok(InductiveOutcome {
            subspace: v0,
            case: StepKind::EarlyExit,
            c: c.min(1.0),
            zeta: None,
            steps,
            certificate,
        });
    }

    let quantities = EndgameQuantities::new(&x, &y)?;
    let params = params_b(eta0, eps0)?;
    let case1 = quantities.s_fibers_same
        >= eta0 * quantities.h_fibers_same + 8.0 * eps0 * t_x - tol::IDENTITY;
    let case2 = quantities.s_fibers_cross
        >= eta0 * quantities.h_fibers_cross + 8.0 * eps0 * t_x - tol::IDENTITY;
    let case_seed = derive_seed(cfg.seed, 2);
    let mut detail = BTreeMap::new();
    let (case, fx, fy, table) = if case1 || case2 {
        let (case, fx, fy) = if case1 {
            (
                StepKind::Case1,
                Fibers::of_sum(&x, &x)?,
                Fibers::of_sum(&y, &y)?,
            )
        } else {
            (
                StepKind::Case2,
                Fibers::of_sum(&x, &y)?,
                Fibers::of_sum(&y, &x)?,
            )
        };
        let table = fiber_case_table(&fx, &fy, params, solver, case_seed)?;
        (case, fx, fy, table)
    } else {
        let s_x = quantities.s_xy;
        let eta_end = match cfg.mode {
            Mode::Practical => (eta0 - 2.0 * eps0).max(eta0 / 2.0).min(s_x / t_x),
            Mode::Faithful => (eta0 - 2.0 * eps0).min(s_x / t_x),
        };
        if !(eta_end > 0.0) {
            return Err(Error::NoProgress(format!(
                "endgame needs a positive doubling level, got {eta_end}"
            )));
        }
        let kappa = quantities.kappa(eta_end);
        let oracle = match cfg.mode {
            Mode::Practical => FiberOracle::Balanced,
            Mode::Faithful => FiberOracle::Minimal,
        };
        let transcript = endgame(&x, &y, eta_end, kappa, oracle)?;
        if let Some(bad) = transcript.checks.iter().find(|c| !c.holds) {
            return Err(Error::SearchFailure(format!(
                "endgame check failed: {} (margin {:.3e})",
                bad.name,
                bad.margin()
            )));
        }
        detail.insert("eta_end".into(), eta_end);
        detail.insert("kappa".into(), kappa);
        detail.insert("E[H[pi X_u]+H[pi Y_w]]".into(), transcript.expectation);
        let fx = Fibers::of_sum(&x, &y)?;
        let fy = Fibers::of_sum(&y, &x)?;
        let table = transcript.subspace_table(&fx, &fy)?;
        (StepKind::Endgame, fx, fy, table)
    };

    let zeta = match cfg.mode {
        Mode::Practical => (expected_fiber_doubling(&fx, &fy, &table)? / t_x).min(1.0),
        Mode::Faithful if case == StepKind::Endgame => eta0 * eta0 / 8.0,
        Mode::Faithful => 7.0 * eps0,
    };
    if !(zeta > 1e-12) {
        return Err(Error::NoProgress(format!(
            "local subspaces leave no fiber doubling (zeta = {zeta:.3e})"
        )));
    }
    let l2g_cfg = LocalToGlobalConfig {
        seed: derive_seed(cfg.seed, 3),
        ..cfg.local_to_global
    };
    let report = local_to_global(&fx, &fy, &table, zeta, &l2g_cfg)?;
    let v = v0.preimage(&report.subspace)?;
    let c = match cfg.mode {
        Mode::Practical => (drop0 + zeta / 4.0 * t_x) / t,
        Mode::Faithful if case == StepKind::Endgame => eta0 * eta0 / 32.0,
        Mode::Faithful => eps0,
    };
    let certificate = certify_a(&v, c)?;
    detail.insert("zeta".into(), zeta);
    detail.insert("c".into(), c);
    detail.insert("k".into(), report.k as f64);
    steps.push(TraceStep {
        kind: case,
        subspace: v.clone(),
        dim_added: v.dim() - v0.dim(),
        quantity: "H[pi X]+H[pi Y]".into(),
        before: t,
        after: projected_total(p, q, &v)?,
        min_decrement: c.min(1.0) * t,
        detail,
    });
    Ok(InductiveOutcome {
        subspace: v,
        case,
        c: c.min(1.0),
        zeta: Some(zeta),
        steps,
        certificate,
    })
}

/// Output of [`solve_b`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BSolution {
    pub certificate: SubspaceCertificate,
    pub trace: PipelineTrace,
}

/// Finds `V` with
/// `H[pi X + pi Y] >= (1-eta)(H[pi X]+H[pi Y]) - eps(H[X]+H[Y])`
/// by recursion on `eta` down from the base case `eta = 1/2`.
pub fn solve_b(p: &Dist, q: &Dist, params: ParamsB, cfg: &PipelineConfig) -> Result<BSolution> {
    params.validate()?;
    let shared = Arc::new(Shared {
        root_seed: cfg.seed,
        calls: AtomicUsize::new(0),
        memo: Mutex::new(HashMap::new()),
    });
    let (v, steps) = solve_level(p, q, params, cfg, 0, &shared)?;
    let certificate = certify(
        Criterion::StatementB,
        &CertInputs::pair(p, q),
        &v,
        params.into(),
        SearchMode::Pipeline,
    )?
    .map_err(|v| {
        Error::SearchFailure(format!(
            "pipeline result fails statement B: {:?}",
            v.failing().map(|c| &c.name).collect::<Vec<_>>()
        ))
    })?;
    Ok(BSolution {
        trace: PipelineTrace {
            eta: params.eta,
            epsilon: params.epsilon,
            mode: cfg.mode,
            seed: cfg.seed,
            steps,
            b_solver_calls: shared.calls.load(Ordering::Relaxed),
            final_certificate: Some(certificate.clone()),
        },
        certificate,
    })
}

fn solve_level(
    p: &Dist,
    q: &Dist,
    params: ParamsB,
    cfg: &PipelineConfig,
    depth: usize,
    shared: &Arc<Shared>,
) -> Result<(Subspace, Vec<TraceStep>)> {
    if depth > cfg.depth_cap {
        return Err(Error::RecursionDepth { cap: cfg.depth_cap });
    }
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: q.n(),
        });
    }
    let n = p.n();
    let mut v = Subspace::zero(n);
    if params.eta >= 0.5 {
        let t = pair_total(p, q);
        let step = TraceStep {
            kind: StepKind::Base,
            subspace: v.clone(),
            dim_added: 0,
            quantity: "H[pi X]+H[pi Y]".into(),
            before: t,
            after: t,
            min_decrement: 0.0,
            detail: BTreeMap::new(),
        };
        return Ok((v, vec![step]));
    }
    let (eta0, eps0) = cfg.schedule(params.eta, params.epsilon)?;
    let solver = RecursiveBSolver {
        config: *cfg,
        depth: depth + 1,
        shared: Arc::clone(shared),
    };
    let mut steps = Vec::new();
    for round in 0..=n + 1 {
        if check_statement_b(p, q, &v, params)?.is_ok() {
            return Ok((v, steps));
        }
        if round == n + 1 {
            break;
        }
        let x = compress_quotient(p, &v)?;
        let y = compress_quotient(q, &v)?;
        let before = pair_total(&x, &y);
        let round_cfg = cfg.with_seed(derive_seed(cfg.seed, 100 + round as u64));
        let outcome = inductive_step(&x, &y, eta0, eps0, &solver, &round_cfg)?;
        let next = v.preimage(&outcome.subspace)?;
        let after = projected_total(p, q, &next)?;
        if after >= before - 1e-12 {
            return Err(Error::NoProgress(format!(
                "inductive step left H[pi X]+H[pi Y] at {after}"
            )));
        }
        for step in outcome.steps {
            steps.push(step.lifted(&v)?);
        }
        v = next;
    }
    Err(Error::NoProgress(format!(
        "statement B still fails after {} rounds",
        n + 1
    )))
}
