//! Command-line driver: set and distribution statistics, subspace search
//! with certificate output, the property suite, family generators and the
//! endgame transcript.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use entropic_doubling::bundle::{verify_bundle, CertificateBundle};
use entropic_doubling::certificate::{CertInputs, ParamsB};
use entropic_doubling::dist::{uniform_on, xor_convolve};
use entropic_doubling::entropy::{ruzsa_distance, shannon_entropy};
use entropic_doubling::families::{
    doubling_stats, expected_log_intersection, hamming_ball, random_subset_of_subspace,
    union_of_cosets, DoublingStats, SetFile,
};
use entropic_doubling::pipeline::endgame::EndgameQuantities;
use entropic_doubling::pipeline::{
    analyze_set, endgame, solve_b, FiberOracle, Mode, PipelineConfig,
};
use entropic_doubling::random::{rng, PRNG_ALGORITHM};
use entropic_doubling::suite::run_suite;
use entropic_doubling::{Dist, GroupElement};

#[derive(Parser)]
#[command(
    name = "entropic-doubling",
    version,
    about = "Entropic doubling experiments over F_2^n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy and doubling statistics of a set or distribution.
    Analyze {
        /// Set or distribution file; omit to use --family.
        input: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Search for a subspace and write a certificate bundle.
    FindSubspace {
        /// A set file, or one or two distribution files (X, then Y; Y defaults to X).
        #[arg(num_args = 0..=2)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        /// Target eta for distribution inputs.
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value = "practical")]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the property suite, or re-verify a certificate bundle.
    Verify {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, conflicts_with_all = ["n"])]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Emit a member of an example family as a set file.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the endgame transcript on one or two distribution files.
    Endgame {
        #[arg(num_args = 1..=2, required = true)]
        inputs: Vec<PathBuf>,
        /// Defaults to the measured doubling exponent, capped at 1/2.
        #[arg(long)]
        eta: Option<f64>,
        /// Defaults to the smallest kappa for which the hypotheses hold.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value = "balanced")]
        oracle: OracleArg,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long = "dim-v")]
    dim_v: Option<usize>,
    /// Set size for random-subset, number of cosets for union-of-cosets.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Family {
    HammingBall,
    RandomSubset,
    UnionOfCosets,
    Subspace,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Practical,
    Faithful,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Practical => Mode::Practical,
            ModeArg::Faithful => Mode::Faithful,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum OracleArg {
    Balanced,
    Minimal,
}

/// One row of the experiment table.
#[derive(Serialize)]
struct Row {
    family: String,
    n: usize,
    params: String,
    #[serde(rename = "|A|")]
    size: Option<usize>,
    #[serde(rename = "|A+A|")]
    sumset_size: Option<usize>,
    #[serde(rename = "η")]
    eta: Option<f64>,
    #[serde(rename = "dimV")]
    dim_v: Option<usize>,
    #[serde(rename = "achieved-ε")]
    achieved_epsilon: Option<f64>,
    seed: Option<u64>,
}

struct NamedSet {
    n: usize,
    family: String,
    params: String,
    seed: Option<u64>,
    elements: Vec<GroupElement>,
}

enum Input {
    Set(NamedSet),
    Dists(Vec<Dist>),
}

/// A set file that also records how it was generated.
#[derive(Serialize)]
struct GeneratedSet<'a> {
    #[serde(flatten)]
    set: SetFile,
    family: &'a str,
    params: &'a str,
    seed: u64,
    prng: &'a str,
    stats: DoublingStats,
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::HammingBall => "hamming-ball",
        Family::RandomSubset => "random-subset",
        Family::UnionOfCosets => "union-of-cosets",
        Family::Subspace => "subspace",
    }
}

fn generate(args: &FamilyArgs) -> anyhow::Result<NamedSet> {
    let family = args.family.ok_or_else(|| anyhow!("--family is required"))?;
    let n = args
        .n
        .ok_or_else(|| anyhow!("--n is required with --family"))?;
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| anyhow!("--{flag} is required for {}", family_name(family)))
    };
    let mut r = rng(args.seed);
    let (elements, params, seeded) = match family {
        Family::HammingBall => {
            let radius = need(args.radius, "radius")?;
            (hamming_ball(n, radius)?, format!("r={radius}"), false)
        }
        Family::RandomSubset => {
            let (d, c) = (need(args.dim_v, "dim-v")?, need(args.count, "count")?);
            (
                random_subset_of_subspace(&mut r, n, d, c)?,
                format!("dimV={d};N={c}"),
                true,
            )
        }
        Family::UnionOfCosets => {
            let (d, c) = (need(args.dim_v, "dim-v")?, need(args.count, "count")?);
            (
                union_of_cosets(&mut r, n, d, c)?,
                format!("dimV={d};cosets={c}"),
                true,
            )
        }
        Family::Subspace => {
            let d = need(args.dim_v, "dim-v")?;
            (
                union_of_cosets(&mut r, n, d, 1)?,
                format!("dimV={d}"),
                false,
            )
        }
    };
    Ok(NamedSet {
        n,
        family: family_name(family).into(),
        params,
        seed: seeded.then_some(args.seed),
        elements,
    })
}

fn read_file(path: &Path) -> anyhow::Result<Input> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("elements").is_some() {
        let file: SetFile = serde_json::from_value(value)?;
        Ok(Input::Set(NamedSet {
            n: file.n,
            family: "file".into(),
            params: path.display().to_string(),
            seed: None,
            elements: file.elements()?,
        }))
    } else {
        let dist: Dist = serde_json::from_value(value)
            .with_context(|| format!("{} is neither a set nor a distribution", path.display()))?;
        Ok(Input::Dists(vec![dist]))
    }
}

fn load(paths: &[PathBuf], family: &FamilyArgs) -> anyhow::Result<Input> {
    match (paths, family.family) {
        ([], Some(_)) => Ok(Input::Set(generate(family)?)),
        ([], None) => bail!("give an input file or --family"),
        (_, Some(_)) => bail!("give either input files or --family, not both"),
        ([one], None) => read_file(one),
        (many, None) => {
            let mut dists = Vec::new();
            for p in many {
                match read_file(p)? {
                    Input::Dists(d) => dists.extend(d),
                    Input::Set(_) => bail!("{} is a set; pairs must be distributions", p.display()),
                }
            }
            Ok(Input::Dists(dists))
        }
    }
}

fn pair(dists: &[Dist]) -> (&Dist, &Dist) {
    (&dists[0], dists.get(1).unwrap_or(&dists[0]))
}

fn emit(output: &OutputArgs, text: &str) -> anyhow::Result<()> {
    match &output.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(output: &OutputArgs, value: &T) -> anyhow::Result<()> {
    emit(output, &serde_json::to_string_pretty(value)?)
}

fn emit_rows(output: &OutputArgs, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    emit(output, &String::from_utf8(w.into_inner()?)?)
}

fn json_only(output: &OutputArgs, command: &str) -> anyhow::Result<()> {
    if output.format == Format::Csv {
        bail!("{command} only writes JSON");
    }
    Ok(())
}

fn set_row(set: &NamedSet, stats: &DoublingStats) -> Row {
    Row {
        family: set.family.clone(),
        n: set.n,
        params: set.params.clone(),
        size: Some(stats.size),
        sumset_size: Some(stats.sumset_size),
        eta: Some(stats.eta),
        dim_v: None,
        achieved_epsilon: None,
        seed: set.seed,
    }
}

fn analyze(
    input: Option<PathBuf>,
    family: &FamilyArgs,
    output: &OutputArgs,
) -> anyhow::Result<bool> {
    match load(input.as_slice(), family)? {
        Input::Set(set) => {
            let stats = doubling_stats(&set.elements)?;
            if output.format == Format::Csv {
                emit_rows(output, &[set_row(&set, &stats)])?;
            } else {
                let u = uniform_on(&set.elements, set.n)?;
                emit_json(
                    output,
                    &serde_json::json!({
                        "kind": "set",
                        "family": set.family,
                        "params": set.params,
                        "n": set.n,
                        "seed": set.seed,
                        "|A|": stats.size,
                        "|A+A|": stats.sumset_size,
                        "eta": stats.eta,
                        "H[U_A]": shannon_entropy(&u),
                    }),
                )?;
            }
        }
        Input::Dists(dists) => {
            json_only(output, "analyze on a distribution")?;
            let p = &dists[0];
            let sum = xor_convolve(p, p)?;
            let h = shannon_entropy(p);
            let h_sum = shannon_entropy(&sum);
            emit_json(
                output,
                &serde_json::json!({
                    "kind": "distribution",
                    "n": p.n(),
                    "support": p.support().len(),
                    "H[X]": h,
                    "H[X1+X2]": h_sum,
                    "s[X;X]": 2.0 * h - h_sum,
                    "d[X;X]": ruzsa_distance(p, p)?,
                    // H[X1+X2] = (1 - eta) 2H[X]
                    "eta": if h > 0.0 { 1.0 - h_sum / (2.0 * h) } else { 0.0 },
                }),
            )?;
        }
    }
    Ok(true)
}

fn find_subspace(
    inputs: &[PathBuf],
    family: &FamilyArgs,
    eta: f64,
    epsilon: f64,
    mode: Mode,
    output: &OutputArgs,
) -> anyhow::Result<bool> {
    let cfg = PipelineConfig {
        mode,
        ..PipelineConfig::default()
    }
    .with_seed(family.seed);
    let (bundle, row) = match load(inputs, family)? {
        Input::Set(set) => {
            let out = analyze_set(set.n, &set.elements, epsilon, &cfg)?;
            let v = &out.certificate.subspace;
            let log_a = (out.stats.size as f64).log2();
            let achieved = if log_a > 0.0 {
                (out.stats.eta - expected_log_intersection(&set.elements, v)? / log_a).max(0.0)
            } else {
                0.0
            };
            let row = Row {
                dim_v: Some(v.dim()),
                achieved_epsilon: Some(achieved),
                seed: Some(family.seed),
                ..set_row(&set, &out.stats)
            };
            let bundle = CertificateBundle::new(
                CertInputs::set(set.n, &set.elements),
                cfg.seed,
                mode,
                Some(out.trace),
                out.certificate,
            )?;
            (bundle, row)
        }
        Input::Dists(dists) => {
            let (p, q) = pair(&dists);
            let sol = solve_b(p, q, ParamsB::new(eta, epsilon, None)?, &cfg)?;
            let total = shannon_entropy(p) + shannon_entropy(q);
            // smallest epsilon for which the certified bound still holds
            let achieved = sol
                .certificate
                .checks
                .iter()
                .find(|c| c.name.starts_with("H[pi X + pi Y] >="))
                .map(|c| {
                    if total > 0.0 {
                        (epsilon - (c.lhs - c.rhs) / total).max(0.0)
                    } else {
                        0.0
                    }
                });
            let row = Row {
                family: "distribution".into(),
                n: p.n(),
                params: format!("eta={eta};epsilon={epsilon}"),
                size: None,
                sumset_size: None,
                eta: Some(eta),
                dim_v: Some(sol.certificate.dim()),
                achieved_epsilon: achieved,
                seed: Some(cfg.seed),
            };
            let bundle = CertificateBundle::new(
                CertInputs::pair(p, q),
                cfg.seed,
                mode,
                Some(sol.trace),
                sol.certificate,
            )?;
            (bundle, row)
        }
    };
    let ok = bundle.certificate.all_hold() && verify_bundle(&bundle)?.ok;
    match output.format {
        Format::Json => emit(output, &bundle.to_json()?)?,
        Format::Csv => emit_rows(output, &[row])?,
    }
    Ok(ok)
}

fn verify(
    n: Option<usize>,
    trials: usize,
    seed: u64,
    certificate: Option<PathBuf>,
    output: &OutputArgs,
) -> anyhow::Result<bool> {
    json_only(output, "verify")?;
    if let Some(path) = certificate {
        let bundle = CertificateBundle::read(&path)?;
        let r = verify_bundle(&bundle)?;
        eprintln!(
            "{}: {}",
            path.display(),
            if r.ok {
                "certificate re-verified"
            } else {
                "certificate FAILED"
            }
        );
        for p in &r.problems {
            eprintln!("  {p}");
        }
        emit_json(
            output,
            &serde_json::json!({ "certificate": path, "ok": r.ok, "problems": r.problems }),
        )?;
        return Ok(r.ok);
    }
    let n = n.ok_or_else(|| anyhow!("verify needs --n or --certificate"))?;
    let report = run_suite(n, trials, seed)?;
    for c in &report.checks {
        eprintln!(
            "{:<26} {:>6} trials {:>4} violations  max error {:.3e}",
            c.name, c.trials, c.violations, c.max_error
        );
    }
    eprintln!("n={n} seed={seed}: {} violations", report.violations());
    emit_json(
        output,
        &serde_json::json!({
            "n": report.n,
            "trials": report.trials,
            "seed": report.seed,
            "prng": PRNG_ALGORITHM,
            "violations": report.violations(),
            "checks": report.checks,
        }),
    )?;
    Ok(report.all_pass())
}

fn gen(family: &FamilyArgs, output: &OutputArgs) -> anyhow::Result<bool> {
    let set = generate(family)?;
    let stats = doubling_stats(&set.elements)?;
    match output.format {
        Format::Csv => emit_rows(output, &[set_row(&set, &stats)])?,
        Format::Json => emit_json(
            output,
            &GeneratedSet {
                set: SetFile::new(set.n, &set.elements),
                family: &set.family,
                params: &set.params,
                seed: family.seed,
                prng: PRNG_ALGORITHM,
                stats,
            },
        )?,
    }
    Ok(true)
}

fn run_endgame(
    inputs: &[PathBuf],
    eta: Option<f64>,
    kappa: Option<f64>,
    oracle: OracleArg,
    output: &OutputArgs,
) -> anyhow::Result<bool> {
    json_only(output, "endgame")?;
    let dists = match load(
        inputs,
        &FamilyArgs {
            family: None,
            n: None,
            radius: None,
            dim_v: None,
            count: None,
            seed: 0,
        },
    )? {
        Input::Dists(d) => d,
        Input::Set(s) => vec![uniform_on(&s.elements, s.n)?],
    };
    let (p, q) = pair(&dists);
    let quantities = EndgameQuantities::new(p, q)?;
    let eta = eta.unwrap_or_else(|| {
        let t = quantities.total();
        if t > 0.0 {
            (quantities.s_xy / t).clamp(0.0, 0.5)
        } else {
            0.5
        }
    });
    let kappa = kappa.unwrap_or_else(|| quantities.kappa(eta));
    let oracle = match oracle {
        OracleArg::Balanced => FiberOracle::Balanced,
        OracleArg::Minimal => FiberOracle::Minimal,
    };
    let transcript = endgame(p, q, eta, kappa, oracle)?;
    for c in transcript.hypotheses.iter().chain(&transcript.checks) {
        if !c.holds {
            eprintln!("failed: {} ({} vs {})", c.name, c.lhs, c.rhs);
        }
    }
    emit_json(output, &transcript)?;
    Ok(transcript.all_hold())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Analyze {
            input,
            family,
            output,
        } => analyze(input, &family, &output),
        Command::FindSubspace {
            inputs,
            family,
            eta,
            epsilon,
            mode,
            output,
        } => find_subspace(&inputs, &family, eta, epsilon, mode.into(), &output),
        Command::Verify {
            n,
            trials,
            seed,
            certificate,
            output,
        } => verify(n, trials, seed, certificate, &output),
        Command::Gen { family, output } => gen(&family, &output),
        Command::Endgame {
            inputs,
            eta,
            kappa,
            oracle,
            output,
        } => run_endgame(&inputs, eta, kappa, oracle, &output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
