//! Command-line front end.
//!
//! Every invocation prints one JSON report on standard output. Exit code 0
//! means the check passed or the construction succeeded, 1 means the data
//! refute a claim or a hypothesis (the report names it and its residual),
//! and 2 means the input was malformed; in that case a JSON error object is
//! printed on standard error instead.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::document::Document;
use crate::error::{FrameError, Result};
use crate::frames::{
    frame_bounds, is_equal_norm, naimark_dilate, naimark_residual, parseval_residual,
    parseval_threshold, FrameSystem,
};
use crate::kduals::{
    equal_norm_dual, error_identity_report, is_kdual, kdual_family, IsometrySearch,
};
use crate::kframes::{
    canonical_parseval, extend_to_knorm, frame_to_subspace, is_scaled_partial_isometry,
    kframe_bounds, kframe_dilation, kframe_dilation_residual, parseval_kframe_residual,
    parseval_kframe_threshold, random_parseval_kframe, range_inclusion_residual, subspace_to_frame,
    trace_eigen_report, KFrameInstance,
};
use crate::opcore::{numerical_rank, orth_projector, Operator, Subspace, Tolerance};
use crate::sampling;

#[derive(Parser, Debug)]
#[command(
    name = "kframe",
    version,
    about = "Checks and constructions for Parseval K-frames"
)]
struct Cli {
    /// Absolute tolerance for equality tests.
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    /// Relative tolerance for equality tests.
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate seeded random documents.
    #[command(subcommand)]
    Gen(Gen),
    /// Test a property of stored documents.
    #[command(subcommand)]
    Check(Check),
    /// Optimal frame or K-frame bounds.
    #[command(subcommand)]
    Bounds(Bounds),
    /// Build a new frame, dual or subspace.
    #[command(subcommand)]
    Construct(Construct),
    /// Numerical reports on the trace and error identities.
    #[command(subcommand)]
    Report(Report),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    /// identity | diag:<csv> | random | scaled-unitary:<c> | projection:<r>
    #[arg(long)]
    k_spec: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// A Parseval K-frame `{K w_j}`; K is written to --k-out when given.
    ParsevalKframe {
        #[command(flatten)]
        args: GenArgs,
        #[arg(long)]
        k_out: Option<PathBuf>,
    },
    /// A complex Gaussian family of m vectors in C^n.
    Frame {
        #[command(flatten)]
        args: GenArgs,
    },
    /// An operator described by --k-spec.
    Operator {
        #[command(flatten)]
        args: GenArgs,
    },
}

#[derive(Args, Debug)]
struct FrameIn {
    #[arg(long)]
    frame: PathBuf,
}

#[derive(Args, Debug)]
struct KFrameIn {
    #[arg(long)]
    k: PathBuf,
    #[arg(long)]
    frame: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Check {
    Frame(FrameIn),
    Parseval(FrameIn),
    EqualNorm(FrameIn),
    Kframe(KFrameIn),
    ParsevalKframe(KFrameIn),
    Kdual {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long)]
        dual: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum Bounds {
    Frame(FrameIn),
    Kframe(KFrameIn),
}

#[derive(Subcommand, Debug)]
enum Construct {
    /// Parseval frame for range(K); --projector-out receives P_R(K).
    CanonicalParseval {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        projector_out: Option<PathBuf>,
    },
    /// Extend vectors of norm ‖K‖ to a K-frame.
    ExtendKnorm {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long)]
        tight: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Naimark dilation of a Parseval frame; writes the frame {P e_j}.
    Dilate {
        #[command(flatten)]
        input: FrameIn,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        projector_out: Option<PathBuf>,
    },
    /// Dilation of a Parseval K-frame; writes the frame {K E* P e_j}.
    KDilate {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        projector_out: Option<PathBuf>,
        #[arg(long)]
        embed_out: Option<PathBuf>,
    },
    /// K-dual from the free parameter z (n x m operator, zero by default).
    Kdual {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long)]
        z: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equal-norm K-dual g_j = K†f_j + a u δ_j.
    EqualNormDual {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        u: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subspace attached to a Parseval K-frame of n vectors.
    FrameToSubspace {
        #[command(flatten)]
        input: KFrameIn,
        /// Projector onto range(K*); defaults to K†K.
        #[arg(long)]
        p: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parseval K-frame attached to a subspace of dimension rank(K).
    SubspaceToFrame {
        #[arg(long)]
        k: PathBuf,
        #[arg(long)]
        p: Option<PathBuf>,
        #[arg(long)]
        subspace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Report {
    TraceEigen(KFrameIn),
    ErrorIdentity {
        #[command(flatten)]
        input: KFrameIn,
        #[arg(long)]
        dual: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
}

/// Exit code and the text destined for the two output streams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Outcome {
                code: 0,
                stdout: e.render().to_string(),
                stderr: String::new(),
            }
        }
        Err(e) => return usage_error("usage", &e.render().to_string()),
    };
    let defaults = Tolerance::default();
    let tol = match Tolerance::new(
        defaults.rank_rel,
        cli.tol_abs.unwrap_or(defaults.eq_abs),
        cli.tol_rel.unwrap_or(defaults.eq_rel),
    ) {
        Ok(t) => t,
        Err(e) => return usage_error(e.kind(), &message(&e)),
    };
    let name = cli.command.name();
    match execute(&cli.command, &tol) {
        Ok((passed, body)) => {
            let status = if passed { "pass" } else { "fail" };
            Outcome {
                code: if passed { 0 } else { 1 },
                stdout: report(&name, status, &tol, body),
                stderr: String::new(),
            }
        }
        Err(FrameError::InvalidInput(msg)) => usage_error("invalid-input", &msg),
        Err(e) => {
            let mut body = Map::new();
            body.insert("error".into(), json!(e.kind()));
            body.insert("message".into(), json!(e.to_string()));
            match &e {
                FrameError::HypothesisViolated {
                    hypothesis,
                    residual,
                } => {
                    body.insert("hypothesis".into(), json!(hypothesis));
                    body.insert("residual".into(), json!(residual));
                }
                FrameError::NotAKFrame { residual } | FrameError::NoDualExists { residual } => {
                    body.insert("hypothesis".into(), json!("R(K) ⊆ R(T)"));
                    body.insert("residual".into(), json!(residual));
                }
                FrameError::NotRepresentable { reason, residual } => {
                    body.insert("hypothesis".into(), json!(reason));
                    body.insert("residual".into(), json!(residual));
                }
                FrameError::NotInjective { rank, cols } => {
                    body.insert("hypothesis".into(), json!("K injective"));
                    body.insert("residual".into(), json!(cols - rank));
                }
                FrameError::IsometrySearchFailed {
                    iterations,
                    residual,
                } => {
                    body.insert("hypothesis".into(), json!("partial isometry u exists"));
                    body.insert("iterations".into(), json!(iterations));
                    body.insert("residual".into(), json!(residual));
                }
                FrameError::InvalidInput(_) => unreachable!(),
            }
            Outcome {
                code: 1,
                stdout: report(&name, "fail", &tol, body),
                stderr: String::new(),
            }
        }
    }
}

impl Command {
    fn name(&self) -> String {
        let (group, sub) = match self {
            Command::Gen(g) => (
                "gen",
                match g {
                    Gen::ParsevalKframe { .. } => "parseval-kframe",
                    Gen::Frame { .. } => "frame",
                    Gen::Operator { .. } => "operator",
                },
            ),
            Command::Check(c) => (
                "check",
                match c {
                    Check::Frame(_) => "frame",
                    Check::Parseval(_) => "parseval",
                    Check::EqualNorm(_) => "equal-norm",
                    Check::Kframe(_) => "kframe",
                    Check::ParsevalKframe(_) => "parseval-kframe",
                    Check::Kdual { .. } => "kdual",
                },
            ),
            Command::Bounds(b) => (
                "bounds",
                match b {
                    Bounds::Frame(_) => "frame",
                    Bounds::Kframe(_) => "kframe",
                },
            ),
            Command::Construct(c) => (
                "construct",
                match c {
                    Construct::CanonicalParseval { .. } => "canonical-parseval",
                    Construct::ExtendKnorm { .. } => "extend-knorm",
                    Construct::Dilate { .. } => "dilate",
                    Construct::KDilate { .. } => "k-dilate",
                    Construct::Kdual { .. } => "kdual",
                    Construct::EqualNormDual { .. } => "equal-norm-dual",
                    Construct::FrameToSubspace { .. } => "frame-to-subspace",
                    Construct::SubspaceToFrame { .. } => "subspace-to-frame",
                },
            ),
            Command::Report(r) => (
                "report",
                match r {
                    Report::TraceEigen(_) => "trace-eigen",
                    Report::ErrorIdentity { .. } => "error-identity",
                },
            ),
        };
        format!("{group} {sub}")
    }
}

fn message(e: &FrameError) -> String {
    match e {
        FrameError::InvalidInput(msg) => msg.clone(),
        other => other.to_string(),
    }
}

fn usage_error(kind: &str, msg: &str) -> Outcome {
    let body = json!({ "kind": "error", "error": kind, "message": msg.trim_end() });
    Outcome {
        code: 2,
        stdout: String::new(),
        stderr: format!(
            "{}\n",
            serde_json::to_string_pretty(&body).expect("JSON values serialize")
        ),
    }
}

fn report(command: &str, status: &str, tol: &Tolerance, mut body: Map<String, Value>) -> String {
    body.insert("command".into(), json!(command));
    body.insert("status".into(), json!(status));
    body.insert(
        "tolerance".into(),
        json!({ "rank_rel": tol.rank_rel, "eq_abs": tol.eq_abs, "eq_rel": tol.eq_rel }),
    );
    Document::Report(body).to_string_pretty()
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("report bodies are objects"),
    }
}

type Verdict = (bool, Map<String, Value>);

fn load_operator(path: &Path, tol: &Tolerance) -> Result<Operator> {
    match Document::load(path, tol)? {
        Document::Operator(op) => Ok(op),
        other => Err(wrong_kind(path, "operator", other.kind())),
    }
}

fn load_frame(path: &Path, tol: &Tolerance) -> Result<FrameSystem> {
    match Document::load(path, tol)? {
        Document::Frame(f) => Ok(f),
        other => Err(wrong_kind(path, "frame", other.kind())),
    }
}

fn load_subspace(path: &Path, tol: &Tolerance) -> Result<Subspace> {
    match Document::load(path, tol)? {
        Document::Subspace(w) => Ok(w),
        other => Err(wrong_kind(path, "subspace", other.kind())),
    }
}

fn wrong_kind(path: &Path, want: &str, got: &str) -> FrameError {
    FrameError::invalid(format!(
        "{}: expected a {want} document, found {got}",
        path.display()
    ))
}

fn load_instance(input: &KFrameIn, tol: &Tolerance) -> Result<KFrameInstance> {
    KFrameInstance::new(
        load_operator(&input.k, tol)?,
        load_frame(&input.frame, tol)?,
    )
}

/// Saves `doc` to `out`, or embeds it in the report when no path is given.
fn emit(
    doc: Document,
    out: &Option<PathBuf>,
    field: &str,
    body: &mut Map<String, Value>,
) -> Result<()> {
    match out {
        Some(path) => {
            doc.save(path)?;
            body.insert(field.into(), json!(path.display().to_string()));
        }
        None => {
            body.insert(field.into(), doc.to_json());
        }
    }
    Ok(())
}

fn save_optional(doc: Document, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => doc.save(path),
        None => Ok(()),
    }
}

fn bound_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(if x > 0.0 { "inf" } else { "nan" })
    }
}

fn execute(command: &Command, tol: &Tolerance) -> Result<Verdict> {
    match command {
        Command::Gen(g) => gen(g, tol),
        Command::Check(c) => check(c, tol),
        Command::Bounds(b) => bounds(b, tol),
        Command::Construct(c) => construct(c, tol),
        Command::Report(r) => run_report(r, tol),
    }
}

fn parse_kspec<R: Rng + ?Sized>(
    spec: &str,
    n: usize,
    rng: &mut R,
    tol: &Tolerance,
) -> Result<Operator> {
    let (name, arg) = match spec.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (spec, None),
    };
    let number = |what: &str| -> Result<f64> {
        let text =
            arg.ok_or_else(|| FrameError::invalid(format!("k-spec {name} needs :<{what}>")))?;
        text.trim()
            .parse::<f64>()
            .map_err(|_| FrameError::invalid(format!("k-spec {name}: cannot parse {text:?}")))
    };
    match (name, arg) {
        ("identity", None) => Ok(Operator::identity(n)),
        ("random", None) => Operator::new(sampling::gaussian_matrix(n, n, rng)),
        ("diag", Some(csv)) => {
            let d = csv
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| FrameError::invalid(format!("k-spec diag: cannot parse {csv:?}")))?;
            if d.len() != n {
                return Err(FrameError::invalid(format!(
                    "k-spec diag has {} entries, n = {n}",
                    d.len()
                )));
            }
            Operator::new(Operator::real_diag(&d).into_matrix())
        }
        ("scaled-unitary", Some(_)) => {
            let c = number("c")?;
            Operator::new(sampling::haar_unitary(n, rng)).map(|u| u.scale(c))
        }
        ("projection", Some(_)) => {
            let r = number("r")?;
            if r.fract() != 0.0 || r < 0.0 || r > n as f64 {
                return Err(FrameError::invalid(format!(
                    "k-spec projection rank must be in 0..={n}"
                )));
            }
            let r = r as usize;
            if r == 0 {
                return Ok(Operator::zeros(n, n));
            }
            let a = Operator::new(sampling::gaussian_matrix(n, r, rng))?;
            Ok(orth_projector(&a, tol))
        }
        _ => Err(FrameError::invalid(format!("unknown k-spec {spec:?}"))),
    }
}

fn gen(g: &Gen, tol: &Tolerance) -> Result<Verdict> {
    let args = match g {
        Gen::ParsevalKframe { args, .. } | Gen::Frame { args } | Gen::Operator { args } => args,
    };
    if args.n == 0 {
        return Err(FrameError::invalid("--n must be positive"));
    }
    let need_m = || {
        args.m
            .filter(|&m| m > 0)
            .ok_or_else(|| FrameError::invalid("--m must be given and positive"))
    };
    let need_spec = || {
        args.k_spec
            .as_deref()
            .ok_or_else(|| FrameError::invalid("--k-spec is required"))
    };
    let mut rng = sampling::rng(args.seed);
    let mut body =
        object(json!({ "seed": args.seed, "n": args.n, "out": args.out.display().to_string() }));
    match g {
        Gen::ParsevalKframe { k_out, .. } => {
            let m = need_m()?;
            let k = parse_kspec(need_spec()?, args.n, &mut rng, tol)?;
            let inst = random_parseval_kframe(&k, m, rng.random())?;
            let residual = parseval_kframe_residual(&inst);
            body.insert("m".into(), json!(m));
            body.insert("residual".into(), json!(residual));
            body.insert(
                "threshold".into(),
                json!(parseval_kframe_threshold(&inst, tol)),
            );
            let (k, f) = inst.into_parts();
            Document::Frame(f).save(&args.out)?;
            if let Some(path) = k_out {
                body.insert("k_out".into(), json!(path.display().to_string()));
            }
            save_optional(Document::Operator(k), k_out)?;
        }
        Gen::Frame { .. } => {
            let m = need_m()?;
            let t = Operator::new(sampling::gaussian_matrix(args.n, m, &mut rng))?;
            body.insert("m".into(), json!(m));
            Document::Frame(FrameSystem::from_synthesis(&t)).save(&args.out)?;
        }
        Gen::Operator { .. } => {
            let k = parse_kspec(need_spec()?, args.n, &mut rng, tol)?;
            body.insert("rank".into(), json!(numerical_rank(&k, tol)));
            Document::Operator(k).save(&args.out)?;
        }
    }
    Ok((true, body))
}

fn check(c: &Check, tol: &Tolerance) -> Result<Verdict> {
    match c {
        Check::Frame(input) => {
            let f = load_frame(&input.frame, tol)?;
            let b = frame_bounds(&f, tol);
            let passed = b.lower > 0.0;
            Ok((
                passed,
                object(json!({
                    "hypothesis": "vectors span C^n",
                    "lower": b.lower,
                    "upper": b.upper,
                    "rank": numerical_rank(&f.synthesis(), tol),
                    "dim": f.dim(),
                })),
            ))
        }
        Check::Parseval(input) => {
            let f = load_frame(&input.frame, tol)?;
            let residual = parseval_residual(&f);
            let threshold = parseval_threshold(&f, tol);
            Ok((
                residual <= threshold,
                object(
                    json!({ "hypothesis": "S = I", "residual": residual, "threshold": threshold }),
                ),
            ))
        }
        Check::EqualNorm(input) => {
            let f = load_frame(&input.frame, tol)?;
            let (passed, c) = is_equal_norm(&f, tol);
            let norms = f.norms();
            let spread = norms.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
            Ok((
                passed,
                object(json!({
                    "hypothesis": "‖f_j‖ = ‖f_1‖",
                    "norm": c,
                    "residual": spread,
                    "threshold": tol.eq_abs,
                })),
            ))
        }
        Check::Kframe(input) => {
            let inst = load_instance(input, tol)?;
            let k = inst.k().matrix();
            let residual = range_inclusion_residual(k, &inst.frame().synthesis_matrix(), tol);
            let threshold = tol.eq_abs * k.norm().max(1.0);
            let b = kframe_bounds(&inst, tol);
            Ok((
                residual <= threshold,
                object(json!({
                    "hypothesis": "R(K) ⊆ R(T)",
                    "residual": residual,
                    "threshold": threshold,
                    "lower": bound_json(b.lower),
                    "upper": b.upper,
                })),
            ))
        }
        Check::ParsevalKframe(input) => {
            let inst = load_instance(input, tol)?;
            let residual = parseval_kframe_residual(&inst);
            let threshold = parseval_kframe_threshold(&inst, tol);
            Ok((
                residual <= threshold,
                object(
                    json!({ "hypothesis": "S = KK*", "residual": residual, "threshold": threshold }),
                ),
            ))
        }
        Check::Kdual { input, dual } => {
            let k = load_operator(&input.k, tol)?;
            let f = load_frame(&input.frame, tol)?;
            let g = load_frame(dual, tol)?;
            let pair = is_kdual(&k, &f, &g, tol)?;
            Ok((
                pair.accepted,
                object(json!({
                    "hypothesis": "TΘ* = K",
                    "residual": pair.residual,
                    "threshold": tol.eq_abs * k.spectral_norm().max(1.0),
                    "reconstruction_residual": pair.reconstruction_residual,
                    "dual_kstar_lower": pair.dual_kstar_lower.map(bound_json),
                })),
            ))
        }
    }
}

fn bounds(b: &Bounds, tol: &Tolerance) -> Result<Verdict> {
    let (fb, dim, len) = match b {
        Bounds::Frame(input) => {
            let f = load_frame(&input.frame, tol)?;
            (frame_bounds(&f, tol), f.dim(), f.len())
        }
        Bounds::Kframe(input) => {
            let inst = load_instance(input, tol)?;
            (kframe_bounds(&inst, tol), inst.dim(), inst.frame().len())
        }
    };
    Ok((
        true,
        object(json!({
            "lower": bound_json(fb.lower),
            "upper": fb.upper,
            "dim": dim,
            "len": len,
        })),
    ))
}

fn default_projector(k: &Operator, p: &Option<PathBuf>, tol: &Tolerance) -> Result<Operator> {
    match p {
        Some(path) => load_operator(path, tol),
        None => Ok(orth_projector(&k.adjoint(), tol)),
    }
}

fn construct(c: &Construct, tol: &Tolerance) -> Result<Verdict> {
    let mut body = Map::new();
    match c {
        Construct::CanonicalParseval {
            input,
            out,
            projector_out,
        } => {
            let inst = load_instance(input, tol)?;
            let cp = canonical_parseval(&inst, tol)?;
            let check = KFrameInstance::new(cp.projector.clone(), cp.frame.clone())?;
            body.insert("rank".into(), json!(numerical_rank(&cp.projector, tol)));
            body.insert("residual".into(), json!(parseval_kframe_residual(&check)));
            body.insert(
                "threshold".into(),
                json!(parseval_kframe_threshold(&check, tol)),
            );
            emit(Document::Frame(cp.frame), out, "out", &mut body)?;
            emit(
                Document::Operator(cp.projector),
                projector_out,
                "projector",
                &mut body,
            )?;
        }
        Construct::ExtendKnorm { input, tight, out } => {
            let inst = load_instance(input, tol)?;
            let count = inst.frame().len();
            let ext = extend_to_knorm(inst.k(), inst.frame(), *tight, tol)?;
            let knorm = inst.k().spectral_norm();
            let norm_dev = ext
                .frame()
                .norms()
                .iter()
                .map(|x| (x - knorm).abs())
                .fold(0.0, f64::max);
            let b = kframe_bounds(&ext, tol);
            body.insert("tight".into(), json!(tight));
            body.insert("inputs".into(), json!(count));
            body.insert("outputs".into(), json!(ext.frame().len()));
            body.insert("norm_residual".into(), json!(norm_dev));
            body.insert("claimed_lower".into(), json!(count as f64));
            body.insert("claimed_upper".into(), json!(count as f64 * knorm * knorm));
            body.insert("lower".into(), bound_json(b.lower));
            body.insert("upper".into(), json!(b.upper));
            emit(Document::Frame(ext.into_parts().1), out, "out", &mut body)?;
        }
        Construct::Dilate {
            input,
            out,
            projector_out,
        } => {
            let f = load_frame(&input.frame, tol)?;
            let d = naimark_dilate(&f, tol)?;
            body.insert("big_dim".into(), json!(d.big_dim));
            body.insert("residual".into(), json!(naimark_residual(&f, &d)));
            body.insert("projector_defect".into(), json!(d.projector_defect()));
            let projected = FrameSystem::new(d.big_dim, d.projected_basis())?;
            emit(Document::Frame(projected), out, "out", &mut body)?;
            emit(
                Document::Operator(d.projector),
                projector_out,
                "projector",
                &mut body,
            )?;
        }
        Construct::KDilate {
            input,
            out,
            projector_out,
            embed_out,
        } => {
            let inst = load_instance(input, tol)?;
            let d = kframe_dilation(&inst, tol)?;
            body.insert("big_dim".into(), json!(d.big_dim));
            body.insert(
                "residual".into(),
                json!(kframe_dilation_residual(&inst, &d)),
            );
            body.insert("projector_defect".into(), json!(d.projector_defect()));
            let map = &(inst.k() * &d.embed.adjoint()) * &d.projector;
            let image = FrameSystem::from_synthesis(&map);
            emit(Document::Frame(image), out, "out", &mut body)?;
            emit(
                Document::Operator(d.projector),
                projector_out,
                "projector",
                &mut body,
            )?;
            emit(Document::Operator(d.embed), embed_out, "embed", &mut body)?;
        }
        Construct::Kdual { input, z, out } => {
            let k = load_operator(&input.k, tol)?;
            let f = load_frame(&input.frame, tol)?;
            let z = match z {
                Some(path) => load_operator(path, tol)?,
                None => Operator::zeros(f.dim(), f.len()),
            };
            let g = kdual_family(&k, &f, &z, tol)?;
            let pair = is_kdual(&k, &f, &g, tol)?;
            body.insert("hypothesis".into(), json!("TΘ* = K"));
            body.insert("residual".into(), json!(pair.residual));
            body.insert(
                "threshold".into(),
                json!(tol.eq_abs * k.spectral_norm().max(1.0)),
            );
            emit(Document::Frame(g), out, "out", &mut body)?;
            return Ok((pair.accepted, body));
        }
        Construct::EqualNormDual {
            input,
            a,
            u,
            seed,
            out,
        } => {
            let k = load_operator(&input.k, tol)?;
            let f = load_frame(&input.frame, tol)?;
            let u = u.as_ref().map(|p| load_operator(p, tol)).transpose()?;
            let search = IsometrySearch {
                seed: *seed,
                ..IsometrySearch::default()
            };
            let (g, r) = equal_norm_dual(&k, &f, *a, u.as_ref(), &search, tol)?;
            body.insert("a".into(), json!(r.a));
            body.insert("seed".into(), json!(seed));
            body.insert("norms".into(), json!(r.norms));
            body.insert("max_norm_spread".into(), json!(r.max_norm_spread));
            body.insert("formula_value".into(), json!(r.formula_value));
            body.insert("formula_applies".into(), json!(r.formula_applies));
            body.insert("formula_deviation".into(), json!(r.formula_deviation));
            body.insert("duality_residual".into(), json!(r.duality_residual));
            body.insert(
                "orthogonality_residual".into(),
                json!(r.orthogonality_residual),
            );
            emit(Document::Frame(g), out, "out", &mut body)?;
            let passed = r.duality_residual <= tol.eq_abs * k.spectral_norm().max(1.0)
                && r.max_norm_spread <= tol.eq_abs * r.formula_value.abs().max(1.0);
            body.insert("hypothesis".into(), json!("TΘ* = K and ‖g_j‖ constant"));
            body.insert(
                "residual".into(),
                json!(r.duality_residual.max(r.max_norm_spread)),
            );
            return Ok((passed, body));
        }
        Construct::FrameToSubspace { input, p, out } => {
            let inst = load_instance(input, tol)?;
            let p = default_projector(inst.k(), p, tol)?;
            let w = frame_to_subspace(inst.k(), &p, inst.frame(), tol)?;
            body.insert("dim".into(), json!(w.dim()));
            body.insert("ambient_dim".into(), json!(w.ambient_dim()));
            body.insert(
                "injective_regime".into(),
                json!(is_scaled_partial_isometry(inst.k(), tol)),
            );
            emit(Document::Subspace(w), out, "out", &mut body)?;
        }
        Construct::SubspaceToFrame {
            k,
            p,
            subspace,
            out,
        } => {
            let k = load_operator(k, tol)?;
            let p = default_projector(&k, p, tol)?;
            let w = load_subspace(subspace, tol)?;
            let f = subspace_to_frame(&k, &p, &w, tol)?;
            let inst = KFrameInstance::new(k, f)?;
            body.insert("residual".into(), json!(parseval_kframe_residual(&inst)));
            body.insert(
                "threshold".into(),
                json!(parseval_kframe_threshold(&inst, tol)),
            );
            emit(Document::Frame(inst.into_parts().1), out, "out", &mut body)?;
        }
    }
    Ok((true, body))
}

fn run_report(r: &Report, tol: &Tolerance) -> Result<Verdict> {
    match r {
        Report::TraceEigen(input) => {
            let inst = load_instance(input, tol)?;
            let s = trace_eigen_report(&inst, tol)?;
            Ok((
                true,
                object(json!({
                    "eigenvalues": s.eigenvalues,
                    "sum_norms_sq": s.sum_norms_sq,
                    "k_norm_sq": s.k_norm_sq,
                    "n_knorm_sq": s.n_knorm_sq,
                    "trace_kkstar": s.trace_kkstar,
                    "trace_residual": s.trace_residual,
                    "eigen_claim_holds": s.eigen_claim_holds,
                    "eigen_deviation": s.eigen_deviation,
                    "regime_scalar_kkstar": s.regime_scalar_kkstar,
                    "scalar_deviation": s.scalar_deviation,
                })),
            ))
        }
        Report::ErrorIdentity {
            input,
            dual,
            samples,
            seed,
        } => {
            let k = load_operator(&input.k, tol)?;
            let f = load_frame(&input.frame, tol)?;
            let g = load_frame(dual, tol)?;
            let e = error_identity_report(&k, &f, &g, tol, *samples, *seed)?;
            Ok((
                e.identity_holds && e.within_bounds,
                object(json!({
                    "seed": seed,
                    "samples": e.samples,
                    "hypothesis": "‖(T* − Θ*K*)x‖² = ‖KK*x‖² − ‖K*x‖²",
                    "residual": e.max_identity_residual,
                    "threshold": e.threshold,
                    "identity_holds": e.identity_holds,
                    "t_minus_k_theta_sq": e.t_minus_k_theta_sq,
                    "lower_bound": e.lower_bound,
                    "upper_bound": e.upper_bound,
                    "lower_vacuous": e.lower_vacuous,
                    "within_bounds": e.within_bounds,
                    "parseval_residual": e.parseval_residual,
                    "kdual_residual": e.kdual_residual,
                    "kstar_parseval_residual": e.kstar_parseval_residual,
                })),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kspec_parsing() {
        let tol = Tolerance::default();
        let mut rng = sampling::rng(1);
        assert_eq!(
            parse_kspec("identity", 2, &mut rng, &tol).unwrap(),
            Operator::identity(2)
        );
        assert_eq!(
            parse_kspec("diag:1,0.5", 2, &mut rng, &tol).unwrap(),
            Operator::real_diag(&[1.0, 0.5])
        );
        let u = parse_kspec("scaled-unitary:2", 3, &mut rng, &tol).unwrap();
        assert!((u.spectral_norm() - 2.0).abs() < 1e-12);
        let p = parse_kspec("projection:2", 4, &mut rng, &tol).unwrap();
        assert_eq!(numerical_rank(&p, &tol), 2);
        for bad in [
            "diag:1",
            "projection:5",
            "projection:1.5",
            "scaled-unitary",
            "spiral",
            "identity:2",
        ] {
            assert!(parse_kspec(bad, 2, &mut rng, &tol).is_err(), "{bad}");
        }
    }

    #[test]
    fn usage_errors_exit_two() {
        let out = run(["kframe", "check"]);
        assert_eq!(out.code, 2);
        assert!(out.stdout.is_empty());
        let err: Value = serde_json::from_str(&out.stderr).unwrap();
        assert_eq!(err["kind"], "error");
        assert_eq!(
            run([
                "kframe",
                "--tol-abs",
                "-1",
                "bounds",
                "frame",
                "--frame",
                "x"
            ])
            .code,
            2
        );
        assert_eq!(run(["kframe", "--help"]).code, 0);
    }
}
