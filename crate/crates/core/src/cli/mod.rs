//! The `mpec-cq` command line: load a problem file, run one analysis and
//! print a single report (text or JSON).
//!
//! Exit codes: 0 = HOLDS or neutral, 1 = FAILS-type finding, 2 = UNKNOWN,
//! 64 = usage, I/O or parse error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{certify_mscq_mpec, CertifyOptions, Limits, Status};
use crate::exactmath::rational::{fmt_vec, parse_rational_list};
use crate::exactmath::scalar::to_f64_vec;
use crate::lowerlevel::{critical_cone, graph_tangent_member, graph_tangent_slice, multiplier_set};
use crate::model::{parse_problem, validate_point, MpecProblem};
use crate::mpccdiag::{self, gcq_evidence, multiplier_uniqueness, GcqOptions};
use crate::oracle::{tangent_ratio_probe, ProbeOptions, ProbeVerdict};
use crate::{Error, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "MPEC_CQ_THREADS";

#[derive(Parser, Debug)]
#[command(name = "mpec-cq", version, about = "Constraint-qualification certificates for MPECs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a problem file and check the reference point.
    Validate(Common),
    /// Lower-level multiplier set, its extreme points, critical cone and uniqueness.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Normal vector y* (default: −φ(x̄, ȳ)).
        #[arg(long, value_name = "P/Q,...")]
        y_star: Option<String>,
    },
    /// Slice of the tangent cone to the normal-cone graph at (ȳ, y*).
    TangentCone {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "P/Q,...")]
        y_star: Option<String>,
        /// Direction v in y-space.
        #[arg(long, value_name = "P/Q,...")]
        v: String,
        /// Test exact membership of v* in the slice.
        #[arg(long, value_name = "P/Q,...")]
        v_star: Option<String>,
    },
    /// Certify metric subregularity of the MPEC constraint system.
    CertifyMscq(Common),
    /// MPCC index sets, MPCC-MFCQ/LICQ, linearized cone and stationarity at λ̄.
    DiagnoseMpcc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "P/Q,...")]
        lambda: String,
        /// Also collect numerical tangency evidence for this (u, v, μ) direction.
        #[arg(long, value_name = "P/Q,...")]
        direction: Option<String>,
    },
    /// Numerical distance-ratio probe (evidence only).
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "P/Q,...")]
        y_star: Option<String>,
        /// Graph probe: direction v (with --v-star).
        #[arg(long, value_name = "P/Q,...")]
        v: Option<String>,
        #[arg(long, value_name = "P/Q,...")]
        v_star: Option<String>,
        /// MPCC probe: multiplier λ̄ (with --direction).
        #[arg(long, value_name = "P/Q,...")]
        lambda: Option<String>,
        #[arg(long, value_name = "P/Q,...")]
        direction: Option<String>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Problem file.
    problem: PathBuf,
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
    /// Subdivision depth limit of the quadratic-form test.
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Multistart budget of the numerical oracle.
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Ratio below which a probe reports RATIO_VANISHES.
    #[arg(long, default_value_t = 1e-3)]
    vanish_tol: f64,
    /// Ratio above which a probe reports RATIO_BOUNDED_AWAY.
    #[arg(long, default_value_t = 1e-2)]
    away_tol: f64,
    /// Ratio threshold for MPCC tangency-gap evidence.
    #[arg(long, default_value_t = 0.05)]
    gap_threshold: f64,
}

/// The resolved configuration, embedded in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub problem: PathBuf,
    pub lambda: Option<Vec<String>>,
    pub depth: usize,
    pub budget: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub vanish_tol: f64,
    pub away_tol: f64,
    pub gap_threshold: f64,
    pub output: &'static str,
}

impl RunConfig {
    fn probe_options(&self) -> ProbeOptions {
        ProbeOptions {
            budget: self.budget,
            seed: self.seed,
            vanish_tol: self.vanish_tol,
            away_tol: self.away_tol,
            ..ProbeOptions::default()
        }
    }

    fn certify_options(&self) -> CertifyOptions {
        CertifyOptions { limits: Limits { depth: self.depth, ..Limits::default() } }
    }
}

/// Failure before a report could be produced.
#[derive(Debug)]
enum Failure {
    /// Usage, I/O or parse problem: exit 64.
    Usage(String, Option<&'static str>),
    /// A domain error raised by the analysis (bad point, direction, ...).
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Io(_) | Error::UnknownVariable(_) | Error::DimensionMismatch(_) => {
                Failure::Usage(e.to_string(), Some(e.code()))
            }
            e => Failure::Domain(e),
        }
    }
}

/// The exit code of a domain error: an infeasible or non-member input is a
/// FAILS-type finding; an exhausted limit is UNKNOWN.
fn domain_exit(e: &Error) -> i32 {
    match e {
        Error::LimitExceeded(_) => EXIT_UNKNOWN,
        _ => EXIT_FAILS,
    }
}

struct Outcome {
    status: &'static str,
    exit: i32,
    summary: Vec<String>,
    report: Value,
}

fn status_exit(s: Status) -> i32 {
    match s {
        Status::Holds => EXIT_OK,
        Status::Fails => EXIT_FAILS,
        Status::Unknown => EXIT_UNKNOWN,
    }
}

fn rationals(flag: &str, text: &str) -> Result<Vec<Rational>, Failure> {
    parse_rational_list(text).map_err(|e| Failure::Usage(format!("--{flag}: {e}"), Some("PARSE_ERROR")))
}

fn load(path: &Path) -> Result<MpecProblem, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()), Some("IO_ERROR")))?;
    parse_problem(&text).map_err(|e| match e {
        Error::Parse { line, col, msg } => {
            Failure::Usage(format!("{}:{line}:{col}: {msg}", path.display()), Some("PARSE_ERROR"))
        }
        e => Failure::Usage(format!("{}: {e}", path.display()), Some(e.code())),
    })
}

fn y_star_or_default(p: &MpecProblem, flag: &Option<String>) -> Result<Vec<Rational>, Failure> {
    match flag {
        Some(s) => rationals("y-star", s),
        None => Ok(p.y_star()),
    }
}

fn validate(p: &MpecProblem) -> Outcome {
    let r = validate_point(p);
    let status = if r.feasible { "FEASIBLE" } else { "INFEASIBLE" };
    let summary = vec![
        format!("g(ȳ) ≤ 0: {}", r.g_ok),
        format!("G(x̄, ȳ) ≤ 0: {}", r.big_g_ok),
        format!("multiplier exists: {}", r.multipliers_exist),
    ];
    Outcome {
        status,
        exit: if r.feasible { EXIT_OK } else { EXIT_FAILS },
        summary,
        report: serde_json::to_value(&r).expect("report serializes"),
    }
}

fn analyze(p: &MpecProblem, y_star: &[Rational]) -> Result<Outcome, Failure> {
    let ms = multiplier_set(p, &p.y, y_star)?;
    let mut report = json!({ "multipliers": ms.to_json() });
    let mut summary = vec![format!("active set: {:?}", ms.active.iter().map(|i| i + 1).collect::<Vec<_>>())];
    if ms.is_empty() {
        summary.push("Λ is empty".into());
        return Ok(Outcome { status: "NO_MULTIPLIER", exit: EXIT_FAILS, summary, report });
    }
    summary.push(format!("extreme points: {}", fmt_rows(&ms.extreme)));
    let k = critical_cone(p, &p.y, y_star, None)?;
    report["critical_cone"] = k.to_json();
    if *y_star == p.y_star() {
        let u = multiplier_uniqueness(p)?;
        summary.push(format!("unique multiplier: {}", u.unique));
        report["uniqueness"] = u.to_json();
    }
    Ok(Outcome { status: "ANALYZED", exit: EXIT_OK, summary, report })
}

fn tangent_cone(p: &MpecProblem, y_star: &[Rational], v: &[Rational], v_star: Option<&[Rational]>) -> Result<Outcome, Failure> {
    let slice = graph_tangent_slice(p, &p.y, y_star, v)?;
    let mut report = json!({ "slice": slice.to_json() });
    let mut summary = vec![format!("v critical: {}", slice.critical), format!("cells: {}", slice.cells.len())];
    let (status, exit) = match v_star {
        None => ("COMPUTED", EXIT_OK),
        Some(vs) => {
            let m = graph_tangent_member(p, &p.y, y_star, v, vs)?;
            summary.push(format!("v* member: {}", m.member));
            report["membership"] = m.to_json();
            if m.member {
                ("MEMBER", EXIT_OK)
            } else {
                ("NOT_MEMBER", EXIT_FAILS)
            }
        }
    };
    Ok(Outcome { status, exit, summary, report })
}

fn certify(p: &MpecProblem, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let v = certify_mscq_mpec(p, &cfg.certify_options())?;
    let mut summary = vec![format!("method: {}", v.method)];
    for (name, pre) in &v.prerequisites {
        summary.push(format!("prerequisite {name}: {} ({})", pre.status, pre.method));
    }
    if let Some(s) = &v.scope {
        summary.push(format!("scope: {s}"));
    }
    if let Some(r) = &v.reason {
        summary.push(format!("reason: {r}"));
    }
    Ok(Outcome { status: v.status.as_str(), exit: status_exit(v.status), summary, report: v.to_json() })
}

fn diagnose(p: &MpecProblem, lambda: &[Rational], direction: Option<&[Rational]>, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let mut report = mpccdiag::diagnose(p, lambda)?;
    let mfcq = report["mpcc_mfcq"]["status"].as_str().unwrap_or("UNKNOWN").to_string();
    let licq = report["mpcc_licq"]["status"].as_str().unwrap_or("UNKNOWN").to_string();
    let branches = report["mpcc_mfcq"]["branches"].as_array().map_or(0, Vec::len);
    let mut summary = vec![format!("MPCC-MFCQ: {mfcq} ({branches} branch(es))"), format!("MPCC-LICQ: {licq}")];
    for key in ["W_stationarity", "M_stationarity"] {
        if let Some(f) = report[key]["feasible"].as_bool() {
            summary.push(format!("{key}: {}", if f { "feasible" } else { "infeasible" }));
        }
    }
    if let Some(d) = direction {
        let e = gcq_evidence(p, lambda, d, &gap_options(cfg))?;
        summary.push(format!("direction evidence: {}", e.tag));
        report["gcq_evidence"] = e.to_json();
    }
    let status = if mfcq == "HOLDS" { "HOLDS" } else { "FAILS" };
    Ok(Outcome { status, exit: if mfcq == "HOLDS" { EXIT_OK } else { EXIT_FAILS }, summary, report })
}

fn gap_options(cfg: &RunConfig) -> GcqOptions {
    GcqOptions { probe: cfg.probe_options(), threshold: cfg.gap_threshold, expected: None }
}

fn probe_exit(v: ProbeVerdict) -> i32 {
    match v {
        ProbeVerdict::RatioVanishes => EXIT_OK,
        ProbeVerdict::RatioBoundedAway => EXIT_FAILS,
        ProbeVerdict::Inconclusive => EXIT_UNKNOWN,
    }
}

fn ratio_lines(t: &[f64], ratio: &[f64]) -> Vec<String> {
    t.iter().zip(ratio).map(|(t, r)| format!("t = {t:e}: ratio = {r:.6e}")).collect()
}

fn fmt_rows(rows: &[Vec<Rational>]) -> String {
    rows.iter().map(|r| fmt_vec(r)).collect::<Vec<_>>().join(", ")
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    match cmd {
        Command::Validate(c) => Ok(validate(&load(&c.problem)?)),
        Command::Analyze { common, y_star } => {
            let p = load(&common.problem)?;
            let ys = y_star_or_default(&p, y_star)?;
            analyze(&p, &ys)
        }
        Command::TangentCone { common, y_star, v, v_star } => {
            let p = load(&common.problem)?;
            let ys = y_star_or_default(&p, y_star)?;
            let v = rationals("v", v)?;
            let vs = v_star.as_deref().map(|s| rationals("v-star", s)).transpose()?;
            tangent_cone(&p, &ys, &v, vs.as_deref())
        }
        Command::CertifyMscq(c) => certify(&load(&c.problem)?, cfg),
        Command::DiagnoseMpcc { common, lambda, direction } => {
            let p = load(&common.problem)?;
            let l = rationals("lambda", lambda)?;
            let d = direction.as_deref().map(|s| rationals("direction", s)).transpose()?;
            diagnose(&p, &l, d.as_deref(), cfg)
        }
        Command::Probe { common, y_star, v, v_star, lambda, direction } => {
            let p = load(&common.problem)?;
            match (v, v_star, lambda, direction) {
                (Some(v), Some(vs), None, None) => {
                    let ys = y_star_or_default(&p, y_star)?;
                    let v = to_f64_vec(&rationals("v", v)?);
                    let vs = to_f64_vec(&rationals("v-star", vs)?);
                    let r = tangent_ratio_probe(&p, &p.y, &ys, &v, &vs, &cfg.probe_options())?;
                    Ok(Outcome {
                        status: r.verdict.as_str(),
                        exit: probe_exit(r.verdict),
                        summary: ratio_lines(&r.t, &r.ratio),
                        report: serde_json::to_value(&r).expect("report serializes"),
                    })
                }
                (None, None, Some(l), Some(d)) => {
                    let l = rationals("lambda", l)?;
                    let d = rationals("direction", d)?;
                    let e = gcq_evidence(&p, &l, &d, &gap_options(cfg))?;
                    let exit = match e.tag {
                        "TANGENT_CONSISTENT" => EXIT_OK,
                        "GACQ_VIOLATION_EVIDENCE" => EXIT_FAILS,
                        _ => EXIT_UNKNOWN,
                    };
                    Ok(Outcome { status: e.tag, exit, summary: ratio_lines(&e.table.t, &e.table.ratio), report: e.to_json() })
                }
                _ => Err(Failure::Usage(
                    "probe needs either --v and --v-star, or --lambda and --direction".into(),
                    None,
                )),
            }
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Validate(c) | Command::CertifyMscq(c) => c,
        Command::Analyze { common, .. }
        | Command::TangentCone { common, .. }
        | Command::DiagnoseMpcc { common, .. }
        | Command::Probe { common, .. } => common,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Validate(_) => "validate",
        Command::Analyze { .. } => "analyze",
        Command::TangentCone { .. } => "tangent-cone",
        Command::CertifyMscq(_) => "certify-mscq",
        Command::DiagnoseMpcc { .. } => "diagnose-mpcc",
        Command::Probe { .. } => "probe",
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => {
            s.trim().parse().map(Some).map_err(|_| format!("{THREADS_ENV}: `{s}` is not a thread count"))
        }
        _ => Ok(None),
    }
}

fn resolve(cmd: &Command, threads: Option<usize>) -> RunConfig {
    let c = common(cmd);
    let lambda = match cmd {
        Command::DiagnoseMpcc { lambda, .. } => Some(lambda),
        Command::Probe { lambda, .. } => lambda.as_ref(),
        _ => None,
    };
    RunConfig {
        command: command_name(cmd).into(),
        problem: c.problem.clone(),
        lambda: lambda.map(|l| l.split(',').map(|s| s.trim().to_string()).collect()),
        depth: c.depth,
        budget: c.budget,
        seed: c.seed,
        threads,
        vanish_tol: c.vanish_tol,
        away_tol: c.away_tol,
        gap_threshold: c.gap_threshold,
        output: if c.json { "json" } else { "text" },
    }
}

fn write_text(out: &mut dyn Write, cfg: &RunConfig, o: &Outcome) -> std::io::Result<()> {
    writeln!(out, "{} {}: {}", cfg.command, cfg.problem.display(), o.status)?;
    for line in &o.summary {
        writeln!(out, "  {line}")?;
    }
    Ok(())
}

fn emit_error(out: &mut dyn Write, json: bool, cfg: Option<&RunConfig>, code: &str, msg: &str, exit: i32) -> i32 {
    let res = if json {
        let doc = json!({
            "config": cfg,
            "status": "ERROR",
            "exit_code": exit,
            "error": { "code": code, "message": msg },
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json serializes"))
    } else {
        writeln!(out, "error [{code}]: {msg}")
    };
    // a closed stdout is not worth a different exit code
    let _ = res;
    exit
}

/// Run the command line `argv` (including the program name), writing the
/// report to `out`; returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let wants_json = argv.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let msg = e.render().to_string();
            let msg = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string();
            return emit_error(out, wants_json, None, "USAGE", &msg, EXIT_USAGE);
        }
    };
    let c = common(&cli.command);
    let threads = match resolve_threads(c.threads) {
        Ok(t) => t,
        Err(msg) => return emit_error(out, c.json, None, "USAGE", &msg, EXIT_USAGE),
    };
    let cfg = resolve(&cli.command, threads);
    let json = c.json;
    let result = match threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into(), Some("USAGE"))),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &cfg)),
            Err(e) => Err(Failure::Usage(format!("thread pool: {e}"), Some("USAGE"))),
        },
        None => dispatch(&cli.command, &cfg),
    };
    match result {
        Ok(o) => {
            let res = if json {
                let doc = json!({
                    "config": cfg,
                    "status": o.status,
                    "exit_code": o.exit,
                    "report": o.report,
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json serializes"))
            } else {
                write_text(out, &cfg, &o)
            };
            let _ = res;
            o.exit
        }
        Err(Failure::Usage(msg, code)) => emit_error(out, json, Some(&cfg), code.unwrap_or("USAGE"), &msg, EXIT_USAGE),
        Err(Failure::Domain(e)) => emit_error(out, json, Some(&cfg), e.code(), &e.to_string(), domain_exit(&e)),
    }
}
