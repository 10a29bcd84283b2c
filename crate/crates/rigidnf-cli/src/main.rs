//! Command-line pipeline for rigid-germ normal forms.
//!
//! Subcommands: `check` (rigidity + contraction + block structure),
//! `resonances`, `normalize`, `classify`. Reports are deterministic for
//! identical inputs and options; timings are included only on request so
//! that equal runs produce byte-identical output.

use std::io::Read;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use rigidnf::classify3d::{classify, ClassifyError};
use rigidnf::config::{CoeffMode, Tolerances};
use rigidnf::germ::{detect_blocks, is_contracting, rigidity_check, jordan_split};
use rigidnf::lang::GermFile;
use rigidnf::multiseries::{Cf64, Coeff, GaussRational};
use rigidnf::normalizer::{
    normalize_full, NormalizeError, PassOptions, PassSelector, SolverError,
};
use rigidnf::report::{
    BlocksRecord, ClassifyRecord, ContractionRecord, NormalizeRecord, RigidityRecord,
};
use rigidnf::resonance::resonance_report;

#[derive(Parser)]
#[command(name = "rigidnf", version, about = "Normal forms for contracting rigid germs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rigidity certificate, contraction test and block structure.
    Check(CommonArgs),
    /// Primary and secondary resonances of a prepared germ.
    Resonances(CommonArgs),
    /// Run the conjugation passes and report the certificate.
    Normalize(NormalizeArgs),
    /// Normalize and match against the dimension-3 table.
    Classify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Germ description file (TOML); `-` reads stdin.
    file: String,
    /// Override the truncation degree.
    #[arg(long)]
    degree: Option<u32>,
    /// Override the coefficient mode.
    #[arg(long)]
    mode: Option<ModeArg>,
    #[arg(long)]
    tol_coeff: Option<f64>,
    #[arg(long)]
    tol_res: Option<f64>,
    #[arg(long)]
    tol_eig: Option<f64>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_series: Option<f64>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    /// Include wall-clock timings (breaks byte-identical reports).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Run the pipeline up to this pass.
    #[arg(long = "pass", value_enum, default_value_t = PassArg::All)]
    pass: PassArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum PassArg {
    Linear,
    Jordan,
    Primary,
    Secondary,
    Affine,
    All,
}

impl From<PassArg> for PassSelector {
    fn from(p: PassArg) -> Self {
        match p {
            PassArg::Linear => PassSelector::Linear,
            PassArg::Jordan => PassSelector::Jordan,
            PassArg::Primary => PassSelector::Primary,
            PassArg::Secondary => PassSelector::Secondary,
            PassArg::Affine => PassSelector::Affine,
            PassArg::All => PassSelector::All,
        }
    }
}

/// Exit codes: 0 ok, 2 parse, 3 not-rigid, 4 not-contracting,
/// 5 non-injective-action, 6 solver, 7 unresolved-class.
#[derive(Clone, Copy, PartialEq, Debug)]
enum Reason {
    Ok,
    Parse,
    NotRigid,
    NotContracting,
    NonInjectiveAction,
    Solver,
    UnresolvedClass,
}

impl Reason {
    fn code(self) -> u8 {
        match self {
            Reason::Ok => 0,
            Reason::Parse => 2,
            Reason::NotRigid => 3,
            Reason::NotContracting => 4,
            Reason::NonInjectiveAction => 5,
            Reason::Solver => 6,
            Reason::UnresolvedClass => 7,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::Parse => "parse",
            Reason::NotRigid => "not-rigid",
            Reason::NotContracting => "not-contracting",
            Reason::NonInjectiveAction => "non-injective-action",
            Reason::Solver => "solver",
            Reason::UnresolvedClass => "unresolved-class",
        }
    }
}

fn reason_of(err: &NormalizeError) -> Reason {
    match err {
        NormalizeError::Rigidity(_) => Reason::NotRigid,
        NormalizeError::NotContracting(_) | NormalizeError::Contraction(_) => {
            Reason::NotContracting
        }
        NormalizeError::NonInjective => Reason::NonInjectiveAction,
        _ => Reason::Solver,
    }
}

#[derive(Serialize)]
struct Report {
    command: String,
    input_digest: String,
    options: ReportOptions,
    outcome: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct ReportOptions {
    mode: CoeffMode,
    degree: u32,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, pass, command) = match &cli.command {
        Command::Check(c) => (c, PassSelector::All, "check"),
        Command::Resonances(c) => (c, PassSelector::All, "resonances"),
        Command::Normalize(n) => (&n.common, n.pass.into(), "normalize"),
        Command::Classify(c) => (c, PassSelector::All, "classify"),
    };
    let started = Instant::now();
    let doc = match read_input(&common.file) {
        Ok(d) => d,
        Err(msg) => return fail(Reason::Parse, &msg),
    };
    let digest = format!("sha256:{:x}", Sha256::digest(doc.as_bytes()));
    let mut gf = match GermFile::parse(&doc) {
        Ok(gf) => gf,
        Err(e) => return fail(Reason::Parse, &e.to_string()),
    };
    if let Some(deg) = common.degree {
        gf.trunc = deg;
    }
    if let Some(mode) = common.mode {
        gf.mode = match mode {
            ModeArg::Exact => CoeffMode::Exact,
            ModeArg::Float => CoeffMode::Float,
        };
    }
    for (slot, val) in [
        (&mut gf.tolerances.coeff, common.tol_coeff),
        (&mut gf.tolerances.res, common.tol_res),
        (&mut gf.tolerances.eig, common.tol_eig),
        (&mut gf.tolerances.residual, common.tol_residual),
        (&mut gf.tolerances.series, common.tol_series),
    ] {
        if let Some(v) = val {
            *slot = v;
        }
    }
    let parse_ms = started.elapsed().as_secs_f64() * 1e3;
    match gf.mode {
        CoeffMode::Float => run_typed::<Cf64>(&gf, command, pass, common, digest, parse_ms),
        CoeffMode::Exact => {
            run_typed::<GaussRational>(&gf, command, pass, common, digest, parse_ms)
        }
    }
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
    }
}

fn run_typed<C: Coeff>(
    gf: &GermFile,
    command: &str,
    pass: PassSelector,
    common: &CommonArgs,
    digest: String,
    parse_ms: f64,
) -> ExitCode {
    let germ = match gf.build::<C>() {
        Ok(g) => g,
        Err(e) => return fail(Reason::Parse, &e.to_string()),
    };
    let t0 = Instant::now();
    let opts = PassOptions::default();
    let vars = &gf.variables;
    let (outcome, reason): (serde_json::Value, Reason) = match command {
        "check" => match check_outcome(&germ) {
            Ok(v) => (v, Reason::Ok),
            Err((v, r)) => (v, r),
        },
        "resonances" => match resonances_outcome(&germ, gf) {
            Ok(v) => (v, Reason::Ok),
            Err((v, r)) => (v, r),
        },
        "normalize" => match normalize_full(&germ, Some(&gf.declared), &opts, pass) {
            Ok(run) => (
                serde_json::json!({
                    "kind": "certificate",
                    "normalize": NormalizeRecord::new(&run, vars),
                }),
                Reason::Ok,
            ),
            Err(e) => (error_value(reason_of(&e), &e.to_string()), reason_of(&e)),
        },
        "classify" => match normalize_full(&germ, Some(&gf.declared), &opts, pass) {
            Ok(run) => match classify(&run) {
                Ok(row) => {
                    let reason = if row.resolved { Reason::Ok } else { Reason::UnresolvedClass };
                    (
                        serde_json::json!({
                            "kind": "class",
                            "classify": ClassifyRecord {
                                normalize: NormalizeRecord::new(&run, vars),
                                class: row,
                            },
                        }),
                        reason,
                    )
                }
                Err(e @ ClassifyError::WrongDimension(_)) => {
                    (error_value(Reason::Parse, &e.to_string()), Reason::Parse)
                }
                Err(e) => (error_value(Reason::Solver, &e.to_string()), Reason::Solver),
            },
            Err(e) => (error_value(reason_of(&e), &e.to_string()), reason_of(&e)),
        },
        _ => unreachable!(),
    };
    let pipeline_ms = t0.elapsed().as_secs_f64() * 1e3;
    let report = Report {
        command: command.into(),
        input_digest: digest,
        options: ReportOptions {
            mode: gf.mode,
            degree: gf.trunc,
            tolerances: gf.tolerances,
            pass: match command {
                "normalize" => Some(pass_name(pass)),
                _ => None,
            },
        },
        outcome,
        timings_ms: common.timings.then(|| {
            serde_json::json!({ "parse": parse_ms, "pipeline": pipeline_ms })
        }),
    };
    emit(&report, common.report);
    if reason == Reason::Ok {
        ExitCode::SUCCESS
    } else {
        let msg = report
            .outcome
            .get("message")
            .and_then(|m| m.as_str())
            .unwrap_or(reason.name())
            .to_string();
        eprintln!("{}: {}", reason.name(), msg.replace('\n', " "));
        ExitCode::from(reason.code())
    }
}

fn pass_name(p: PassSelector) -> String {
    match p {
        PassSelector::Linear => "linear",
        PassSelector::Jordan => "jordan",
        PassSelector::Primary => "primary",
        PassSelector::Secondary => "secondary",
        PassSelector::Affine => "affine",
        PassSelector::All => "all",
    }
    .into()
}

fn error_value(reason: Reason, message: &str) -> serde_json::Value {
    serde_json::json!({
        "kind": "error",
        "reason": reason.name(),
        "exit_code": reason.code(),
        "message": message,
    })
}

type Outcome = Result<serde_json::Value, (serde_json::Value, Reason)>;

fn check_outcome<C: Coeff>(germ: &rigidnf::GermMap<C>) -> Outcome {
    let cert = rigidity_check(germ)
        .map_err(|e| (error_value(Reason::NotRigid, &e.to_string()), Reason::NotRigid))?;
    let contraction = is_contracting(germ).map_err(|e| {
        (error_value(Reason::NotContracting, &e.to_string()), Reason::NotContracting)
    })?;
    if !contraction.contracting {
        let msg = format!("spectral radius {}", contraction.spectral_radius);
        return Err((error_value(Reason::NotContracting, &msg), Reason::NotContracting));
    }
    let (_, blocks) = detect_blocks(germ, &cert).map_err(|e| {
        let reason = match e {
            rigidnf::germ::BlockError::NonInjectiveAction => Reason::NonInjectiveAction,
            _ => Reason::Solver,
        };
        (error_value(reason, &e.to_string()), reason)
    })?;
    Ok(serde_json::json!({
        "kind": "check",
        "rigidity": RigidityRecord::new(&cert),
        "contraction": ContractionRecord::new(&contraction),
        "blocks": BlocksRecord::new(&blocks),
    }))
}

fn resonances_outcome<C: Coeff>(germ: &rigidnf::GermMap<C>, gf: &GermFile) -> Outcome {
    let cert = rigidity_check(germ)
        .map_err(|e| (error_value(Reason::NotRigid, &e.to_string()), Reason::NotRigid))?;
    let contraction = is_contracting(germ).map_err(|e| {
        (error_value(Reason::NotContracting, &e.to_string()), Reason::NotContracting)
    })?;
    if !contraction.contracting {
        let msg = format!("spectral radius {}", contraction.spectral_radius);
        return Err((error_value(Reason::NotContracting, &msg), Reason::NotContracting));
    }
    let (g, blocks) = detect_blocks(germ, &cert).map_err(|e| {
        let reason = match e {
            rigidnf::germ::BlockError::NonInjectiveAction => Reason::NonInjectiveAction,
            _ => Reason::Solver,
        };
        (error_value(reason, &e.to_string()), reason)
    })?;
    let (_, blocks, _) = jordan_split(&g, &blocks)
        .map_err(|e| (error_value(Reason::Solver, &e.to_string()), Reason::Solver))?;
    let declared = if gf.declared.is_empty() { None } else { Some(&gf.declared) };
    let report = resonance_report(&blocks, declared, gf.tolerances.res)
        .map_err(|e| (error_value(Reason::Solver, &e.to_string()), Reason::Solver))?;
    Ok(serde_json::json!({
        "kind": "resonances",
        "blocks": BlocksRecord::new(&blocks),
        "resonances": report,
    }))
}

fn emit(report: &Report, format: ReportFormat) {
    match format {
        ReportFormat::Json => {
            println!("{}", serde_json::to_string_pretty(report).expect("serializable"))
        }
        ReportFormat::Text => {
            let value = serde_json::to_value(report).expect("serializable");
            let mut out = String::new();
            render_text(&value, 0, &mut out);
            print!("{out}");
        }
    }
}

fn render_text(v: &serde_json::Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                match val {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_text(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", scalar_text(val))),
                }
            }
        }
        serde_json::Value::Array(items) => {
            if items.is_empty() {
                out.push_str(&format!("{pad}(none)\n"));
            }
            for item in items {
                match item {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {}\n", scalar_text(item))),
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar_text(other))),
    }
}

fn scalar_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn fail(reason: Reason, message: &str) -> ExitCode {
    let report = Report {
        command: String::new(),
        input_digest: String::new(),
        options: ReportOptions {
            mode: CoeffMode::Float,
            degree: 0,
            tolerances: Tolerances::default(),
            pass: None,
        },
        outcome: error_value(reason, message),
        timings_ms: None,
    };
    // Parse-stage failures still produce a structured report on stdout and
    // a single-line reason on stderr.
    emit(&report, ReportFormat::Json);
    eprintln!("{}: {}", reason.name(), message.replace('\n', " "));
    ExitCode::from(reason.code())
}

// Suppress a false "unused" warning: SolverError appears in error paths only.
#[allow(dead_code)]
fn _solver_error_is_used(e: SolverError) -> String {
    e.to_string()
}
