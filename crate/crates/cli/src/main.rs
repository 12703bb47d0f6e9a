mod commands;
mod input;
mod selftest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use shilov_core::envelope::ScanOrder;
use shilov_core::unitize::{UnitChoice, DEFAULT_DELTA, DEFAULT_EPS};

use commands::{ConeArgs, ConeKind, EnvelopeArgs, Failure, Outcome};
use input::{ElementFile, SpaceFile};

#[derive(Parser)]
#[command(name = "shilov", version, about = "C*-envelopes, Shilov boundaries and unitizations of operator spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Space file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Write the JSON report here; the summary then goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Envelope,
    Ambient,
}

impl From<Unit> for UnitChoice {
    fn from(u: Unit) -> Self {
        match u {
            Unit::Envelope => UnitChoice::EnvelopeUnit,
            Unit::Ambient => UnitChoice::AmbientIdentity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scan {
    Descending,
    Ascending,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    X1,
    Xplus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the C*-envelope by loose-block elimination.
    Envelope {
        #[command(flatten)]
        common: Common,
        /// Highest matrix level for the embedding certificate.
        #[arg(long, default_value_t = 4)]
        max_level: usize,
        /// Random samples per level for the embedding certificate.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_enum, default_value = "descending")]
        scan: Scan,
    },
    /// Build X¹ and report distance, domination and its envelope.
    Unitize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "envelope")]
        unit: Unit,
    },
    /// Decide membership of an element in the X¹ or X⁺ cone.
    Cone {
        #[command(flatten)]
        common: Common,
        /// Element file (JSON).
        #[arg(long)]
        element: PathBuf,
        #[arg(long, value_enum, default_value = "xplus")]
        kind: Kind,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS.to_vec())]
        eps: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Distance from X to the unit and the dominating-element test.
    Distance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "envelope")]
        unit: Unit,
    },
    /// Shilov boundary of a function space on a finite set.
    Boundary {
        #[command(flatten)]
        common: Common,
        /// Also run the diagonal matrix pipeline and compare.
        #[arg(long)]
        crosscheck: bool,
    },
    /// Run the property suites and print a pass/fail matrix.
    Selftest {
        #[arg(long, value_enum, default_value = "quick")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    report_version: &'static str,
    command: &'a str,
    input: &'a SpaceFile,
    input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    element: Option<&'a ElementFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    element_sha256: Option<String>,
    options: Value,
    status: &'a str,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<f64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn write_out(path: Option<&Path>, text: &str, summary: &str) -> Result<(), String> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?;
            println!("{summary}");
        }
        None => {
            eprintln!("{summary}");
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

struct Inputs {
    space: SpaceFile,
    space_bytes: Vec<u8>,
    element: Option<(ElementFile, Vec<u8>)>,
}

fn run(name: &str, common: &Common, inputs: Inputs, options: Value, f: impl FnOnce(&Inputs) -> Result<Outcome, Failure>) -> ExitCode {
    let start = Instant::now();
    let outcome = f(&inputs);
    let timing_ms = common.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let (status, code, message, result, summary) = match &outcome {
        Ok(o) => (o.status, o.exit_code, None, o.result.clone(), o.summary.clone()),
        Err(Failure::Input(m)) => return fail(m),
        Err(e) => (e.status(), e.exit_code(), Some(e.message()), Value::Null, format!("{}: {}", e.status(), e.message())),
    };
    let report = Report {
        tool: "shilov",
        report_version: "1",
        command: name,
        input: &inputs.space,
        input_sha256: sha256_hex(&inputs.space_bytes),
        element: inputs.element.as_ref().map(|(e, _)| e),
        element_sha256: inputs.element.as_ref().map(|(_, b)| sha256_hex(b)),
        options,
        status,
        exit_code: code,
        message,
        result,
        timing_ms,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    if let Err(e) = write_out(common.out.as_deref(), &text, &summary) {
        return fail(e);
    }
    ExitCode::from(code as u8)
}

fn load(common: &Common, element: Option<&Path>) -> Result<Inputs, ExitCode> {
    let (space, space_bytes) = SpaceFile::read(&common.input).map_err(|e| fail(format!("{}: {e}", common.input.display())))?;
    let element = match element {
        Some(p) => Some(ElementFile::read(p).map_err(|e| fail(format!("{}: {e}", p.display())))?),
        None => None,
    };
    Ok(Inputs { space, space_bytes, element })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Envelope { common, max_level, samples, scan } => {
            let scan = match scan {
                Scan::Descending => ScanOrder::DescendingRank,
                Scan::Ascending => ScanOrder::AscendingRank,
            };
            let inputs = match load(&common, None) {
                Ok(i) => i,
                Err(c) => return c,
            };
            let args = EnvelopeArgs { tol: common.tol, seed: common.seed, scan, max_level, samples };
            let options = json!({ "tol": common.tol, "seed": common.seed, "scan": scan, "max_level": max_level, "samples": samples });
            run("envelope", &common, inputs, options, |i| commands::envelope(&i.space, &args))
        }
        Command::Unitize { common, unit } => {
            let inputs = match load(&common, None) {
                Ok(i) => i,
                Err(c) => return c,
            };
            let u = UnitChoice::from(unit);
            let options = json!({ "tol": common.tol, "seed": common.seed, "unit": commands::unit_name(u) });
            run("unitize", &common, inputs, options, |i| commands::unitize(&i.space, common.tol, common.seed, u))
        }
        Command::Distance { common, unit } => {
            let inputs = match load(&common, None) {
                Ok(i) => i,
                Err(c) => return c,
            };
            let u = UnitChoice::from(unit);
            let options = json!({ "tol": common.tol, "seed": common.seed, "unit": commands::unit_name(u) });
            run("distance", &common, inputs, options, |i| commands::distance(&i.space, common.tol, common.seed, u))
        }
        Command::Cone { common, element, kind, eps, delta } => {
            let inputs = match load(&common, Some(&element)) {
                Ok(i) => i,
                Err(c) => return c,
            };
            let (kind, kind_name) = match kind {
                Kind::X1 => (ConeKind::X1, "x1"),
                Kind::Xplus => (ConeKind::XPlus, "xplus"),
            };
            let options = json!({ "tol": common.tol, "seed": common.seed, "kind": kind_name, "eps": eps, "delta": delta });
            let args = ConeArgs { tol: common.tol, seed: common.seed, kind, eps: &eps, delta };
            run("cone", &common, inputs, options, |i| {
                let (e, _) = i.element.as_ref().expect("element loaded");
                commands::cone(&i.space, e, &args)
            })
        }
        Command::Boundary { common, crosscheck } => {
            let inputs = match load(&common, None) {
                Ok(i) => i,
                Err(c) => return c,
            };
            let options = json!({ "seed": common.seed, "crosscheck": crosscheck });
            run("boundary", &common, inputs, options, |i| commands::boundary_cmd(&i.space, common.seed, crosscheck))
        }
        Command::Selftest { suite, seed, tol, jobs, timing } => {
            let full = matches!(suite, Suite::Full);
            let cfg = selftest::Config { full, seed, tol, jobs: jobs.max(1) };
            let start = Instant::now();
            let rows = selftest::run_all(&cfg);
            let all_pass = selftest::print_matrix(&rows);
            if timing {
                println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
            }
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
