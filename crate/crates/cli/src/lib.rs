//! Argument parsing and command execution for the `grayson-lab` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use grayson_lab::lattice::{
    c_inf_with, c_sup_with, canonical_polygon_with, d_w_with, EnumConfig, Sublattice,
};
use grayson_lab::report::Report;
use grayson_lab::symspace::{normalize_det, InnerProduct};
use grayson_lab::verify::{self, SuiteParams};
use grayson_lab::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GRAYSON_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "grayson-lab",
    version,
    about = "Lattice filtrations, cover sets and flow-space checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonical polygon and filtration of a Gram matrix.
    Polygon {
        #[command(flatten)]
        input: GramArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// d_W, c_inf and c_sup for a Gram matrix and a sublattice.
    Dw {
        #[command(flatten)]
        input: GramArgs,
        /// Sublattice as an n×m matrix whose columns span it, a list of
        /// basis vectors, or {"ambient_dim", "basis"}; inline or a file path.
        #[arg(long)]
        sublattice: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cover-set suites: equivariance, chain condition, comparison,
    /// stabilizers, cusp heights.
    CoverVerify(SuiteArgs),
    /// Finite-difference check of the volume gradient and its norm.
    GradCheck(SuiteArgs),
    /// Flow law, flow-space distance bounds and longness.
    FlowVerify(SuiteArgs),
    /// Every suite, aggregated.
    Report(SuiteArgs),
}

#[derive(Debug, Args)]
struct GramArgs {
    /// Gram matrix as nested arrays or {"dim", "gram"}; inline or a file path.
    #[arg(long)]
    gram: String,
    /// Node budget for certified enumeration.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    enum_bound: Option<u64>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Ambient dimension for fixed-dimension suites.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..=4))]
    n: u64,
    /// Cover-set level (at least 1).
    #[arg(long, default_value_t = 1.0, value_parser = at_least_one)]
    t: f64,
    /// Neighbourhood radius for the comparison check.
    #[arg(long, default_value_t = 0.25, value_parser = positive)]
    alpha: f64,
    /// Flow-space neighbourhood radius for the longness check.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    delta: f64,
    /// Flow time for the longness check.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    tau: f64,
    /// Node budget for certified enumeration.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    enum_bound: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn at_least_one(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 1.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a number ≥ 1")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Cover,
    Gradient,
    Flow,
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Polygon {
        gram: InnerProduct,
    },
    Dw {
        gram: InnerProduct,
        sublattice: Sublattice,
    },
    Suites {
        kind: SuiteKind,
        params: SuiteParams,
    },
}

/// A validated invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub enumeration: EnumConfig,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match &self.task {
            Task::Polygon { .. } => "polygon",
            Task::Dw { .. } => "dw",
            Task::Suites {
                kind: SuiteKind::Cover,
                ..
            } => "cover-verify",
            Task::Suites {
                kind: SuiteKind::Gradient,
                ..
            } => "grad-check",
            Task::Suites {
                kind: SuiteKind::Flow,
                ..
            } => "flow-verify",
            Task::Suites {
                kind: SuiteKind::All,
                ..
            } => "report",
        }
    }
}

/// Failure to produce a result, with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Uncertified(_) => EXIT_UNCERTIFIED,
            Error::Internal(_) => EXIT_VIOLATION,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Inline JSON if it looks like JSON, otherwise the contents of a file.
fn load_json(arg: &str, what: &str) -> Result<Value, Failure> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        arg.to_owned()
    } else {
        fs::read_to_string(arg)
            .map_err(|e| Failure::input(format!("cannot read {what} file `{arg}`: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("malformed {what} JSON: {e}")))
}

pub fn parse_gram(v: &Value) -> Result<InnerProduct, Failure> {
    let rows = match v {
        Value::Object(o) => o
            .get("gram")
            .ok_or_else(|| Failure::input("gram object needs a \"gram\" field"))?,
        other => other,
    };
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows.clone())
        .map_err(|e| Failure::input(format!("gram must be an array of numeric rows: {e}")))?;
    Ok(InnerProduct::from_rows(&rows)?)
}

/// Accepts `{"ambient_dim", "basis"}`, an `n × m` matrix whose columns
/// span the sublattice, or a list of basis vectors of length `n`. A square
/// array is read as a matrix of columns.
pub fn parse_sublattice(v: &Value, n: usize) -> Result<Sublattice, Failure> {
    if v.is_object() {
        let w: Sublattice = serde_json::from_value(v.clone())
            .map_err(|e| Failure::input(format!("bad sublattice: {e}")))?;
        if w.ambient_dim() != n {
            return Err(Failure::input(format!(
                "sublattice lives in dimension {}, gram in {n}",
                w.ambient_dim()
            )));
        }
        return Ok(w);
    }
    let rows: Vec<Vec<i64>> = serde_json::from_value(v.clone())
        .map_err(|e| Failure::input(format!("sublattice must be integer rows: {e}")))?;
    let vectors =
        if rows.len() == n && rows.iter().all(|r| r.len() == rows[0].len()) && rows[0].len() <= n {
            (0..rows[0].len())
                .map(|j| rows.iter().map(|r| r[j]).collect())
                .collect()
        } else if rows.iter().all(|r| r.len() == n) {
            rows
        } else {
            return Err(Failure::input(format!(
                "sublattice shape does not match dimension {n}"
            )));
        };
    Ok(Sublattice::new(n, &vectors)?)
}

fn enum_config(bound: Option<u64>) -> EnumConfig {
    let mut cfg = EnumConfig::default();
    if let Some(b) = bound {
        cfg.max_nodes = usize::try_from(b).unwrap_or(usize::MAX);
    }
    cfg
}

/// Parses `argv` (without the program name). Usage errors carry clap's
/// exit code 2; malformed JSON also maps to 2.
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, ParseError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = std::iter::once(std::ffi::OsString::from("grayson-lab"))
        .chain(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(args).map_err(ParseError::Usage)?;
    let cfg = match cli.command {
        Command::Polygon { input, out } => RunConfig {
            task: Task::Polygon {
                gram: parse_gram(&load_json(&input.gram, "gram")?)?,
            },
            enumeration: enum_config(input.enum_bound),
            out: out.out,
        },
        Command::Dw {
            input,
            sublattice,
            out,
        } => {
            let gram = parse_gram(&load_json(&input.gram, "gram")?)?;
            let sublattice = parse_sublattice(&load_json(&sublattice, "sublattice")?, gram.dim())?;
            RunConfig {
                task: Task::Dw { gram, sublattice },
                enumeration: enum_config(input.enum_bound),
                out: out.out,
            }
        }
        Command::CoverVerify(a) => suites(SuiteKind::Cover, a),
        Command::GradCheck(a) => suites(SuiteKind::Gradient, a),
        Command::FlowVerify(a) => suites(SuiteKind::Flow, a),
        Command::Report(a) => suites(SuiteKind::All, a),
    };
    Ok(cfg)
}

fn suites(kind: SuiteKind, a: SuiteArgs) -> RunConfig {
    let enumeration = enum_config(a.enum_bound);
    let params = SuiteParams {
        seed: a.seed,
        samples: a.samples as usize,
        n: a.n as usize,
        t: a.t,
        alpha: a.alpha,
        delta: a.delta,
        tau: a.tau,
        enumeration,
    };
    RunConfig {
        task: Task::Suites { kind, params },
        enumeration,
        out: a.out.out,
    }
}

#[derive(Debug)]
pub enum ParseError {
    Usage(clap::Error),
    Input(Failure),
}

impl From<Failure> for ParseError {
    fn from(f: Failure) -> Self {
        ParseError::Input(f)
    }
}

impl ParseError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ParseError::Usage(e) => e.exit_code(),
            ParseError::Input(f) => f.code,
        }
    }
}

/// The `{"suites": [...]}` document.
pub fn emit_report(results: &[Report]) -> Value {
    json!({ "suites": results })
}

/// Exit code for a set of reports: any violation wins, then uncertified
/// samples, then success.
pub fn reports_exit_code(results: &[Report]) -> i32 {
    if results.iter().any(|r| !r.passed()) {
        EXIT_VIOLATION
    } else if results.iter().any(|r| r.uncertified > 0) {
        EXIT_UNCERTIFIED
    } else {
        EXIT_PASS
    }
}

fn run_suites(kind: SuiteKind, p: &SuiteParams) -> grayson_lab::Result<Vec<Report>> {
    let mut out = Vec::new();
    if matches!(kind, SuiteKind::Gradient | SuiteKind::All) {
        out.extend(verify::gradient_suites(p)?);
    }
    if kind == SuiteKind::All {
        out.extend(verify::lattice_suites(p)?);
    }
    if matches!(kind, SuiteKind::Cover | SuiteKind::All) {
        out.extend(verify::cover_suites(p)?);
    }
    if matches!(kind, SuiteKind::Flow | SuiteKind::All) {
        out.extend(verify::flow_suites(p)?);
    }
    Ok(out)
}

/// The artifacts produced by a run.
#[derive(Debug)]
pub struct Output {
    pub code: i32,
    pub json: Value,
    /// Plot points for `polygon`.
    pub csv: Option<String>,
}

pub fn run(cfg: &RunConfig) -> Result<Output, Failure> {
    match &cfg.task {
        Task::Polygon { gram } => {
            let poly = canonical_polygon_with(gram, &cfg.enumeration)?;
            let csv = poly.to_csv();
            let mut json = serde_json::to_value(&poly).map_err(|e| Failure {
                code: EXIT_VIOLATION,
                message: e.to_string(),
            })?;
            json["plot_csv"] = Value::from(csv.clone());
            Ok(Output {
                code: EXIT_PASS,
                json,
                csv: Some(csv),
            })
        }
        Task::Dw { gram, sublattice } => {
            let x = normalize_det(gram);
            let json = json!({
                "d_W": d_w_with(&x, sublattice, &cfg.enumeration)?,
                "c_inf": c_inf_with(gram, sublattice, &cfg.enumeration)?,
                "c_sup": c_sup_with(gram, sublattice, &cfg.enumeration)?,
            });
            Ok(Output {
                code: EXIT_PASS,
                json,
                csv: None,
            })
        }
        Task::Suites { kind, params } => {
            let reports = run_suites(*kind, params)?;
            Ok(Output {
                code: reports_exit_code(&reports),
                json: emit_report(&reports),
                csv: None,
            })
        }
    }
}

/// Serializes the output (pretty JSON with a trailing newline) to stdout or
/// to `--out`, plus `<out>.csv` for polygon plot points.
pub fn write_output(cfg: &RunConfig, output: &Output) -> Result<Option<String>, Failure> {
    let mut text =
        serde_json::to_string_pretty(&output.json).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    match &cfg.out {
        None => Ok(Some(text)),
        Some(path) => {
            write_file(path, &text)?;
            if let Some(csv) = &output.csv {
                let mut csv_path = path.clone().into_os_string();
                csv_path.push(".csv");
                write_file(Path::new(&csv_path), csv)?;
            }
            Ok(None)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::input(format!("cannot write `{}`: {e}", path.display())))
}

/// Applies [`THREADS_ENV`] to the global thread pool.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::input(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::input(e.to_string()))
}

/// Full program: parse, run, write. Returns the process exit code.
pub fn main_with_args<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(ParseError::Usage(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(ParseError::Input(f)) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let result = configure_threads()
        .and_then(|()| run(&cfg))
        .and_then(|out| write_output(&cfg, &out).map(|text| (out.code, text)));
    match result {
        Ok((code, text)) => {
            if let Some(text) = text {
                print!("{text}");
            }
            code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
