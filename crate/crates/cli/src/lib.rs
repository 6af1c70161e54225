//! Command line front end. Each command computes everything first and only
//! then writes its files, each one atomically, so a failed run leaves no
//! partial output.
//!
//! Exit codes: `0` success, `1` configuration, usage or output errors, `2`
//! numerical errors, `3` a verification check failed.

pub mod config;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use symtorus::hodge::{basis_norm, hodge_decompose};
use symtorus::hofer::{estimate_e_reports, PathAnsatz};
use symtorus::io::{self, FileSet};
use symtorus::metrics::{distance, isotopy_length, symp_norm, TimeMode};
use symtorus::verify::{cauchy_demo, run_check, verify_all, CheckReport, CHECK_NAMES, DERIVED_CLOSED_TOL};

pub use config::ScenarioConfig;

/// Environment variable naming the output directory when neither the flag
/// nor the scenario sets one.
pub const OUTPUT_ENV: &str = "SYMTORUS_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "symtorus-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
    #[error("numerical error: {0}")]
    Numerical(symtorus::Error),
    #[error("checks failed: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl From<symtorus::Error> for CliError {
    fn from(e: symtorus::Error) -> Self {
        match e {
            symtorus::Error::Io(io) => CliError::Output(io),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::ChecksFailed(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "symtorus", version, about = "Norms, lengths and Hofer-like distances of symplectic flows on the 2-torus")]
pub struct Cli {
    /// Scenario file (TOML). Built-in defaults when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the scenario and the environment.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hodge decomposition of a configured closed 1-form.
    Hodge {
        form: String,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Norm of a configured symplectic field at one time.
    Norm {
        path: String,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Integrates a configured path and writes the isotopy.
    Flow { path: String },
    /// Distance report between two configured paths, both time modes.
    Distance { a: String, b: String },
    /// Hofer-like energy estimate for the time-1 map of a configured path.
    Hofer { target: String },
    /// Runs one check, or all of them.
    Verify {
        #[arg(default_value = "all")]
        check: String,
    },
    /// Weierstrass ladder and the Cauchy diagnostics.
    CauchyDemo,
}

/// Everything a command produces, written only after it succeeded.
struct Output {
    name: String,
    report: Value,
    files: Vec<(PathBuf, FileSet)>,
    failed: Vec<String>,
}

impl Output {
    fn new(name: impl Into<String>, report: Value) -> Self {
        Self {
            name: name.into(),
            report,
            files: Vec::new(),
            failed: Vec::new(),
        }
    }
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Adds the `timestamp` field; every other byte depends only on the inputs.
fn stamped(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("timestamp".into(), json!(timestamp()));
    }
    v
}

pub fn output_dir(cli_flag: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    cli_flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// Runs a parsed command line; returns the report printed on stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    let out = execute(&cli.command, &cfg)?;
    let dir = output_dir(cli.output.as_deref(), &cfg);
    let report = stamped(out.report);
    for (sub, files) in &out.files {
        io::write_files(&dir.join(sub), files)?;
    }
    io::write_atomic(&dir.join(format!("{}.json", out.name)), &io::json_bytes(&report)?)?;
    if !out.failed.is_empty() {
        return Err(CliError::ChecksFailed(out.failed));
    }
    Ok(serde_json::to_string_pretty(&report).unwrap_or_default())
}

fn execute(cmd: &Command, cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let grid = cfg.grid_spec()?;
    let (n_t, substeps) = (cfg.time.n_t, cfg.time.substeps);
    match cmd {
        Command::Hodge { form, time } => {
            let ctx = cfg.norm_context()?;
            let theta = cfg.form(form)?.form(grid, *time)?;
            let split = hodge_decompose(&theta, ctx.metric(), ctx.basis())?;
            let tag = ctx.metric().tag().to_string();
            let report = json!({
                "command": "hodge",
                "form": form,
                "time": time,
                "lambda": split.lambda,
                "basis_norm": basis_norm(&split),
                "osc": split.osc(),
                "residual": split.residual,
                "metric_tag": tag,
                "basis_id": ctx.basis().id(),
            });
            let mut files = io::hodge_split_files(&split, &tag)?;
            files.extend(io::basis_files(ctx.basis())?);
            files.push(("potential.csv".into(), io::to_csv(&split.potential).into_bytes()));
            let mut out = Output::new(format!("hodge-{form}"), report);
            out.files.push((PathBuf::from("hodge").join(form), files));
            Ok(out)
        }
        Command::Norm { path, time } => {
            let ctx = cfg.norm_context()?;
            let x = cfg.path(path)?.field(grid, *time)?;
            let split = ctx.split(&x)?;
            let norm = symp_norm(&x, &ctx)?;
            Ok(Output::new(
                format!("norm-{path}"),
                json!({
                    "command": "norm",
                    "path": path,
                    "time": time,
                    "norm": norm,
                    "lambda": split.lambda,
                    "osc": split.osc(),
                    "metric_tag": ctx.metric().tag(),
                    "basis_id": ctx.basis().id(),
                }),
            ))
        }
        Command::Flow { path } => {
            let ctx = cfg.norm_context()?;
            let iso = cfg.path(path)?.isotopy(grid, n_t, substeps)?;
            let report = json!({
                "command": "flow",
                "path": path,
                "n_t": n_t,
                "substeps": substeps,
                "consistency_residual": iso.consistency_residual(),
                "consistency_bound": iso.consistency_bound(),
                "area_defect": iso.area_defect(),
                "length": isotopy_length(&iso, &ctx)?,
            });
            let mut out = Output::new(format!("flow-{path}"), report);
            out.files.push((PathBuf::from("flow").join(path), io::isotopy_files(&iso)?));
            Ok(out)
        }
        Command::Distance { a, b } => {
            let ctx = cfg.norm_context()?.with_closed_tol(DERIVED_CLOSED_TOL);
            let phi = cfg.path(a)?.isotopy(grid, n_t, substeps)?;
            let psi = cfg.path(b)?.isotopy(grid, n_t, substeps)?;
            let l1 = distance(&phi, &psi, &ctx, TimeMode::L1)?;
            let sup = distance(&phi, &psi, &ctx, TimeMode::Sup)?;
            Ok(Output::new(
                format!("distance-{a}-{b}"),
                json!({
                    "command": "distance",
                    "a": a,
                    "b": b,
                    "total": l1.total,
                    "l1": l1,
                    "sup": sup,
                }),
            ))
        }
        Command::Hofer { target } => {
            let ctx = cfg.norm_context()?;
            let expr = cfg.path(target)?;
            let map = expr.isotopy(grid, n_t, substeps)?.endpoint();
            let hamiltonian = expr.a.terms.is_empty() && expr.b.terms.is_empty();
            let (seed, hofer_length) = if hamiltonian {
                let h = expr.h.series(grid, n_t)?;
                (
                    PathAnsatz::from_hamiltonian(&h, cfg.hofer.n_harm_t, cfg.hofer.n_harm_xy)?,
                    Some(symtorus::metrics::hofer_length(&h)),
                )
            } else {
                (cfg.ansatz(), None)
            };
            let mut opt = cfg.hofer.opt.clone();
            opt.seed = cfg.seed;
            let (e, fwd, inv) = estimate_e_reports(&map, &seed, &ctx, &opt)?;
            Ok(Output::new(
                format!("hofer-{target}"),
                json!({
                    "command": "hofer",
                    "target": target,
                    "e": e,
                    "hofer_length": hofer_length,
                    "forward": fwd,
                    "inverse": inv,
                }),
            ))
        }
        Command::Verify { check } => {
            let vcfg = cfg.verify_config()?;
            let reports: Vec<CheckReport> = if check == "all" {
                verify_all(&vcfg)?
            } else if CHECK_NAMES.contains(&check.as_str()) {
                vec![run_check(check, &vcfg)?]
            } else {
                return Err(CliError::Config(format!("unknown check {check:?}; expected all or one of {CHECK_NAMES:?}")));
            };
            let mut files = FileSet::new();
            for r in &reports {
                let v = stamped(serde_json::to_value(r).map_err(symtorus::Error::from)?);
                files.push((format!("{}.json", r.name), io::json_bytes(&v)?));
            }
            let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect();
            let summary: Vec<Value> = reports
                .iter()
                .map(|r| json!({"name": r.name, "pass": r.pass, "failures": r.failures()}))
                .collect();
            let mut out = Output::new(
                format!("verify-{check}"),
                json!({
                    "command": "verify",
                    "check": check,
                    "seed": vcfg.seed,
                    "pass": failed.is_empty(),
                    "checks": summary,
                }),
            );
            out.files.push((PathBuf::from("verify"), files));
            out.failed = failed;
            Ok(out)
        }
        Command::CauchyDemo => {
            let ctx = cfg.norm_context()?;
            let rep = cauchy_demo(cfg.weierstrass()?, grid, n_t, substeps, &ctx)?;
            let csv = rep.ladder_csv();
            let mut report = serde_json::to_value(&rep).map_err(symtorus::Error::from)?;
            if let Value::Object(m) = &mut report {
                m.insert("command".into(), json!("cauchy-demo"));
            }
            let mut out = Output::new("cauchy-demo", report);
            out.files.push((PathBuf::from("cauchy"), vec![("ladder.csv".into(), csv.into_bytes())]));
            Ok(out)
        }
    }
}
