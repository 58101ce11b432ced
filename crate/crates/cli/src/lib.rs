//! Command-line front end: argument parsing, document I/O and exit codes.

pub mod corpus;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use qtwist_core::json::{self, parse};
use qtwist_core::lattice::{exact_analyze, render};
use qtwist_core::testkit::selftest;
use qtwist_core::{
    align, certificate_conjugator, classify, dual_data, equivalent, hom_dimension_formula, hom_dimension_measured,
    sum_data, synthesize, tensor_data, Complex, EPoint, EllipticInvariant, Error, InvariantEntry,
    LaurentMatrix, ModulusConfig, Result, ToleranceConfig,
};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Numeric,
    Exact,
}

#[derive(Debug, Parser)]
#[command(name = "qtwist", version, about = "Classify integral twisted conjugacy classes of matrix loops")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0.3, allow_negative_numbers = true)]
    pub tau_re: f64,
    #[arg(long, global = true, default_value_t = 1.1)]
    pub tau_im: f64,
    #[arg(long, global = true)]
    pub eps_eig: Option<f64>,
    #[arg(long, global = true)]
    pub eps_rank: Option<f64>,
    #[arg(long, global = true)]
    pub eps_res: Option<f64>,
    #[arg(long, global = true)]
    pub dmax: Option<u32>,
    #[arg(long, global = true)]
    pub lmax: Option<u32>,
    #[arg(long, global = true)]
    pub trunc: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Numeric)]
    pub mode: Mode,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: u32,
    /// Write the result document here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aligned normal form and conjugator of a loop.
    Align { input: PathBuf },
    /// Elliptic invariant of a loop (or of symbolic eigenvalues in exact mode).
    Classify { input: PathBuf },
    /// Decide equivalence and search for a certificate conjugator.
    Equiv { a: PathBuf, b: PathBuf },
    /// Intertwiner dimension, measured and from the invariants.
    Homdim { a: PathBuf, b: PathBuf },
    /// Constant loop realizing an invariant.
    Synth { input: PathBuf },
    /// Tensor product of invariants.
    Tensor {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
    },
    /// Dual of an invariant.
    Dual { input: PathBuf },
    /// Direct sum of invariants.
    Sum {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
    },
    /// Randomized ground-truth equivalence checks, one JSON line per trial.
    Selftest,
}

/// Resolved configuration for one invocation.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub cfg: ModulusConfig,
    pub tol: ToleranceConfig,
    pub mode: Mode,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub trials: u32,
}

impl JobConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let cfg = ModulusConfig::new(Complex::new(cli.tau_re, cli.tau_im))?;
        let d = ToleranceConfig::default();
        let tol = ToleranceConfig {
            eps_eig: cli.eps_eig.unwrap_or(d.eps_eig),
            eps_rank: cli.eps_rank.unwrap_or(d.eps_rank),
            eps_res: cli.eps_res.unwrap_or(d.eps_res),
            d_max: cli.dmax.unwrap_or(d.d_max),
            l_max: cli.lmax.unwrap_or(d.l_max),
            trunc: cli.trunc.unwrap_or(d.trunc),
        };
        tol.validate()?;
        let inputs = match &cli.command {
            Command::Align { input }
            | Command::Classify { input }
            | Command::Synth { input }
            | Command::Dual { input } => vec![input.clone()],
            Command::Equiv { a, b } | Command::Homdim { a, b } => vec![a.clone(), b.clone()],
            Command::Tensor { inputs } | Command::Sum { inputs } => inputs.clone(),
            Command::Selftest => Vec::new(),
        };
        if cli.mode == Mode::Exact && !matches!(cli.command, Command::Classify { .. }) {
            return Err(Error::InvalidConfig("exact mode is only available for classify".into()));
        }
        Ok(Self {
            cfg,
            tol,
            mode: cli.mode,
            inputs,
            output: cli.output.clone(),
            seed: cli.seed,
            trials: cli.trials,
        })
    }
}

/// What a run produced: the text for each stream and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn read_doc(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn read_loop(path: &Path, job: &JobConfig) -> Result<LaurentMatrix> {
    json::loop_from_json(&read_doc(path)?, &job.cfg)
}

fn read_invariant(path: &Path, job: &JobConfig) -> Result<EllipticInvariant> {
    json::invariant_from_json(&read_doc(path)?, &job.cfg)
}

fn with_tau(mut v: Value, cfg: &ModulusConfig) -> Value {
    v["tau"] = json!([cfg.tau().re, cfg.tau().im]);
    v
}

/// Twisted conjugation check of a candidate certificate on the common window.
fn certificate_holds(g: &LaurentMatrix, a: &LaurentMatrix, b: &LaurentMatrix, job: &JobConfig) -> Result<bool> {
    let hi = a.window().1.min(b.window().1);
    let got = LaurentMatrix::twisted_conjugate(&g.with_known_top(hi), &a.with_known_top(hi), &job.cfg)?;
    let scale = a.scale().max(b.scale()).max(1.0);
    Ok(got.max_diff(&b.with_known_top(hi))? <= job.tol.eps_eig * scale)
}

fn classify_exact(path: &Path, job: &JobConfig) -> Result<Value> {
    let eigs = json::exact_eigens_from_json(&read_doc(path)?)?;
    let er = exact_analyze(&eigs)?;
    let entries = render(&eigs, &job.cfg)
        .into_iter()
        .map(|v| InvariantEntry { point: EPoint::from_value(v, &job.cfg), size: 1 })
        .collect();
    let inv = EllipticInvariant::new(entries)?;
    let mut doc = json::invariant_to_json(&inv, &job.cfg);
    doc["exact"] = json::exact_resonance_to_json(&er);
    Ok(doc)
}

fn document(cmd: &Command, job: &JobConfig) -> Result<Value> {
    let (cfg, tol) = (&job.cfg, &job.tol);
    match cmd {
        Command::Align { input } => {
            let a = read_loop(input, job)?;
            let (af, conj) = align(&a, cfg, tol)?;
            Ok(json::aligned_to_json(&af, &conj, cfg))
        }
        Command::Classify { input } => match job.mode {
            Mode::Exact => Ok(classify_exact(input, job)?),
            Mode::Numeric => Ok(json::invariant_to_json(&classify(&read_loop(input, job)?, cfg, tol)?, cfg)),
        },
        Command::Equiv { a, b } => {
            let (la, lb) = (read_loop(a, job)?, read_loop(b, job)?);
            let eq = equivalent(&la, &lb, cfg, tol)?;
            let mut cert = Value::Null;
            if eq {
                if let Some(g) = certificate_conjugator(&la, &lb, cfg, tol)? {
                    if certificate_holds(&g, &la, &lb, job)? {
                        cert = json::loop_to_json(&g, cfg);
                    }
                }
            }
            Ok(with_tau(json!({ "equivalent": eq, "certificate": cert }), cfg))
        }
        Command::Homdim { a, b } => {
            let (la, lb) = (read_loop(a, job)?, read_loop(b, job)?);
            let formula = hom_dimension_formula(&classify(&la, cfg, tol)?, &classify(&lb, cfg, tol)?, tol.eps_res);
            let measured = hom_dimension_measured(&la, &lb, cfg, tol)?;
            Ok(with_tau(json!({ "measured": measured, "formula": formula }), cfg))
        }
        Command::Synth { input } => Ok(json::loop_to_json(&synthesize(&read_invariant(input, job)?, cfg, tol.trunc)?, cfg)),
        Command::Tensor { inputs } | Command::Sum { inputs } => {
            let op = if matches!(cmd, Command::Tensor { .. }) { tensor_data } else { sum_data };
            let mut acc = read_invariant(&inputs[0], job)?;
            for p in &inputs[1..] {
                acc = op(&acc, &read_invariant(p, job)?);
            }
            Ok(json::invariant_to_json(&acc, cfg))
        }
        Command::Dual { input } => Ok(json::invariant_to_json(&dual_data(&read_invariant(input, job)?), cfg)),
        Command::Selftest => unreachable!("selftest writes records, not documents"),
    }
}

/// Output text and exit code of a parsed command.
fn execute(cmd: &Command, job: &JobConfig) -> Result<(String, i32)> {
    if let Command::Selftest = cmd {
        let records = selftest(job.seed, job.trials, &job.cfg, &job.tol);
        let code = if records.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_FAILED };
        let text = records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect();
        return Ok((text, code));
    }
    let text = json::to_string(&document(cmd, job)?) + "\n";
    Ok((text, EXIT_OK))
}

pub fn error_document(e: &Error, cfg: Option<&ModulusConfig>) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Some(cfg) = cfg {
        v = with_tau(v, cfg);
    }
    v
}

fn failure(e: &Error, cfg: Option<&ModulusConfig>) -> Outcome {
    Outcome {
        code: if e.is_rejection() { EXIT_REJECTED } else { EXIT_FAILED },
        stdout: String::new(),
        stderr: json::to_string(&error_document(e, cfg)) + "\n",
    }
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_REJECTED } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let job = match JobConfig::from_cli(&cli) {
        Ok(job) => job,
        Err(e) => return failure(&e, None),
    };
    match execute(&cli.command, &job) {
        Ok((text, code)) => finish(&job, text, code),
        Err(e) => failure(&e, Some(&job.cfg)),
    }
}

fn finish(job: &JobConfig, text: String, code: i32) -> Outcome {
    match &job.output {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => Outcome { code, stdout: String::new(), stderr: String::new() },
            Err(e) => failure(&Error::Parse(format!("cannot write {}: {e}", path.display())), Some(&job.cfg)),
        },
        None => Outcome { code, stdout: text, stderr: String::new() },
    }
}

