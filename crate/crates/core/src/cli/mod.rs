//! The `hermgraph` command line.
//!
//! Every command reads a model document, writes a JSON-lines report and exits
//! with 0 when all checks pass, 1 when a check fails and 2 on usage, parse or
//! I/O errors.

pub mod commands;
pub mod document;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::exec::Execution;
use commands::{Context, Suite};
use document::Document;
use report::{Report, Tolerances};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hermgraph", version, about = "Schrödinger operators on Hermitian bundles over weighted graphs")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Override a named tolerance, e.g. `--tolerance green=1e-8`.
    #[arg(long = "tolerance", value_name = "NAME=VALUE", global = true)]
    pub tolerance: Vec<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph axioms, connection unitarity and potential predicates.
    Validate { model: PathBuf },
    /// Eigenvalues of the operator.
    Spectrum {
        model: PathBuf,
        /// Hermitian pencil eigenvalues (the default).
        #[arg(long, conflicts_with = "general")]
        pencil: bool,
        /// Complex eigenvalues of the non-Hermitian operator.
        #[arg(long)]
        general: bool,
    },
    /// Run a verification suite on the model and on seeded random instances.
    Check {
        model: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Additional seeded random instances.
        #[arg(long, default_value_t = 0)]
        instances: usize,
        /// Sampled sections per instance.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Apply the heat semigroup to a section.
    Heat {
        model: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        input: PathBuf,
    },
    /// Apply the resolvent `(ξ + H)^{-1}` to a section.
    Resolvent {
        model: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        xi: f64,
        #[arg(long)]
        input: PathBuf,
    },
    /// Path metric, intrinsic check, boundary distance and `X_ε`.
    Metric {
        model: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Overrides the family horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Agmon hypothesis and the inequality chain along a schedule.
    Agmon {
        model: PathBuf,
        #[arg(long = "C", default_value_t = 0.0, allow_negative_numbers = true)]
        c: f64,
        /// `auto` or a number.
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        lambda: String,
        /// `default` or comma-separated `rho:epsilon:alpha`.
        #[arg(long, default_value = "default")]
        schedule: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Spectrum { .. } => "spectrum",
            Command::Check { .. } => "check",
            Command::Heat { .. } => "heat",
            Command::Resolvent { .. } => "resolvent",
            Command::Metric { .. } => "metric",
            Command::Agmon { .. } => "agmon",
        }
    }

    fn model(&self) -> &PathBuf {
        match self {
            Command::Validate { model }
            | Command::Spectrum { model, .. }
            | Command::Check { model, .. }
            | Command::Heat { model, .. }
            | Command::Resolvent { model, .. }
            | Command::Metric { model, .. }
            | Command::Agmon { model, .. } => model,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Reports go to `out` unless `--output` is given; messages
/// for exit code 2 go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, passed)) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &text).map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                }),
                None => out.write_all(text.as_bytes()).map_err(|e| Error::Io {
                    path: "stdout".into(),
                    message: e.to_string(),
                }),
            };
            match written {
                Ok(()) if passed => EXIT_PASS,
                Ok(()) => EXIT_FAIL,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: &Cli) -> Result<(String, bool)> {
    if cli.jobs == 0 {
        return Err(Error::parse("--jobs", "must be at least 1"));
    }
    let tol = Tolerances::with_overrides(&cli.tolerance)?;
    let exec = if cli.jobs > 1 { Execution::Parallel } else { Execution::Sequential };
    let ctx = Context {
        seed: cli.seed,
        exec,
        tol,
    };
    in_pool(cli.jobs, || {
        let start = Instant::now();
        let doc = Document::read(cli.command.model())?;
        let mut report = Report::new(cli.command.name(), &doc.hash, ctx.seed, &ctx.tol);
        match &cli.command {
            Command::Validate { .. } => commands::validate(&doc, &ctx, &mut report)?,
            Command::Spectrum { general, .. } => commands::spectrum(&doc, &ctx, &mut report, *general)?,
            Command::Check {
                suite,
                instances,
                samples,
                ..
            } => commands::check(&doc, &ctx, &mut report, *suite, *instances, *samples)?,
            Command::Heat { t, input, .. } => commands::heat(&doc, &ctx, &mut report, *t, input)?,
            Command::Resolvent { xi, input, .. } => commands::resolvent(&doc, &ctx, &mut report, *xi, input)?,
            Command::Metric { epsilon, horizon, .. } => commands::metric(&doc, &ctx, &mut report, *epsilon, *horizon)?,
            Command::Agmon {
                c,
                lambda,
                schedule,
                samples,
                ..
            } => commands::agmon(&doc, &ctx, &mut report, *c, lambda, schedule, *samples)?,
        }
        let passed = report.passed();
        Ok((report.finish(start.elapsed().as_secs_f64()), passed))
    })
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs <= 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Construction(format!("thread pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T: Send>(_jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    f()
}
