//! Problem files, subcommand dispatch and verification suites for the `stochorder` binary.

pub mod commands;
pub mod problem;
pub mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stochorder::Error;

use commands::{Artifacts, Context};
use problem::{ProblemFile, ProblemKind};

#[derive(Debug, Parser)]
#[command(name = "stochorder", version, about = "Optimization over measures under integral stochastic orders")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Write the report JSON here; a CSV surface goes next to it with a `.csv` extension.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Rational arithmetic throughout.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Reporting tolerance for contact sets and pass/fail flags.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Overrides the resolution of interval and simplex grids.
    #[arg(long = "grid-resolution", global = true)]
    pub grid_resolution: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Envelope { file: PathBuf },
    Solve { file: PathBuf },
    Couple { file: PathBuf },
    Expose { file: PathBuf },
    Blackwell { file: PathBuf },
    Design { file: PathBuf },
    Updating { file: PathBuf },
    Stackelberg { file: PathBuf },
    /// Runs a property suite: theorem1, blackwell, exposed, updating, stackelberg, lp or all.
    Verify {
        suite: String,
        #[arg(long, default_value = "fixtures")]
        fixtures: PathBuf,
    },
}

/// Exit status: 0 success, 1 failed suite, 2 invalid input, 3 numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

impl Global {
    pub fn context(&self) -> Context {
        Context { seed: self.seed, exact: self.exact, tol: self.tol, resolution: self.grid_resolution }
    }
}

fn expected_kind(cmd: &Command) -> Option<(ProblemKind, &Path)> {
    Some(match cmd {
        Command::Envelope { file } => (ProblemKind::Envelope, file),
        Command::Solve { file } => (ProblemKind::Solve, file),
        Command::Couple { file } => (ProblemKind::Couple, file),
        Command::Expose { file } => (ProblemKind::Expose, file),
        Command::Blackwell { file } => (ProblemKind::Blackwell, file),
        Command::Design { file } => (ProblemKind::Design, file),
        Command::Updating { file } => (ProblemKind::Updating, file),
        Command::Stackelberg { file } => (ProblemKind::Stackelberg, file),
        Command::Verify { .. } => return None,
    })
}

/// Reads and validates the problem file, then runs it.
pub fn execute(cli: &Cli) -> stochorder::Result<Artifacts> {
    let ctx = cli.global.context();
    match expected_kind(&cli.command) {
        Some((kind, file)) => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", file.display())))?;
            let p = ProblemFile::parse(&text)?;
            if p.problem_kind != kind {
                return Err(Error::Invalid(format!(
                    "`{}` subcommand given a `{}` problem",
                    kind.name(),
                    p.problem_kind.name()
                )));
            }
            let mut a = commands::run_problem(&p, &ctx)?;
            if !p.output.csv {
                a.csv = None;
            }
            Ok(a)
        }
        None => {
            let Command::Verify { suite, fixtures } = &cli.command else { unreachable!() };
            suites::run_suite(suite, fixtures, &ctx)
        }
    }
}

fn write_outputs(cli: &Cli, mut a: Artifacts) -> std::io::Result<()> {
    let verify = matches!(cli.command, Command::Verify { .. });
    if verify {
        print_checks(&a);
    }
    match &cli.global.out {
        Some(path) => {
            std::fs::write(path, serde_json::to_string_pretty(&a.report)? + "\n")?;
            if let Some(csv) = a.csv.take() {
                std::fs::write(path.with_extension("csv"), csv)?;
            }
        }
        None if verify => {}
        None => {
            if let (Some(csv), serde_json::Value::Object(m)) = (a.csv.take(), &mut a.report) {
                m.insert("csv".into(), csv.into());
            }
            let mut out = std::io::stdout().lock();
            writeln!(out, "{}", serde_json::to_string_pretty(&a.report)?)?;
        }
    }
    Ok(())
}

fn print_checks(a: &Artifacts) {
    let Some(groups) = a.report["groups"].as_array() else { return };
    for g in groups {
        println!("[{}]", g["group"].as_str().unwrap_or(""));
        for c in g["checks"].as_array().into_iter().flatten() {
            if let Ok(c) = serde_json::from_value::<suites::Check>(c.clone()) {
                println!("  {}", c.line());
            }
        }
    }
    println!("{}", if a.passed { "all checks passed" } else { "some checks FAILED" });
}

fn diagnose(kind: &str, message: &str, code: i32) {
    eprintln!("{}", json!({ "error": kind, "message": message, "exit_code": code }));
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(a) => {
            let passed = a.passed;
            if let Err(e) = write_outputs(cli, a) {
                diagnose("io", &e.to_string(), 2);
                return 2;
            }
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            diagnose(e.kind(), &e.to_string(), code);
            code
        }
    }
}
