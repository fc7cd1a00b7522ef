//! Command line front end: lists the example geometries and runs their
//! verification suites.
//!
//! Exit codes: 0 when every selected check passes, 1 when any check fails or
//! is invalid, 2 for usage errors (unknown case, bad flags, empty filter).

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use twistorlab::gallery::{build, case_keys};
use twistorlab::report::{run_case, RunConfig, SEED_ENV_VAR};
use twistorlab::Error;

#[derive(Parser)]
#[command(
    name = "twistorlab",
    version,
    about = "Numerical verification suites for twistor spaces of vector bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the example geometries with their checks and anchors
    List,
    /// Run the verification suite of one example geometry
    Verify {
        /// Key of the example geometry (see `list`)
        case: String,
        /// Uniform tolerance override applied to every check
        #[arg(long)]
        tol: Option<f64>,
        /// Step for all finite-difference stencils
        #[arg(long, default_value_t = 1e-3)]
        fd_step: f64,
        /// Sample budget per check
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Suite seed (falls back to TWISTORLAB_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Only run checks whose name matches this `*` pattern
        #[arg(long)]
        check: Option<String>,
        /// Write the JSON report to this path
        #[arg(long)]
        json: Option<PathBuf>,
        /// Worker threads for running checks
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        threads: u64,
    },
}

fn list() -> ExitCode {
    for key in case_keys() {
        let case = match build(key) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("internal error building {key}: {e}");
                return ExitCode::from(2);
            }
        };
        println!("{key}: {}", case.summary());
        for check in case.checks() {
            println!("  {} [{}]", check.name(), check.anchor());
        }
    }
    ExitCode::SUCCESS
}

fn seed_from_env() -> Result<Option<u64>, String> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| format!("invalid {SEED_ENV_VAR}={raw:?}: {e}")),
        Err(_) => Ok(None),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify(
    case: String,
    tol: Option<f64>,
    fd_step: f64,
    samples: u64,
    seed: Option<u64>,
    check: Option<String>,
    json: Option<PathBuf>,
    threads: u64,
) -> ExitCode {
    let (seed, seed_from_env) = match seed {
        Some(s) => (s, false),
        None => match seed_from_env() {
            Ok(Some(s)) => (s, true),
            Ok(None) => (0, false),
            Err(msg) => {
                eprintln!("{msg}");
                return ExitCode::from(2);
            }
        },
    };
    let config = RunConfig {
        case,
        fd_step,
        samples: samples as usize,
        seed,
        seed_from_env,
        tol_override: tol,
        check_filter: check,
        threads: threads as usize,
    };
    let report = match run_case(&config) {
        Ok(r) => r,
        Err(Error::UnknownCase(k)) => {
            eprintln!("unknown case {k:?}; available cases: {}", case_keys().join(", "));
            return ExitCode::from(2);
        }
        Err(Error::InvalidParameter(m)) => {
            eprintln!("usage error: {m}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!("case {} (seed {}, fd step {:e}, {} samples)", config.case, config.seed, config.fd_step, config.samples);
    for rec in &report.checks {
        let residual = match rec.residual {
            Some(r) => format!("{r:.3e}"),
            None => "invalid".to_string(),
        };
        let gate = match rec.expectation.as_str() {
            "margin" => format!(">= {:.1e}", 10.0 * rec.tolerance),
            _ => format!("<= {:.1e}", rec.tolerance),
        };
        println!(
            "[{:>7}] {:45} residual {:>10} (want {}) [{}]",
            rec.verdict, rec.name, residual, gate, rec.paper_anchor
        );
        if let Some(note) = &rec.note {
            println!("          note: {note}");
        }
    }
    println!(
        "suite: {} ({} passed, {} failed, {} invalid)",
        report.verdict, report.passed, report.failed, report.invalid
    );
    if let Some(path) = json {
        let body = match report.to_json() {
            Ok(b) => b,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        if let Err(e) = std::fs::write(&path, body) {
            eprintln!("error writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => list(),
        Command::Verify {
            case,
            tol,
            fd_step,
            samples,
            seed,
            check,
            json,
            threads,
        } => verify(case, tol, fd_step, samples, seed, check, json, threads),
    }
}
