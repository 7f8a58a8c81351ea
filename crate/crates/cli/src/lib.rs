//! Command-line front end: configured runs, exact-solution convergence
//! studies and reports comparing a finished run with the limit theory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod rundir;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use cuspflow::checks::CheckKind;
use cuspflow::exact::{convergence_study, study_passes, ExactCase};
use cuspflow::solver::{run, Outcome};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{CliError, Result};

/// Coarsest spacing of the exact-solution studies.
pub const STUDY_H0: f64 = 0.02;

#[derive(Debug, Parser)]
#[command(name = "cuspflow", version, about = "Type II extinction of u_t = Δ log u")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more configured experiments (one worker per config).
    Run {
        #[arg(long = "config", value_name = "PATH", required = true)]
        configs: Vec<PathBuf>,
        /// Output directory; with several configs, one subdirectory each.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Comma-separated checks to enable for later reports.
        #[arg(long, value_name = "LIST")]
        checks: Option<String>,
    },
    /// Finite-difference residual study of the closed-form solutions.
    VerifyExact {
        /// cigar, cusp, inner-steady or outer-steady; all when omitted.
        #[arg(long = "case", value_name = "NAME")]
        case: Option<String>,
        /// Number of h-halvings (at least 2).
        #[arg(long = "refine", value_name = "N", default_value_t = 3)]
        refine: usize,
    },
    /// Evaluate the enabled checks on a run directory.
    Report {
        #[arg(value_name = "DIR")]
        dir: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "LIST")]
        checks: Option<String>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
}

pub fn parse_checks(list: &str) -> Result<Vec<CheckKind>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            CheckKind::parse(s).ok_or_else(|| {
                let names: Vec<_> = CheckKind::ALL.iter().map(|c| c.name()).collect();
                CliError::Usage(format!("unknown check {s:?}; expected one of {}", names.join(", ")))
            })
        })
        .collect()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// Runs one experiment into `cfg.outputs.dir`; the exit code is 0 on
/// completion and 2 on a stiffness failure.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<i32> {
    let dir = &cfg.outputs.dir;
    rundir::prepare(dir, cfg)?;
    let traj = run(&cfg.run_spec())?;
    let summary = rundir::write_run(dir, cfg, &traj)?;
    println!(
        "{}: T_est = {:.6}, {} steps ({} rejected), final tau = {:.4}, {} snapshots",
        dir.display(),
        summary.t_est,
        summary.steps,
        summary.rejected,
        summary.final_tau,
        traj.snapshots.len()
    );
    Ok(match summary.outcome {
        Outcome::Completed => 0,
        Outcome::Stiffness { t, dt } => {
            eprintln!("stiffness failure at t = {t}: dt = {dt:e} below dt_min");
            2
        }
    })
}

fn run_many(configs: &[PathBuf], out: Option<PathBuf>, seed: Option<u64>, checks: Option<String>) -> Result<i32> {
    let enabled = checks.as_deref().map(parse_checks).transpose()?;
    let mut cfgs = Vec::new();
    for path in configs {
        let mut cfg = load_config(path)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(e) = &enabled {
            cfg.checks.enabled = e.clone();
        }
        if let Some(o) = &out {
            cfg.outputs.dir = if configs.len() == 1 {
                o.clone()
            } else {
                let stem = path.file_stem().unwrap_or_default();
                o.join(stem)
            };
        }
        cfgs.push(cfg);
    }
    let mut dirs: Vec<&Path> = cfgs.iter().map(|c| c.outputs.dir.as_path()).collect();
    dirs.sort();
    if dirs.windows(2).any(|p| p[0] == p[1]) {
        return Err(CliError::Usage("two configs write to the same output directory".into()));
    }
    let results: Vec<Result<i32>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || cmd_run(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run worker panicked"))
            .collect()
    });
    let mut code = 0;
    for r in results {
        code = code.max(match r {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        });
    }
    Ok(code)
}

pub fn cmd_verify_exact(case: Option<&str>, refine: usize) -> Result<i32> {
    if refine < 2 {
        return Err(CliError::Usage(format!("--refine must be >= 2, got {refine}")));
    }
    let cases = match case {
        None => ExactCase::ALL.to_vec(),
        Some(name) => vec![ExactCase::parse(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown case {name:?}; expected cigar, cusp, inner-steady or outer-steady"
            ))
        })?],
    };
    let mut all = true;
    println!("case,h,residual,order");
    for c in cases {
        let rows = convergence_study(c, STUDY_H0, refine)?;
        for r in &rows {
            let order = r.order.map_or(String::new(), |o| format!("{o:.4}"));
            println!("{},{:e},{:.6e},{order}", c.name(), r.h, r.residual);
        }
        let ok = study_passes(&rows);
        println!("# {}: {}", c.name(), if ok { "PASS" } else { "FAIL" });
        all &= ok;
    }
    Ok(if all { 0 } else { 1 })
}

pub fn cmd_report(dir: &Path, checks: Option<&[CheckKind]>, seed: Option<u64>) -> Result<report::Report> {
    let data = rundir::load(dir)?;
    let rep = report::build(&data, checks, seed);
    let path = dir.join(report::REPORT);
    fs::write(&path, rep.render()).map_err(|e| CliError::io(&path, e))?;
    report::write_curves(dir, &data, &rep)?;
    Ok(rep)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run {
            configs,
            out,
            seed,
            checks,
        } => run_many(&configs, out, seed, checks),
        Command::VerifyExact { case, refine } => cmd_verify_exact(case.as_deref(), refine),
        Command::Report {
            dir,
            out,
            checks,
            seed,
        } => {
            let dir = match (dir, out) {
                (Some(d), None) | (None, Some(d)) => d,
                (Some(_), Some(_)) => return Err(CliError::Usage("give the run directory once".into())),
                (None, None) => return Err(CliError::Usage("report needs a run directory".into())),
            };
            let enabled = checks.as_deref().map(parse_checks).transpose()?;
            let rep = cmd_report(&dir, enabled.as_deref(), seed)?;
            for o in &rep.outcomes {
                println!("{:<16} {:?}  {}", o.check.name(), o.verdict, o.note);
            }
            Ok(if rep.passed() { 0 } else { 1 })
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
