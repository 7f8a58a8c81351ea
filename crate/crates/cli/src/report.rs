//! Verdicts for a run directory, plus plot-ready theory-vs-measured curves.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use cuspflow::checks::{evaluate, snapshot_at, CheckKind, CheckOutcome, RunView, Verdict};
use cuspflow::exact::{inner_profile_limit, outer_profile_limit};
use cuspflow::textio::fmt_f64;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::rundir::RunData;

pub const REPORT: &str = "report.toml";
pub const CURVES: &str = "curves";

const T_EST_DEFINITION: &str =
    "T_est = t0 + M(t0)/(4 pi): extinction time of the regularised datum under the area law; \
     the true T of the unregularised datum is not claimed";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub t_est: f64,
    pub final_tau: f64,
    pub config_hash: String,
    pub code_version: String,
    pub outcomes: Vec<CheckOutcome>,
}

impl Report {
    pub fn count(&self, v: Verdict) -> usize {
        self.outcomes.iter().filter(|o| o.verdict == v).count()
    }

    pub fn passed(&self) -> bool {
        self.count(Verdict::Fail) == 0
    }

    pub fn render(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            t_est_definition: &'a str,
            t_est: f64,
            final_tau: f64,
            config_hash: &'a str,
            code_version: &'a str,
            passed: usize,
            failed: usize,
            flagged: usize,
            check: Vec<Entry<'a>>,
        }
        #[derive(Serialize)]
        struct Entry<'a> {
            name: &'a str,
            verdict: Verdict,
            note: &'a str,
            measured: toml::Table,
        }
        let doc = Doc {
            t_est_definition: T_EST_DEFINITION,
            t_est: self.t_est,
            final_tau: self.final_tau,
            config_hash: &self.config_hash,
            code_version: &self.code_version,
            passed: self.count(Verdict::Pass),
            failed: self.count(Verdict::Fail),
            flagged: self.count(Verdict::Flag),
            check: self
                .outcomes
                .iter()
                .map(|o| Entry {
                    name: o.check.name(),
                    verdict: o.verdict,
                    note: &o.note,
                    measured: o
                        .measured
                        .iter()
                        .map(|(k, v)| (k.clone(), toml::Value::Float(*v)))
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("report serialises")
    }
}

/// Evaluates `checks` (the configured list when `None`) on a loaded run.
pub fn build(data: &RunData, checks: Option<&[CheckKind]>, seed: Option<u64>) -> Report {
    let cfg = &data.config;
    let view = RunView {
        t_est: data.summary.t_est,
        rho: cfg.datum.rho,
        records: &data.records,
        snapshots: &data.snapshots,
        states: &data.states,
        seed: seed.unwrap_or(cfg.seed),
    };
    let enabled = checks.unwrap_or(&cfg.checks.enabled);
    Report {
        t_est: data.summary.t_est,
        final_tau: data.records.last().map_or(f64::NAN, |r| r.tau),
        config_hash: data.summary.config_hash.clone(),
        code_version: data.summary.code_version.clone(),
        outcomes: enabled
            .iter()
            .map(|c| evaluate(*c, &view, &cfg.checks.tolerances))
            .collect(),
    }
}

fn write_curve(dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let path = dir.join(format!("{name}.csv"));
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// One CSV per enabled check that has a curve to draw.
pub fn write_curves(dir: &Path, data: &RunData, report: &Report) -> Result<()> {
    let out = dir.join(CURVES);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let te = report.t_est;
    let recs = &data.records;
    let tol = &data.config.checks.tolerances;
    for o in &report.outcomes {
        match o.check {
            CheckKind::MassLaw => {
                let (m0, t0) = recs.first().map_or((0.0, 0.0), |r| (r.mass, r.t));
                let rows: Vec<_> = recs
                    .iter()
                    .map(|r| vec![r.t, r.mass, m0 - 4.0 * PI * (r.t - t0)])
                    .collect();
                write_curve(&out, "mass_law", &["t", "measured", "theory"], &rows)?;
            }
            CheckKind::CurvatureRate => {
                let rows: Vec<_> = recs
                    .iter()
                    .map(|r| vec![r.tau, r.rmax_scaled, r.origin_curv_scaled, 2.0 * te])
                    .collect();
                write_curve(
                    &out,
                    "curvature_rate",
                    &["tau", "rmax_scaled", "origin_curv_scaled", "theory_origin"],
                    &rows,
                )?;
            }
            CheckKind::WidthRate => {
                let cigar = 2.0 * PI * (2.0 / te).sqrt();
                let rows: Vec<_> = recs.iter().map(|r| vec![r.tau, r.width_scaled, cigar]).collect();
                write_curve(&out, "width_rate", &["tau", "measured", "theory"], &rows)?;
            }
            CheckKind::InnerProfile => {
                let rows: Vec<_> = recs
                    .iter()
                    .map(|r| vec![r.tau, r.alpha.ln(), 2.0 * te * r.tau])
                    .collect();
                write_curve(&out, "log_alpha", &["tau", "measured", "theory_leading"], &rows)?;
                if let Some(s) = snapshot_at(&data.snapshots, tol.inner_tau) {
                    let rows: Vec<_> = s
                        .y
                        .iter()
                        .zip(&s.inner)
                        .map(|(y, u)| vec![*y, *u, inner_profile_limit([*y, 0.0], te).unwrap_or(f64::NAN)])
                        .collect();
                    write_curve(&out, "inner_profile", &["y", "measured", "theory"], &rows)?;
                }
            }
            CheckKind::OuterProfile => {
                if let Some(s) = snapshot_at(&data.snapshots, tol.outer_tau) {
                    let rows: Vec<_> = s
                        .xi
                        .iter()
                        .zip(&s.outer)
                        .map(|(x, v)| {
                            let mean = v.iter().sum::<f64>() / v.len() as f64;
                            vec![*x, mean, outer_profile_limit(*x, te).unwrap_or(f64::NAN)]
                        })
                        .collect();
                    write_curve(&out, "outer_profile", &["xi", "measured", "theory"], &rows)?;
                }
            }
            CheckKind::Anisotropy => {
                let rows: Vec<_> = data
                    .snapshots
                    .iter()
                    .map(|s| vec![s.tau, s.anisotropy, 1.0])
                    .collect();
                write_curve(&out, "anisotropy", &["tau", "measured", "theory"], &rows)?;
            }
            _ => {}
        }
    }
    Ok(())
}
