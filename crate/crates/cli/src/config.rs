//! Experiment configuration: a TOML document with `[datum]`, `[grid]`,
//! `[policy]`, `[outputs]` and `[checks]` sections.

use std::path::PathBuf;

use cuspflow::checks::{CheckKind, Tolerances};
use cuspflow::rescale::SnapshotSpec;
use cuspflow::solver::{InitialDatum, Preconditioner, RunSpec, SteppingPolicy};
use cuspflow::GridSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub datum: InitialDatum,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub checks: Checks,
}

/// Stepping controls; the τ schedule lives under `[outputs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub dt_max: f64,
    pub dt_min: f64,
    pub sigma: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let p = SteppingPolicy::default();
        PolicyConfig {
            dt_max: p.dt_max,
            dt_min: p.dt_min,
            sigma: p.sigma,
            newton_tol: p.newton_tol,
            newton_max_iter: p.newton_max_iter,
            preconditioner: p.preconditioner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: PathBuf,
    pub record_stride: usize,
    pub tau_schedule: Vec<f64>,
    /// Save the full state at every snapshot (needed by the comparison and
    /// Harnack checks).
    pub save_states: bool,
    pub mass_floor_frac: f64,
    pub snapshot: SnapshotSpec,
}

impl Default for Outputs {
    fn default() -> Self {
        let base = RunSpec::new(InitialDatum::disk(1.0, 1.0, 1.0));
        Outputs {
            dir: PathBuf::from("run"),
            record_stride: base.record_stride,
            tau_schedule: SteppingPolicy::default().tau_schedule,
            save_states: true,
            mass_floor_frac: base.mass_floor_frac,
            snapshot: SnapshotSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub enabled: Vec<CheckKind>,
    pub tolerances: Tolerances,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            enabled: CheckKind::ALL.to_vec(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn run_spec(&self) -> RunSpec {
        let p = &self.policy;
        RunSpec {
            datum: self.datum.clone(),
            grid: self.grid,
            policy: SteppingPolicy {
                dt_max: p.dt_max,
                sigma: p.sigma,
                newton_tol: p.newton_tol,
                newton_max_iter: p.newton_max_iter,
                tau_schedule: self.outputs.tau_schedule.clone(),
                dt_min: p.dt_min,
                preconditioner: p.preconditioner,
            },
            snapshot: self.outputs.snapshot,
            record_stride: self.outputs.record_stride,
            mass_floor_frac: self.outputs.mass_floor_frac,
            keep_states: self.outputs.save_states,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.run_spec()
            .validate()
            .and_then(|_| self.checks.tolerances.validate())
            .map_err(|e| CliError::Config(e.to_string()))?;
        cuspflow::CylGrid::new(&self.grid).map_err(|e| CliError::Config(e.to_string()))?;
        let mut seen = self.checks.enabled.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.checks.enabled.len() {
            return Err(CliError::Config("checks.enabled lists a check twice".into()));
        }
        Ok(())
    }

    /// Canonical text; [`parse_config`] inverts it exactly.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    /// SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string() + &span(text, e.span())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn span(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].lines().count().max(1);
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[datum]
kind = "disk"
height = 4.0
rho = 1.0
t0 = 0.01
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.n_theta, 1);
        assert_eq!(c.policy.sigma, 0.1);
        assert_eq!((c.grid.zeta_min, c.grid.zeta_max), (-8.0, 60.0));
        assert_eq!(c.checks.enabled.len(), CheckKind::ALL.len());
    }

    #[test]
    fn bad_sigma_is_named() {
        let text = format!("{MINIMAL}\n[policy]\nsigma = 1.5\n");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("sigma") && e.contains("(0, 1)"), "{e}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("gamma = 1.0\n{MINIMAL}");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("gamma"), "{e}");
    }

    #[test]
    fn render_round_trips() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.outputs.tau_schedule = vec![1.5, 1.0 / 0.3, 50.0];
        c.policy.dt_min = 1e-13;
        c.checks.enabled = vec![CheckKind::Harnack, CheckKind::MassLaw];
        c.seed = 7;
        let back = parse_config(&c.render()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }
}
