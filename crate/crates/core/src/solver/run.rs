use serde::{Deserialize, Serialize};

use super::{adapt_dt, estimate_t, init_state, step_implicit, InitialDatum, SteppingPolicy};
use crate::calculus::mass;
use crate::diagnostics::{record, DiagnosticsRecord};
use crate::error::{FlowError, Result};
use crate::field::FlowState;
use crate::grid::{CylGrid, GridSpec};
use crate::rescale::{snapshot, ProfileSnapshot, SnapshotSpec};

/// Everything needed to reproduce one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub datum: InitialDatum,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub policy: SteppingPolicy,
    #[serde(default)]
    pub snapshot: SnapshotSpec,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Stop once the area falls below this fraction of the initial area.
    #[serde(default = "default_mass_floor")]
    pub mass_floor_frac: f64,
    /// Keep a copy of the state at every snapshot.
    #[serde(default)]
    pub keep_states: bool,
}

fn default_stride() -> usize {
    10
}

fn default_mass_floor() -> f64 {
    1e-3
}

impl RunSpec {
    pub fn new(datum: InitialDatum) -> Self {
        RunSpec {
            datum,
            grid: GridSpec::default(),
            policy: SteppingPolicy::default(),
            snapshot: SnapshotSpec::default(),
            record_stride: default_stride(),
            mass_floor_frac: default_mass_floor(),
            keep_states: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.datum.validate()?;
        self.policy.validate()?;
        if self.record_stride == 0 {
            return Err(FlowError::Config("record_stride must be >= 1".into()));
        }
        if !(self.mass_floor_frac > 0.0 && self.mass_floor_frac < 1.0) {
            return Err(FlowError::Config(format!(
                "mass_floor_frac = {} must lie in (0, 1)",
                self.mass_floor_frac
            )));
        }
        let s = &self.snapshot;
        if s.n_y < 2 || s.n_xi < 2 || !(s.y_max > 0.0) || !(s.xi_lo < s.xi_hi) {
            return Err(FlowError::Config("snapshot sampling is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum Outcome {
    /// Reached the last scheduled τ, or the area floor.
    Completed,
    /// Steps kept being rejected below `dt_min`.
    Stiffness { t: f64, dt: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_est: f64,
    pub m0: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<ProfileSnapshot>,
    /// States at the snapshots, when requested.
    pub states: Vec<FlowState>,
    pub final_state: FlowState,
    pub outcome: Outcome,
    pub steps: u64,
    pub rejected: u64,
}

impl Trajectory {
    pub fn final_tau(&self) -> f64 {
        1.0 / (self.t_est - self.final_state.t)
    }
}

/// Advances the datum from `t0` until the last scheduled τ (or the area
/// floor), with snapshots landing exactly on `t_k = T_est - 1/τ_k`.
pub fn run(spec: &RunSpec) -> Result<Trajectory> {
    spec.validate()?;
    let grid = CylGrid::new(&spec.grid)?;
    let state = init_state(&spec.datum, &grid)?;
    run_from(spec, state)
}

/// [`run`] from a given initial state.
pub fn run_from(spec: &RunSpec, state: FlowState) -> Result<Trajectory> {
    run_observed(spec, state, |_, _| {})
}

/// [`run_from`], handing every recorded state to `observe`.
pub fn run_observed(
    spec: &RunSpec,
    mut state: FlowState,
    mut observe: impl FnMut(&FlowState, &DiagnosticsRecord),
) -> Result<Trajectory> {
    spec.validate()?;
    let policy = &spec.policy;
    let m0 = mass(&state);
    let t_est = estimate_t(m0, state.t)?;
    let rho = spec.datum.rho;
    let xi_ref = spec.snapshot.xi_ref_over_t * t_est;

    let first = record(&state, t_est, rho, xi_ref)?;
    observe(&state, &first);
    let mut traj = Trajectory {
        t_est,
        m0,
        records: vec![first],
        snapshots: Vec::new(),
        states: Vec::new(),
        final_state: state.clone(),
        outcome: Outcome::Completed,
        steps: 0,
        rejected: 0,
    };

    let targets: Vec<f64> = policy
        .tau_schedule
        .iter()
        .map(|tau| t_est - 1.0 / tau)
        .filter(|t| *t > state.t)
        .collect();
    let mut next = 0;
    let mut dt_cap = f64::INFINITY;

    while next < targets.len() {
        let target = targets[next];
        let mut dt = adapt_dt(&state, policy, t_est)?.min(dt_cap);
        let mut hit = false;
        if state.t + dt >= target * (1.0 - 1e-14) {
            dt = target - state.t;
            hit = true;
        }
        let (new, _) = match step_implicit(&state, dt, policy) {
            Ok(r) => r,
            Err(FlowError::StepRejected { .. }) => {
                traj.rejected += 1;
                dt_cap = 0.5 * dt;
                if dt_cap < policy.dt_min {
                    traj.outcome = Outcome::Stiffness { t: state.t, dt: dt_cap };
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        dt_cap = 2.0 * dt;
        state = new;
        if hit {
            state.t = target;
        }
        traj.steps += 1;

        let below_floor = mass(&state) < spec.mass_floor_frac * m0;
        if hit || below_floor || traj.steps.is_multiple_of(spec.record_stride as u64) {
            let rec = record(&state, t_est, rho, xi_ref)?;
            observe(&state, &rec);
            traj.records.push(rec);
        }
        if hit {
            traj.snapshots.push(snapshot(&state, t_est, &spec.snapshot)?);
            if spec.keep_states {
                traj.states.push(state.clone());
            }
            next += 1;
        }
        if below_floor {
            break;
        }
    }
    traj.final_state = state;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunSpec {
        let mut s = RunSpec::new(InitialDatum::disk(4.0, 1.0, 0.01));
        s.grid = GridSpec {
            n_zeta: 160,
            ..GridSpec::default()
        };
        s.policy.tau_schedule = vec![2.0, 4.0];
        s.policy.sigma = 0.05;
        s
    }

    #[test]
    fn empty_schedule_returns_initial_record() {
        let mut s = small();
        s.policy.tau_schedule.clear();
        let tr = run(&s).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.steps, 0);
        assert!(tr.snapshots.is_empty());
        assert_eq!(tr.outcome, Outcome::Completed);
    }

    #[test]
    fn snapshots_land_on_schedule() {
        let mut s = small();
        s.keep_states = true;
        let tr = run(&s).unwrap();
        assert_eq!(tr.snapshots.len(), 2);
        assert_eq!(tr.states.len(), 2);
        for (snap, tau) in tr.snapshots.iter().zip([2.0, 4.0]) {
            assert!((snap.tau - tau).abs() < 1e-9 * tau, "{}", snap.tau);
        }
        assert!(tr.records.windows(2).all(|p| p[1].t > p[0].t));
        for r in &tr.records {
            assert!((r.tau - 1.0 / (tr.t_est - r.t)).abs() <= 1e-12 * r.tau);
        }
    }

    #[test]
    fn identical_specs_are_bit_identical() {
        let s = small();
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_state.w, b.final_state.w);
    }
}
