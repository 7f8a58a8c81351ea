//! Implicit evolution of `w = log v` under `v_t = Δ_c log v`.
//!
//! The outer row is pinned to the logarithmic cusp `2t/ζ²`, which selects
//! the maximal solution (area loss `4π` per unit time). The inner row uses a
//! ghost node with `∂_ζ w = 2`, i.e. `u` flat at the origin.

mod checkpoint;
mod init;
mod linear;
mod run;
mod step;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::FlowState;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use init::{init_state, DatumKind, InitialDatum};
pub use linear::Preconditioner;
pub use run::{run, run_from, run_observed, Outcome, RunSpec, Trajectory};
pub use step::{step_implicit, NewtonReport};

/// Time-step control and Newton settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteppingPolicy {
    pub dt_max: f64,
    pub sigma: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub tau_schedule: Vec<f64>,
    pub dt_min: f64,
    pub preconditioner: Preconditioner,
}

impl Default for SteppingPolicy {
    fn default() -> Self {
        SteppingPolicy {
            dt_max: 0.05,
            sigma: 0.1,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            tau_schedule: vec![5.0, 10.0, 20.0, 50.0],
            dt_min: 1e-14,
            preconditioner: Preconditioner::default(),
        }
    }
}

impl SteppingPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(FlowError::Config(format!(
                "sigma = {} must lie in (0, 1)",
                self.sigma
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(FlowError::Config(format!("dt_max = {} must be > 0", self.dt_max)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(FlowError::Config(format!(
                "newton_tol = {} must be > 0",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(FlowError::Config("newton_max_iter must be >= 1".into()));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max) {
            return Err(FlowError::Config(format!(
                "dt_min = {} must lie in (0, dt_max)",
                self.dt_min
            )));
        }
        if self.tau_schedule.iter().any(|t| !(*t > 0.0))
            || self.tau_schedule.windows(2).any(|p| p[1] <= p[0])
        {
            return Err(FlowError::Config(
                "tau_schedule must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Extinction time of the maximal solution with area `m` at time `t`.
pub fn estimate_t(m: f64, t: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(FlowError::Domain(format!("mass {m} must be positive")));
    }
    Ok(t + m / (4.0 * PI))
}

/// `dt = min(dt_max, sigma (T_est - t))`.
pub fn adapt_dt(state: &FlowState, policy: &SteppingPolicy, t_est: f64) -> Result<f64> {
    if state.t >= t_est {
        return Err(FlowError::PastExtinction { t: state.t, t_est });
    }
    Ok(policy.dt_max.min(policy.sigma * (t_est - state.t)))
}

/// Cusp value of `w` on the outer row: `log(2t/ζmax²)`.
pub fn outer_boundary_value(t: f64, zeta_max: f64) -> f64 {
    (2.0 * t / (zeta_max * zeta_max)).ln()
}

/// Pins the outer row to the cusp. The inner Neumann closure lives in the
/// discrete operator; see [`inner_ghost`].
pub fn boundary_conditions(mut state: FlowState) -> Result<FlowState> {
    if !(state.t > 0.0) {
        return Err(FlowError::Domain(format!("t = {} must be positive", state.t)));
    }
    let zmax = state.grid.zeta_max();
    let wb = outer_boundary_value(state.t, zmax);
    let last = state.grid.n_zeta() - 1;
    state.w.values_mut().row_mut(last).fill(wb);
    Ok(state)
}

/// Ghost row below `zeta_min`: `w_ghost = w_0 - 2 (ζ_1 - ζ_0)`.
pub fn inner_ghost(state: &FlowState) -> Vec<f64> {
    let z = state.grid.zeta();
    let h = z[1] - z[0];
    state.w.values().row(0).iter().map(|w| w - 2.0 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LogField;
    use crate::grid::CylGrid;

    #[test]
    fn extinction_estimates() {
        assert!((estimate_t(4.0 * PI, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((estimate_t(8.0 * PI, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!(estimate_t(0.0, 0.0).is_err());
    }

    fn flat(t: f64) -> FlowState {
        let g = CylGrid::uniform(-8.0, 40.0, 49, 1).unwrap();
        let w = LogField::constant(&g, 0.0).unwrap();
        FlowState::new(g, w, t).unwrap()
    }

    #[test]
    fn dt_rule() {
        let mut p = SteppingPolicy {
            dt_max: 1.0,
            sigma: 0.1,
            ..Default::default()
        };
        let s = flat(0.9);
        assert!((adapt_dt(&s, &p, 1.0).unwrap() - 0.01).abs() < 1e-15);
        p.dt_max = 0.05;
        let s = flat(0.5);
        assert_eq!(adapt_dt(&s, &p, 10.5).unwrap(), 0.05);
        assert!(matches!(
            adapt_dt(&s, &p, 0.5),
            Err(FlowError::PastExtinction { .. })
        ));
    }

    #[test]
    fn dt_sequence_is_geometric_near_extinction() {
        let p = SteppingPolicy {
            dt_max: 1.0,
            sigma: 0.2,
            ..Default::default()
        };
        let mut s = flat(0.5);
        let mut prev = adapt_dt(&s, &p, 1.0).unwrap();
        for _ in 0..10 {
            s.t += prev;
            let dt = adapt_dt(&s, &p, 1.0).unwrap();
            assert!((dt / prev - 0.8).abs() < 1e-12);
            prev = dt;
        }
    }

    #[test]
    fn outer_row_is_cusp() {
        let s = boundary_conditions(flat(0.5)).unwrap();
        let last = s.grid.n_zeta() - 1;
        assert!((s.w.get(last, 0) - (-7.377758908227871)).abs() < 1e-12);
        assert!((s.w.get(last, 0) - (1.0f64 / 1600.0).ln()).abs() < 1e-14);
        let mut bad = flat(0.5);
        bad.t = 0.0;
        assert!(boundary_conditions(bad).is_err());
    }

    #[test]
    fn policy_validation() {
        let p = SteppingPolicy {
            sigma: 1.5,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("sigma"));
        let p = SteppingPolicy {
            tau_schedule: vec![2.0, 1.0],
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(SteppingPolicy::default().validate().is_ok());
    }
}
