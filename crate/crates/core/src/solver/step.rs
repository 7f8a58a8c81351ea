use ndarray::Array2;

use super::linear::StencilMatrix;
use super::{outer_boundary_value, SteppingPolicy};
use crate::error::{FlowError, Result};
use crate::field::{FlowState, LogField};

/// Largest sup-norm change of `w` allowed in one Newton update.
const MAX_UPDATE: f64 = 1.0;

const PCG_REL_TOL: f64 = 1e-6;
const PCG_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Sup-norm of the residual divided by the Jacobian diagonal.
    pub residual: f64,
    pub linear_iterations: usize,
}

/// One backward-Euler step `e^{w⁺} - e^{wⁿ} = dt Δ_c w⁺`, solved by damped
/// Newton iteration.
///
/// The discrete operator is written in flux form on dual cells, so the
/// trapezoid area changes exactly by `dt · 2π (flux_out - 2)` per θ column.
pub fn step_implicit(
    state: &FlowState,
    dt: f64,
    policy: &SteppingPolicy,
) -> Result<(FlowState, NewtonReport)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(FlowError::Domain(format!("dt = {dt} must be positive")));
    }
    let grid = &state.grid;
    let z = grid.zeta();
    let (nz, nt) = grid.shape();
    let nu = nz - 1;
    let h: Vec<f64> = z.windows(2).map(|p| p[1] - p[0]).collect();
    let cell: Vec<f64> = (0..nu)
        .map(|i| if i == 0 { h[0] } else { 0.5 * (h[i - 1] + h[i]) })
        .collect();
    let inv_dth2 = if nt > 1 {
        1.0 / (grid.dtheta() * grid.dtheta())
    } else {
        0.0
    };
    let t_new = state.t + dt;
    let wb = outer_boundary_value(t_new, grid.zeta_max());

    let w_old = state.w.values();
    let v_old: Vec<f64> = w_old
        .slice(ndarray::s![0..nu, ..])
        .iter()
        .map(|w| w.exp())
        .collect();

    let mut w: Vec<f64> = w_old.slice(ndarray::s![0..nu, ..]).iter().copied().collect();
    if let (Some(prev), true) = (&state.prev_w, state.last_dt > 0.0) {
        let ratio = dt / state.last_dt;
        for (wk, pk) in w
            .iter_mut()
            .zip(prev.values().slice(ndarray::s![0..nu, ..]).iter())
        {
            let d = (*wk - pk) * ratio;
            *wk += d.clamp(-MAX_UPDATE, MAX_UPDATE);
        }
    }

    let zc: Vec<f64> = (0..nu - 1).map(|i| -dt / h[i]).collect();
    let tc: Vec<f64> = (0..nu).map(|i| -dt * cell[i] * inv_dth2).collect();

    let mut g = vec![0.0; nu * nt];
    let mut diag = vec![0.0; nu * nt];
    let mut report = NewtonReport::default();
    let mut converged = false;

    for iter in 0..=policy.newton_max_iter {
        let mut res: f64 = 0.0;
        for i in 0..nu {
            for j in 0..nt {
                let k = i * nt + j;
                let wk = w[k];
                let ev = wk.exp();
                let f_minus = if i == 0 { 2.0 } else { (wk - w[k - nt]) / h[i - 1] };
                let w_up = if i + 1 == nu { wb } else { w[k + nt] };
                let f_plus = (w_up - wk) / h[i];
                let th = if nt > 1 {
                    let jp = if j + 1 == nt { 0 } else { j + 1 };
                    let jm = if j == 0 { nt - 1 } else { j - 1 };
                    cell[i] * (w[i * nt + jp] - 2.0 * wk + w[i * nt + jm]) * inv_dth2
                } else {
                    0.0
                };
                g[k] = cell[i] * (ev - v_old[k]) - dt * (f_plus - f_minus + th);
                let stiff = 1.0 / h[i]
                    + if i > 0 { 1.0 / h[i - 1] } else { 0.0 }
                    + 2.0 * cell[i] * inv_dth2;
                diag[k] = cell[i] * ev + dt * stiff;
                res = res.max((g[k] / diag[k]).abs());
            }
        }
        report.iterations = iter;
        report.residual = res;
        if !res.is_finite() {
            break;
        }
        if res <= policy.newton_tol {
            converged = true;
            break;
        }
        if iter == policy.newton_max_iter {
            break;
        }
        let jac = StencilMatrix {
            nz: nu,
            nt,
            diag: diag.clone(),
            zc: zc.clone(),
            tc: tc.clone(),
        };
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let delta = if nt == 1 {
            jac.solve_radial(&rhs)
        } else {
            let (d, its, _) = jac.pcg(&rhs, policy.preconditioner, PCG_REL_TOL, PCG_MAX_ITER);
            report.linear_iterations += its;
            d
        };
        let big = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let scale = if big > MAX_UPDATE { MAX_UPDATE / big } else { 1.0 };
        for (wk, d) in w.iter_mut().zip(&delta) {
            *wk += scale * d;
        }
    }

    if !converged {
        return Err(FlowError::StepRejected {
            iterations: report.iterations,
            residual: report.residual,
        });
    }

    let mut values = Array2::zeros((nz, nt));
    for i in 0..nu {
        for j in 0..nt {
            values[[i, j]] = w[i * nt + j];
        }
    }
    values.row_mut(nu).fill(wb);
    let next = FlowState {
        grid: state.grid.clone(),
        w: LogField::new(values)?,
        t: t_new,
        step_index: state.step_index + 1,
        last_dt: dt,
        prev_w: Some(state.w.clone()),
    };
    Ok((next, report))
}
