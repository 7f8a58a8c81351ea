//! Finite differences, quadrature, interpolation and curvature on a
//! [`CylGrid`].

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{FlowError, Result};
use crate::field::{FlowState, LogField};
use crate::grid::CylGrid;

/// ζ below which the innermost row is trusted as the `r -> 0` limit.
pub const ORIGIN_ZETA_LIMIT: f64 = -6.0;

/// Cylindrical Laplacian `w_ζζ + w_θθ` at interior ζ rows.
///
/// Three-point nonuniform stencil in ζ (exact on quadratics), periodic
/// second difference in θ. The first and last ζ rows are left at zero; the
/// solver supplies its own boundary closure.
pub fn laplacian_c(w: &LogField, grid: &CylGrid) -> Result<LogField> {
    w.check_grid(grid)?;
    Ok(LogField::from_raw(laplacian_values(w.values(), grid)))
}

pub(crate) fn laplacian_values(w: &Array2<f64>, grid: &CylGrid) -> Array2<f64> {
    let (nz, nt) = w.dim();
    let z = grid.zeta();
    let mut out = Array2::zeros((nz, nt));
    let inv_dth2 = if nt > 1 {
        1.0 / (grid.dtheta() * grid.dtheta())
    } else {
        0.0
    };
    for i in 1..nz - 1 {
        let hm = z[i] - z[i - 1];
        let hp = z[i + 1] - z[i];
        let s = 2.0 / (hm + hp);
        for j in 0..nt {
            let c = w[[i, j]];
            let zz = s * ((w[[i + 1, j]] - c) / hp - (c - w[[i - 1, j]]) / hm);
            let tt = if nt > 1 {
                let jp = (j + 1) % nt;
                let jm = (j + nt - 1) % nt;
                (w[[i, jp]] - 2.0 * c + w[[i, jm]]) * inv_dth2
            } else {
                0.0
            };
            out[[i, j]] = zz + tt;
        }
    }
    out
}

/// Area `∫ u dx = ∫∫ v dζ dθ`: trapezoid rule over the grid plus the
/// cusp tail `∫_{ζmax}^∞ 2π · 2t/ζ² dζ = 4πt/ζmax`.
pub fn mass(state: &FlowState) -> f64 {
    grid_mass(state) + tail_mass(state.t, state.grid.zeta_max())
}

/// Trapezoid part of [`mass`] only.
pub fn grid_mass(state: &FlowState) -> f64 {
    let wts = state.grid.trapezoid_weights();
    let dth = state.grid.theta_weight();
    let w = state.w.values();
    let mut total = 0.0;
    for (i, row) in w.outer_iter().enumerate() {
        let s: f64 = row.iter().map(|x| x.exp()).sum();
        total += wts[i] * s * dth;
    }
    total
}

pub fn tail_mass(t: f64, zeta_max: f64) -> f64 {
    if zeta_max > 0.0 {
        4.0 * PI * t / zeta_max
    } else {
        0.0
    }
}

/// Pointwise scalar curvature `R = -Δ_c w / e^w` of `u (dx² + dy²)` at
/// interior rows (zero on the first and last rows).
pub fn curvature_field(state: &FlowState) -> Array2<f64> {
    let lap = laplacian_values(state.w.values(), &state.grid);
    let w = state.w.values();
    let (nz, _) = w.dim();
    let mut r = Array2::zeros(w.dim());
    for i in 1..nz - 1 {
        for (j, l) in lap.row(i).iter().enumerate() {
            r[[i, j]] = -l / w[[i, j]].exp();
        }
    }
    r
}

/// Curvature from the last implicit step, `R = (e^{w_prev - w} - 1) / dt`.
///
/// For a converged step this equals [`curvature_field`] up to the Newton
/// residual, but it does not divide a cancelling difference by `e^w`, which
/// is what makes it usable where `v` has decayed by many orders of magnitude.
pub fn step_curvature(state: &FlowState) -> Option<Array2<f64>> {
    let prev = state.prev_w.as_ref()?;
    if !(state.last_dt > 0.0) {
        return None;
    }
    let dt = state.last_dt;
    let mut r = Array2::zeros(state.w.shape());
    ndarray::Zip::from(&mut r)
        .and(state.w.values())
        .and(prev.values())
        .for_each(|r, &w, &p| *r = (p - w).exp_m1() / dt);
    Some(r)
}

/// [`step_curvature`] when the state carries a previous step, otherwise
/// [`curvature_field`].
pub fn curvature(state: &FlowState) -> Array2<f64> {
    step_curvature(state).unwrap_or_else(|| curvature_field(state))
}

/// Estimate of `u(0, t)` from the innermost ζ row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginValue {
    pub value: f64,
    /// Set when `zeta_min > -6`, i.e. the innermost row is not deep enough.
    pub imprecise: bool,
}

/// θ-average of `e^{w - 2ζ}` on the innermost row.
pub fn u_at_origin(state: &FlowState) -> OriginValue {
    let z0 = state.grid.zeta_min();
    let row = state.w.values().row(0);
    let nt = row.len() as f64;
    let value = row.iter().map(|w| (w - 2.0 * z0).exp()).sum::<f64>() / nt;
    OriginValue {
        value,
        imprecise: z0 > ORIGIN_ZETA_LIMIT,
    }
}

/// Bilinear interpolation of `w` at `(ζ, θ)`, periodic in θ.
pub fn interp(w: &LogField, grid: &CylGrid, zeta: f64, theta: f64) -> Result<f64> {
    w.check_grid(grid)?;
    interp_values(w.values(), grid, zeta, theta)
}

pub(crate) fn interp_values(w: &Array2<f64>, grid: &CylGrid, zeta: f64, theta: f64) -> Result<f64> {
    let i = grid.locate(zeta).ok_or(FlowError::Range {
        what: "zeta",
        value: zeta,
        lo: grid.zeta_min(),
        hi: grid.zeta_max(),
    })?;
    let z = grid.zeta();
    let a = (zeta - z[i]) / (z[i + 1] - z[i]);
    let nt = grid.n_theta();
    if nt == 1 {
        return Ok((1.0 - a) * w[[i, 0]] + a * w[[i + 1, 0]]);
    }
    let s = theta.rem_euclid(2.0 * PI) / grid.dtheta();
    let j0 = (s.floor() as usize) % nt;
    let j1 = (j0 + 1) % nt;
    let b = s - s.floor();
    let lo = (1.0 - b) * w[[i, j0]] + b * w[[i, j1]];
    let hi = (1.0 - b) * w[[i + 1, j0]] + b * w[[i + 1, j1]];
    Ok((1.0 - a) * lo + a * hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn state(grid: CylGrid, f: impl Fn(f64, f64) -> f64, t: f64) -> FlowState {
        let w = LogField::from_fn(&grid, f).unwrap();
        FlowState::new(grid, w, t).unwrap()
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = CylGrid::uniform(-2.0, 3.0, 41, 1).unwrap();
        let w = LogField::from_fn(&g, |z, _| z * z).unwrap();
        let l = laplacian_c(&w, &g).unwrap();
        for i in 1..40 {
            assert!((l.get(i, 0) - 2.0).abs() < 1e-10);
        }
        // nonuniform nodes too
        let g = CylGrid::new(&GridSpec {
            n_zeta: 80,
            n_theta: 1,
            zeta_min: -1.0,
            zeta_split: 2.0,
            zeta_max: 6.0,
            max_ratio: 1.2,
        })
        .unwrap();
        let w = LogField::from_fn(&g, |z, _| 3.0 * z * z - z + 1.0).unwrap();
        let l = laplacian_c(&w, &g).unwrap();
        for i in 1..79 {
            assert!((l.get(i, 0) - 6.0).abs() < 1e-9, "row {i}: {}", l.get(i, 0));
        }
    }

    #[test]
    fn laplacian_cos_theta() {
        let g = CylGrid::uniform(0.0, 1.0, 5, 64).unwrap();
        let w = LogField::from_fn(&g, |_, th| th.cos()).unwrap();
        let l = laplacian_c(&w, &g).unwrap();
        for j in 0..64 {
            assert!((l.get(2, j) + g.theta(j).cos()).abs() < 1e-3);
        }
    }

    #[test]
    fn laplacian_needs_three_rows() {
        assert!(CylGrid::uniform(0.0, 1.0, 2, 1).is_err());
    }

    #[test]
    fn mass_of_constant_without_tail() {
        let g = CylGrid::uniform(0.0, 2.5, 26, 1).unwrap();
        let s = state(g, |_, _| 3.0f64.ln(), 1.0);
        assert!((grid_mass(&s) - 2.0 * PI * 3.0 * 2.5).abs() < 1e-10);
        // the same with θ resolved
        let g = CylGrid::uniform(0.0, 2.5, 26, 16).unwrap();
        let s = state(g, |_, _| 3.0f64.ln(), 1.0);
        assert!((grid_mass(&s) - 2.0 * PI * 3.0 * 2.5).abs() < 1e-10);
    }

    #[test]
    fn cusp_tail_closed_form() {
        assert!((tail_mass(1.0, 10.0) - 1.2566370614359172).abs() < 1e-12);
    }

    #[test]
    fn flat_state_has_zero_curvature() {
        let g = CylGrid::uniform(-1.0, 1.0, 11, 8).unwrap();
        let s = state(g, |_, _| 0.7, 0.5);
        assert!(curvature_field(&s).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn curvature_of_cusp_is_minus_inverse_time() {
        // v = 2t/ζ²: R = -w_ζζ / v = -(2/ζ²) / (2t/ζ²) = -1/t
        let t = 0.7;
        let g = CylGrid::uniform(5.0, 30.0, 2001, 1).unwrap();
        let s = state(g, |z, _| (2.0 * t / (z * z)).ln(), t);
        let r = curvature_field(&s);
        for i in 1..2000 {
            assert!((r[[i, 0]] + 1.0 / t).abs() < 1e-4, "{}", r[[i, 0]]);
        }
    }

    #[test]
    fn origin_of_flat_u() {
        let g = CylGrid::uniform(-8.0, 2.0, 21, 4).unwrap();
        let s = state(g, |z, _| 2.0 * z + 0.25f64.ln(), 0.5);
        let o = u_at_origin(&s);
        assert!((o.value - 0.25).abs() < 1e-14);
        assert!(!o.imprecise);
        let g = CylGrid::uniform(-3.0, 2.0, 21, 1).unwrap();
        let s = state(g, |z, _| 2.0 * z, 0.5);
        assert!(u_at_origin(&s).imprecise);
    }

    #[test]
    fn interp_nodes_and_affine() {
        let g = CylGrid::uniform(0.0, 4.0, 9, 8).unwrap();
        let w = LogField::from_fn(&g, |z, th| 2.0 * z - 1.0 + th.sin()).unwrap();
        for i in 0..9 {
            for j in 0..8 {
                let v = interp(&w, &g, g.zeta()[i], g.theta(j)).unwrap();
                assert_eq!(v, w.get(i, j));
            }
        }
        let w = LogField::from_fn(&g, |z, _| 2.0 * z - 1.0).unwrap();
        let mid = interp(&w, &g, 1.25, 0.3).unwrap();
        assert!((mid - 1.5).abs() < 1e-14);
        assert!(matches!(
            interp(&w, &g, 4.5, 0.0),
            Err(FlowError::Range { .. })
        ));
    }
}
