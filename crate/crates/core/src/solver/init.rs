use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::{FlowState, LogField};
use crate::grid::CylGrid;

/// Subsamples per cell, in ζ and θ, used to cell-average the initial datum.
const SUB_ZETA: usize = 24;
const SUB_THETA: usize = 8;

/// Distance in ζ between the support edge and the pole of the tail floor.
pub(crate) const FLOOR_SHIFT: f64 = 1.0;

/// Ratio of the interior floor to the datum height.
const INNER_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumKind {
    Disk,
    SmoothBump,
    TwoBumps,
}

/// Compactly supported initial density, started at `t0 > 0` with a cusp tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDatum {
    pub kind: DatumKind,
    pub height: f64,
    pub rho: f64,
    #[serde(default)]
    pub offsets: Vec<[f64; 2]>,
    pub t0: f64,
    #[serde(default = "default_floor_eps")]
    pub floor_eps: f64,
}

fn default_floor_eps() -> f64 {
    1.0
}

impl InitialDatum {
    pub fn disk(height: f64, rho: f64, t0: f64) -> Self {
        InitialDatum {
            kind: DatumKind::Disk,
            height,
            rho,
            offsets: Vec::new(),
            t0,
            floor_eps: 1.0,
        }
    }

    pub fn two_bumps(height: f64, rho: f64, offsets: [[f64; 2]; 2], t0: f64) -> Self {
        InitialDatum {
            kind: DatumKind::TwoBumps,
            height,
            rho,
            offsets: offsets.to_vec(),
            t0,
            floor_eps: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.0) {
            return Err(FlowError::Config(format!("height = {} must be > 0", self.height)));
        }
        if !(self.rho > 0.0) {
            return Err(FlowError::Config(format!("rho = {} must be > 0", self.rho)));
        }
        if !(self.t0 > 0.0) {
            return Err(FlowError::Config(format!("t0 = {} must be > 0", self.t0)));
        }
        if self.floor_eps == 0.0 {
            return Err(FlowError::Degenerate(
                "floor_eps = 0 leaves log 0 outside the support".into(),
            ));
        }
        if !(self.floor_eps > 0.0 && self.floor_eps <= 1.0) {
            return Err(FlowError::Config(format!(
                "floor_eps = {} must lie in (0, 1]",
                self.floor_eps
            )));
        }
        if self.kind == DatumKind::TwoBumps {
            if self.offsets.len() != 2 {
                return Err(FlowError::Config(format!(
                    "two-bumps needs exactly 2 offsets, got {}",
                    self.offsets.len()
                )));
            }
            if self.bump_radius() <= 0.0 {
                return Err(FlowError::Config(
                    "two-bumps centres must lie inside B_rho".into(),
                ));
            }
        }
        Ok(())
    }

    /// Radius of each bump in the two-bumps datum, chosen so both supports
    /// stay inside `B_rho`.
    pub fn bump_radius(&self) -> f64 {
        let far = self
            .offsets
            .iter()
            .map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt())
            .fold(0.0, f64::max);
        self.rho - far
    }

    /// The compactly supported density `u_0(x)`.
    pub fn u0(&self, x: [f64; 2]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        match self.kind {
            DatumKind::Disk => {
                if r2 < self.rho * self.rho {
                    self.height
                } else {
                    0.0
                }
            }
            DatumKind::SmoothBump => bump(self.height, r2 / (self.rho * self.rho)),
            DatumKind::TwoBumps => {
                let b2 = self.bump_radius().powi(2);
                self.offsets
                    .iter()
                    .map(|c| {
                        let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                        bump(self.height, d2 / b2)
                    })
                    .sum()
            }
        }
    }

    /// Exact area of `u_0` (without the regularising floor).
    pub fn area(&self) -> f64 {
        match self.kind {
            DatumKind::Disk => PI * self.rho * self.rho * self.height,
            DatumKind::SmoothBump => PI * self.rho * self.rho * self.height / 3.0,
            DatumKind::TwoBumps => 2.0 * PI * self.bump_radius().powi(2) * self.height / 3.0,
        }
    }

    /// Regularised `v = r² u` at `(ζ, θ)`: the datum, a cusp floor
    /// `floor_eps · 2 t0 / (ζ - log ρ + 1)²` outside `B_ρ`, and a tiny floor
    /// inside it.
    pub fn regularized_v(&self, zeta: f64, theta: f64) -> f64 {
        let r = zeta.exp();
        let x = [r * theta.cos(), r * theta.sin()];
        let datum = r * r * self.u0(x);
        let log_rho = self.rho.ln();
        let tail = if zeta > log_rho {
            let d = zeta - log_rho + FLOOR_SHIFT;
            self.floor_eps * 2.0 * self.t0 / (d * d)
        } else {
            0.0
        };
        let inner = if zeta <= log_rho {
            INNER_FLOOR * self.height * (2.0 * zeta).exp()
        } else {
            0.0
        };
        datum.max(tail).max(inner)
    }
}

fn bump(height: f64, s: f64) -> f64 {
    if s < 1.0 {
        height * (1.0 - s) * (1.0 - s)
    } else {
        0.0
    }
}

/// Cell-averaged regularised datum on `grid` at time `t0`, with the outer
/// row pinned to the cusp.
pub fn init_state(datum: &InitialDatum, grid: &CylGrid) -> Result<FlowState> {
    datum.validate()?;
    let log_rho = datum.rho.ln();
    if !(grid.zeta_min() < log_rho) {
        return Err(FlowError::Config(format!(
            "zeta_min = {} must lie below log rho = {log_rho}",
            grid.zeta_min()
        )));
    }
    if grid.zeta_split() < log_rho + 2.0 {
        return Err(FlowError::Config(format!(
            "zeta_split = {} does not resolve the support: need >= log rho + 2 = {}",
            grid.zeta_split(),
            log_rho + 2.0
        )));
    }
    if grid.is_radial() && datum.kind == DatumKind::TwoBumps {
        return Err(FlowError::Config(
            "two-bumps is not radially symmetric: n_theta must be > 1".into(),
        ));
    }
    let z = grid.zeta();
    let (nz, nt) = grid.shape();
    let dth = grid.dtheta();
    let mut w = Array2::zeros((nz, nt));
    for i in 0..nz {
        let lo = if i == 0 { z[0] } else { 0.5 * (z[i - 1] + z[i]) };
        let hi = if i == nz - 1 { z[i] } else { 0.5 * (z[i] + z[i + 1]) };
        for j in 0..nt {
            let th = grid.theta(j);
            let mut acc = 0.0;
            for a in 0..SUB_ZETA {
                let zz = lo + (hi - lo) * (a as f64 + 0.5) / SUB_ZETA as f64;
                if nt == 1 {
                    // the radial datum does not depend on θ
                    acc += datum.regularized_v(zz, 0.0) * SUB_THETA as f64;
                } else {
                    for b in 0..SUB_THETA {
                        let tt = th + dth * ((b as f64 + 0.5) / SUB_THETA as f64 - 0.5);
                        acc += datum.regularized_v(zz, tt);
                    }
                }
            }
            w[[i, j]] = (acc / (SUB_ZETA * SUB_THETA) as f64).ln();
        }
    }
    let state = FlowState::new(grid.clone(), LogField::new(w)?, datum.t0)?;
    super::boundary_conditions(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::mass;
    use crate::grid::GridSpec;
    use crate::solver::estimate_t;

    #[test]
    fn disk_mass_gives_extinction_time() {
        let d = InitialDatum::disk(4.0, 1.0, 0.01);
        assert!((d.area() - 4.0 * PI).abs() < 1e-12);
        assert!((estimate_t(d.area(), d.t0).unwrap() - 1.01).abs() < 1e-12);
        let g = CylGrid::new(&GridSpec::default()).unwrap();
        let s = init_state(&d, &g).unwrap();
        // datum plus the cusp floor 4π t0 (its area is ∫_0^∞ 2π 2t0/(ζ+1)² dζ)
        let m = mass(&s);
        let expected = 4.0 * PI + 4.0 * PI * 0.01;
        assert!((m - expected).abs() / expected < 2e-3, "m = {m}");
    }

    #[test]
    fn zero_floor_is_degenerate() {
        let mut d = InitialDatum::disk(4.0, 1.0, 0.01);
        d.floor_eps = 0.0;
        let g = CylGrid::new(&GridSpec::default()).unwrap();
        assert!(matches!(init_state(&d, &g), Err(FlowError::Degenerate(_))));
    }

    #[test]
    fn unresolved_support_is_rejected() {
        let d = InitialDatum::disk(4.0, 1.0, 0.01);
        let g = CylGrid::new(&GridSpec {
            n_zeta: 64,
            n_theta: 1,
            zeta_min: -8.0,
            zeta_split: 1.0,
            zeta_max: 20.0,
            max_ratio: 1.2,
        })
        .unwrap();
        assert!(matches!(init_state(&d, &g), Err(FlowError::Config(_))));
    }

    #[test]
    fn two_bumps_needs_theta() {
        let d = InitialDatum::two_bumps(10.0, 1.0, [[0.6, 0.0], [-0.6, 0.0]], 0.01);
        let g = CylGrid::new(&GridSpec::default()).unwrap();
        assert!(init_state(&d, &g).is_err());
        let bad = InitialDatum::two_bumps(10.0, 1.0, [[1.2, 0.0], [-0.6, 0.0]], 0.01);
        assert!(bad.validate().is_err());
    }
}
