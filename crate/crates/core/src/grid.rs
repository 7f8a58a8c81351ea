//! Tensor grids in cylindrical coordinates `(ζ, θ)` with `ζ = log r`.
//!
//! The ζ axis is uniform on `[zeta_min, zeta_split]` and geometrically
//! stretched on `[zeta_split, zeta_max]`; θ is uniform and periodic on
//! `[0, 2π)`. A single θ node selects the radial mode.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

/// Largest cell-to-cell growth factor allowed in the stretched region.
pub const MAX_STRETCH: f64 = 1.2;

/// Parameters from which a [`CylGrid`] is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_zeta: usize,
    pub n_theta: usize,
    pub zeta_min: f64,
    pub zeta_split: f64,
    pub zeta_max: f64,
    pub max_ratio: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_zeta: 512,
            n_theta: 1,
            zeta_min: -8.0,
            zeta_split: 54.0,
            zeta_max: 60.0,
            max_ratio: MAX_STRETCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylGrid {
    zeta: Vec<f64>,
    n_theta: usize,
    zeta_split: f64,
}

impl CylGrid {
    /// Builds the stretched grid described by `spec`.
    ///
    /// The uniform spacing `h` is chosen as small as possible such that the
    /// remaining nodes cover `[zeta_split, zeta_max]` with cells `h q^k`,
    /// `1 <= q <= max_ratio`.
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let GridSpec {
            n_zeta,
            n_theta,
            zeta_min,
            zeta_split,
            zeta_max,
            max_ratio,
        } = *spec;
        if n_zeta < 3 {
            return Err(FlowError::Config(format!(
                "n_zeta = {n_zeta}, need at least 3 nodes"
            )));
        }
        if n_theta == 0 {
            return Err(FlowError::Config("n_theta must be >= 1".into()));
        }
        if !(zeta_min < zeta_split && zeta_split < zeta_max) {
            return Err(FlowError::Config(format!(
                "need zeta_min < zeta_split < zeta_max, got {zeta_min}, {zeta_split}, {zeta_max}"
            )));
        }
        if !(max_ratio > 1.0 && max_ratio <= MAX_STRETCH) {
            return Err(FlowError::Config(format!(
                "max_ratio = {max_ratio} must lie in (1, {MAX_STRETCH}]"
            )));
        }
        let cells = n_zeta - 1;
        let l_uni = zeta_split - zeta_min;
        let l_str = zeta_max - zeta_split;

        for n_uni in (1..cells).rev() {
            let n_str = cells - n_uni;
            let h = l_uni / n_uni as f64;
            let lo = h * n_str as f64;
            let hi = h * geometric_sum(max_ratio, n_str);
            if lo > l_str || hi < l_str {
                continue;
            }
            let q = solve_ratio(h, n_str, l_str, max_ratio);
            let mut zeta = Vec::with_capacity(n_zeta);
            for i in 0..=n_uni {
                zeta.push(zeta_min + h * i as f64);
            }
            // pin the split node exactly
            zeta[n_uni] = zeta_split;
            let mut z = zeta_split;
            let mut cell = h;
            for _ in 0..n_str {
                cell *= q;
                z += cell;
                zeta.push(z);
            }
            *zeta.last_mut().unwrap() = zeta_max;
            return Self::from_nodes(zeta, n_theta, zeta_split);
        }
        Err(FlowError::Config(format!(
            "cannot place {n_zeta} nodes on [{zeta_min}, {zeta_max}] with split {zeta_split} \
             and ratio <= {max_ratio}"
        )))
    }

    /// Uniform ζ spacing; the split is placed at the last interior node.
    pub fn uniform(zeta_min: f64, zeta_max: f64, n_zeta: usize, n_theta: usize) -> Result<Self> {
        if n_zeta < 3 {
            return Err(FlowError::Config(format!(
                "n_zeta = {n_zeta}, need at least 3 nodes"
            )));
        }
        let h = (zeta_max - zeta_min) / (n_zeta - 1) as f64;
        let mut zeta: Vec<f64> = (0..n_zeta).map(|i| zeta_min + h * i as f64).collect();
        zeta[n_zeta - 1] = zeta_max;
        let split = zeta[n_zeta - 2];
        Self::from_nodes(zeta, n_theta, split)
    }

    pub fn from_nodes(zeta: Vec<f64>, n_theta: usize, zeta_split: f64) -> Result<Self> {
        if zeta.len() < 3 {
            return Err(FlowError::Config(format!(
                "{} zeta nodes, need at least 3",
                zeta.len()
            )));
        }
        if n_theta == 0 {
            return Err(FlowError::Config("n_theta must be >= 1".into()));
        }
        if zeta.iter().any(|z| !z.is_finite()) || zeta.windows(2).any(|p| p[1] <= p[0]) {
            return Err(FlowError::Config(
                "zeta nodes must be finite and strictly increasing".into(),
            ));
        }
        let (lo, hi) = (zeta[0], zeta[zeta.len() - 1]);
        if !(lo < zeta_split && zeta_split < hi) {
            return Err(FlowError::Config(format!(
                "zeta_split = {zeta_split} must lie strictly inside ({lo}, {hi})"
            )));
        }
        Ok(CylGrid {
            zeta,
            n_theta,
            zeta_split,
        })
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn n_zeta(&self) -> usize {
        self.zeta.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn is_radial(&self) -> bool {
        self.n_theta == 1
    }

    pub fn zeta_min(&self) -> f64 {
        self.zeta[0]
    }

    pub fn zeta_max(&self) -> f64 {
        self.zeta[self.zeta.len() - 1]
    }

    pub fn zeta_split(&self) -> f64 {
        self.zeta_split
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.zeta.len(), self.n_theta)
    }

    /// θ spacing, `2π / n_theta`.
    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.dtheta() * j as f64
    }

    /// Weight of one θ column in θ integrals. Equals `2π` in radial mode.
    pub fn theta_weight(&self) -> f64 {
        self.dtheta()
    }

    /// Trapezoid weights in ζ.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let z = &self.zeta;
        let n = z.len();
        let mut wts = vec![0.0; n];
        for i in 0..n - 1 {
            let h = z[i + 1] - z[i];
            wts[i] += 0.5 * h;
            wts[i + 1] += 0.5 * h;
        }
        wts
    }

    /// Largest ratio between consecutive cell widths.
    pub fn stretch_ratio(&self) -> f64 {
        self.zeta
            .windows(3)
            .map(|w| (w[2] - w[1]) / (w[1] - w[0]))
            .fold(1.0, f64::max)
    }

    /// Index `i` with `zeta[i] <= z <= zeta[i + 1]`, or `None` outside the grid.
    pub fn locate(&self, z: f64) -> Option<usize> {
        let n = self.zeta.len();
        if !(z >= self.zeta[0] && z <= self.zeta[n - 1]) {
            return None;
        }
        let k = self.zeta.partition_point(|&x| x <= z);
        Some(k.saturating_sub(1).min(n - 2))
    }

    /// Same grid with a different θ resolution.
    pub fn with_n_theta(&self, n_theta: usize) -> Result<Self> {
        Self::from_nodes(self.zeta.clone(), n_theta, self.zeta_split)
    }
}

fn geometric_sum(q: f64, n: usize) -> f64 {
    (1..=n).map(|k| q.powi(k as i32)).sum()
}

fn solve_ratio(h: f64, n: usize, target: f64, q_max: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, q_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h * geometric_sum(mid, n) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_valid() {
        let g = CylGrid::new(&GridSpec::default()).unwrap();
        assert_eq!(g.n_zeta(), 512);
        assert_eq!(g.zeta_min(), -8.0);
        assert_eq!(g.zeta_max(), 60.0);
        assert!(g.stretch_ratio() <= MAX_STRETCH + 1e-12);
        assert!(g.zeta().windows(2).all(|p| p[1] > p[0]));
        assert!(g.zeta().contains(&54.0));
    }

    #[test]
    fn rejects_bad_specs() {
        let s = GridSpec {
            n_zeta: 2,
            ..GridSpec::default()
        };
        assert!(CylGrid::new(&s).is_err());
        let s = GridSpec {
            max_ratio: 1.5,
            ..GridSpec::default()
        };
        assert!(CylGrid::new(&s).is_err());
        let s = GridSpec {
            zeta_split: 70.0,
            ..GridSpec::default()
        };
        assert!(CylGrid::new(&s).is_err());
        assert!(CylGrid::from_nodes(vec![0.0, 1.0, 1.0, 2.0], 1, 0.5).is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let g = CylGrid::new(&GridSpec::default()).unwrap();
        let s: f64 = g.trapezoid_weights().iter().sum();
        assert!((s - 68.0).abs() < 1e-10);
    }

    #[test]
    fn locate_brackets() {
        let g = CylGrid::uniform(0.0, 1.0, 11, 1).unwrap();
        assert_eq!(g.locate(0.0), Some(0));
        assert_eq!(g.locate(1.0), Some(9));
        assert_eq!(g.locate(0.35), Some(3));
        assert_eq!(g.locate(1.01), None);
    }
}
