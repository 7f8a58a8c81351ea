//! Inner (cigar) and outer (cylindrical front) rescalings of a state.
//!
//! With `τ = 1/(T - t)`:
//!
//! * inner: `ũ(y, τ) = α τ² u(α^{1/2} y, t)` with `α = [τ² u(0, t)]⁻¹`, so
//!   `ũ(0) = 1`;
//! * outer: `ṽ(ξ, θ, τ) = τ² v(τ ξ, θ, t)`.
//!
//! All large quantities are carried as logarithms: at `τ = 50` the origin
//! value `u(0, t)` is of order `e^{-100}`.

use serde::{Deserialize, Serialize};

use crate::calculus::{self, interp_values};
use crate::error::{FlowError, Result};
use crate::field::FlowState;
use crate::grid::CylGrid;

/// Smallest number of radii accepted by [`fit_lambda`].
pub const MIN_FIT_POINTS: usize = 8;

/// Rescaled profiles at one τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSnapshot {
    pub tau: f64,
    pub t: f64,
    pub t_est: f64,
    pub alpha: f64,
    pub log_alpha: f64,
    /// Radii of the inner profile, starting at 0.
    pub y: Vec<f64>,
    /// θ-averaged `ũ` on `y`.
    pub inner: Vec<f64>,
    pub xi: Vec<f64>,
    pub n_theta: usize,
    /// `ṽ` indexed `[ξ][θ]`.
    pub outer: Vec<Vec<f64>>,
    pub lambda_fit: Option<f64>,
    pub lambda_residual: Option<f64>,
    /// `max_θ ṽ / min_θ ṽ` at `xi_ref`.
    pub anisotropy: f64,
    pub xi_ref: f64,
}

/// Sampling of a [`ProfileSnapshot`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapshotSpec {
    pub y_max: f64,
    pub n_y: usize,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub n_xi: usize,
    /// Reference ξ for the anisotropy ratio, in units of `T`.
    pub xi_ref_over_t: f64,
}

impl Default for SnapshotSpec {
    fn default() -> Self {
        SnapshotSpec {
            y_max: 3.0,
            n_y: 61,
            xi_lo: 0.25,
            xi_hi: 5.0,
            n_xi: 400,
            xi_ref_over_t: 1.5,
        }
    }
}

fn tau_of(state: &FlowState, t_ext: f64) -> Result<f64> {
    if !(state.t < t_ext) {
        return Err(FlowError::PastExtinction {
            t: state.t,
            t_est: t_ext,
        });
    }
    Ok(1.0 / (t_ext - state.t))
}

/// `log u(0, t)` from the innermost row, as a log-mean-exp over θ.
pub fn log_u_origin(state: &FlowState) -> f64 {
    let z0 = state.grid.zeta_min();
    let row = state.w.values().row(0);
    let logs: Vec<f64> = row.iter().map(|w| w - 2.0 * z0).collect();
    log_mean_exp(&logs)
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + (s / xs.len() as f64).ln()
}

/// `log α = -2 log τ - log u(0, t)`.
pub fn log_alpha(state: &FlowState, t_ext: f64) -> Result<f64> {
    let tau = tau_of(state, t_ext)?;
    let lu = log_u_origin(state);
    if !lu.is_finite() {
        return Err(FlowError::Degenerate("u(0, t) is not positive".into()));
    }
    Ok(-2.0 * tau.ln() - lu)
}

/// `α(τ) = [τ² u(0, t)]⁻¹`.
pub fn alpha(state: &FlowState, t_ext: f64) -> Result<f64> {
    let u0 = calculus::u_at_origin(state).value;
    if !(u0 > 0.0) {
        return Err(FlowError::Degenerate(format!("u(0, t) = {u0} is not positive")));
    }
    Ok(log_alpha(state, t_ext)?.exp())
}

/// Front position `ξ(τ) = log α / (2τ)`.
pub fn xi_front(alpha: f64, tau: f64) -> f64 {
    alpha.ln() / (2.0 * tau)
}

pub fn xi_front_from_log(log_alpha: f64, tau: f64) -> f64 {
    log_alpha / (2.0 * tau)
}

/// `ũ(y)` (θ-averaged) on the radii `y_grid`. Radii below the innermost row
/// take the origin value 1.
pub fn inner_profile(state: &FlowState, t_ext: f64, y_grid: &[f64]) -> Result<Vec<f64>> {
    let la = log_alpha(state, t_ext)?;
    let lu0 = log_u_origin(state);
    let grid = &state.grid;
    let w = state.w.values();
    let half = 0.5 * la;
    let y_reach = (grid.zeta_max() - half).exp();
    let nt = grid.n_theta();
    y_grid
        .iter()
        .map(|&y| {
            if y < 0.0 {
                return Err(FlowError::Domain(format!("radius {y} is negative")));
            }
            if y == 0.0 {
                return Ok(1.0);
            }
            let zeta = half + y.ln();
            if zeta > grid.zeta_max() {
                return Err(FlowError::Range {
                    what: "y",
                    value: y,
                    lo: 0.0,
                    hi: y_reach,
                });
            }
            let zeta = zeta.max(grid.zeta_min());
            let mut acc = 0.0;
            for j in 0..nt {
                let wv = interp_values(w, grid, zeta, grid.theta(j))?;
                acc += (wv - 2.0 * zeta - lu0).exp();
            }
            Ok(acc / nt as f64)
        })
        .collect()
}

/// Largest `y` whose rescaled radius still lies on the grid.
pub fn inner_reach(state: &FlowState, t_ext: f64) -> Result<f64> {
    Ok((state.grid.zeta_max() - 0.5 * log_alpha(state, t_ext)?).exp())
}

/// Least-squares fit of `1/ũ - 1 = λ |y|²` through the origin, uniform
/// weights. Returns `(λ, relative residual)`.
pub fn fit_lambda(y: &[f64], profile: &[f64]) -> Result<(f64, f64)> {
    if y.len() != profile.len() {
        return Err(FlowError::Config(format!(
            "{} radii but {} profile values",
            y.len(),
            profile.len()
        )));
    }
    if y.len() < MIN_FIT_POINTS {
        return Err(FlowError::InsufficientData(format!(
            "{} radii, need at least {MIN_FIT_POINTS}",
            y.len()
        )));
    }
    if let Some(p) = profile.iter().find(|p| !(**p > 0.0)) {
        return Err(FlowError::Domain(format!("profile value {p} is not positive")));
    }
    let (mut syy, mut syq, mut sqq) = (0.0, 0.0, 0.0);
    for (&yy, &p) in y.iter().zip(profile) {
        let y2 = yy * yy;
        let q = 1.0 / p - 1.0;
        syy += y2 * y2;
        syq += y2 * q;
        sqq += q * q;
    }
    if syy == 0.0 || sqq.sqrt() <= 1e-12 * y.len() as f64 {
        return Err(FlowError::Degenerate(
            "profile carries no curvature information (rank deficient fit)".into(),
        ));
    }
    let lambda = syq / syy;
    let rss: f64 = y
        .iter()
        .zip(profile)
        .map(|(&yy, &p)| {
            let e = 1.0 / p - 1.0 - lambda * yy * yy;
            e * e
        })
        .sum();
    Ok((lambda, (rss / sqq).sqrt()))
}

/// `ṽ(ξ, θ_j) = τ² e^{w(τξ, θ_j)}` on the θ nodes, indexed `[ξ][θ]`.
pub fn outer_profile(state: &FlowState, t_ext: f64, xi_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let tau = tau_of(state, t_ext)?;
    let grid = &state.grid;
    let w = state.w.values();
    let l2 = 2.0 * tau.ln();
    xi_grid
        .iter()
        .map(|&xi| {
            let zeta = tau * xi;
            if grid.locate(zeta).is_none() {
                return Err(FlowError::Range {
                    what: "xi",
                    value: xi,
                    lo: grid.zeta_min() / tau,
                    hi: grid.zeta_max() / tau,
                });
            }
            (0..grid.n_theta())
                .map(|j| Ok((interp_values(w, grid, zeta, grid.theta(j))? + l2).exp()))
                .collect()
        })
        .collect()
}

/// `(T - t)² R` averaged over θ on the first interior row.
pub fn rescaled_origin_curvature(state: &FlowState, t_ext: f64) -> Result<f64> {
    let tau = tau_of(state, t_ext)?;
    let r = calculus::curvature(state);
    let row = r.row(1);
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    Ok(mean / (tau * tau))
}

/// `max_θ v / min_θ v` at `ζ` (clamped into the grid).
pub fn anisotropy_at_zeta(state: &FlowState, zeta: f64) -> Result<f64> {
    let grid = &state.grid;
    let zeta = zeta.clamp(grid.zeta_min(), grid.zeta_max());
    let vals: Vec<f64> = (0..grid.n_theta())
        .map(|j| interp_values(state.w.values(), grid, zeta, grid.theta(j)).map(f64::exp))
        .collect::<Result<_>>()?;
    ratio(&vals)
}

pub(crate) fn ratio(vals: &[f64]) -> Result<f64> {
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0) {
        return Err(FlowError::Degenerate(format!("min over θ is {lo}")));
    }
    Ok(hi / lo)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Builds the inner and outer profiles of `state`. The requested ξ and y
/// ranges are clipped to what the grid can reach at this τ.
pub fn snapshot(state: &FlowState, t_ext: f64, spec: &SnapshotSpec) -> Result<ProfileSnapshot> {
    let tau = tau_of(state, t_ext)?;
    let la = log_alpha(state, t_ext)?;
    let grid: &CylGrid = &state.grid;

    let y_max = spec.y_max.min(inner_reach(state, t_ext)? * (1.0 - 1e-12));
    let y = linspace(0.0, y_max, spec.n_y.max(2));
    let inner = inner_profile(state, t_ext, &y)?;
    let (lambda_fit, lambda_residual) = match fit_lambda(&y, &inner) {
        Ok((l, r)) => (Some(l), Some(r)),
        Err(_) => (None, None),
    };

    let xi_lo = spec.xi_lo.max(grid.zeta_min() / tau);
    let xi_hi = spec.xi_hi.min(grid.zeta_max() / tau);
    let xi = if xi_hi > xi_lo {
        linspace(xi_lo, xi_hi, spec.n_xi.max(2))
    } else {
        Vec::new()
    };
    let outer = outer_profile(state, t_ext, &xi)?;
    let xi_ref = spec.xi_ref_over_t * t_ext;
    let anisotropy = anisotropy_at_zeta(state, tau * xi_ref)?;

    Ok(ProfileSnapshot {
        tau,
        t: state.t,
        t_est: t_ext,
        alpha: la.exp(),
        log_alpha: la,
        y,
        inner,
        xi,
        n_theta: grid.n_theta(),
        outer,
        lambda_fit,
        lambda_residual,
        anisotropy,
        xi_ref,
    })
}

impl ProfileSnapshot {
    pub fn to_text(&self) -> String {
        crate::textio::to_json_sig17(self).expect("snapshot serialises")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FlowError::Format(e.to_string()))
    }

    /// `ṽ(ξ, θ_j)` at arbitrary ξ by linear interpolation between ξ nodes.
    pub fn outer_at(&self, xi: f64) -> Result<Vec<f64>> {
        let n = self.xi.len();
        if n < 2 || !(xi >= self.xi[0] && xi <= self.xi[n - 1]) {
            return Err(FlowError::Range {
                what: "xi",
                value: xi,
                lo: self.xi.first().copied().unwrap_or(f64::NAN),
                hi: self.xi.last().copied().unwrap_or(f64::NAN),
            });
        }
        let k = self.xi.partition_point(|&x| x <= xi).saturating_sub(1).min(n - 2);
        let a = (xi - self.xi[k]) / (self.xi[k + 1] - self.xi[k]);
        Ok(self.outer[k]
            .iter()
            .zip(&self.outer[k + 1])
            .map(|(lo, hi)| (1.0 - a) * lo + a * hi)
            .collect())
    }
}
