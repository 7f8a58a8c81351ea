//! Closed-form solutions and steady states of `u_t = Δ log u`, and the
//! centred finite-difference residuals used to check them.

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

pub type Point = [f64; 2];

fn norm2(y: Point) -> f64 {
    y[0] * y[0] + y[1] * y[1]
}

/// Cigar soliton parameters: `U = 1/(λ|y|² + e^{4λ̄τ})`.
///
/// `U` solves `U_τ = Δ log U` exactly iff `lambda == lambda_bar`; the two are
/// kept separate so fitted values can be compared against each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub lambda: f64,
    pub lambda_bar: f64,
}

impl SolitonParams {
    pub fn new(lambda: f64, lambda_bar: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda_bar > 0.0) {
            return Err(FlowError::Domain(format!(
                "soliton needs lambda, lambda_bar > 0, got {lambda}, {lambda_bar}"
            )));
        }
        Ok(SolitonParams { lambda, lambda_bar })
    }

    /// The limit soliton for extinction time `T`: `λ = λ̄ = T/2`.
    pub fn limit(t_ext: f64) -> Result<Self> {
        Self::new(0.5 * t_ext, 0.5 * t_ext)
    }
}

/// Time offset `A` of the logarithmic cusp `2(t + A)/(r² log² r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspParams {
    pub offset: f64,
}

impl CuspParams {
    pub fn new(offset: f64) -> Result<Self> {
        if !(offset >= 0.0) {
            return Err(FlowError::Domain(format!("cusp offset {offset} must be >= 0")));
        }
        Ok(CuspParams { offset })
    }
}

pub fn cigar(y: Point, tau: f64, p: &SolitonParams) -> f64 {
    1.0 / (p.lambda * norm2(y) + (4.0 * p.lambda_bar * tau).exp())
}

/// `log` of [`cigar`], evaluated without forming the exponential ratio.
pub fn log_cigar_radial(r: f64, tau: f64, p: &SolitonParams) -> f64 {
    -(p.lambda * r * r + (4.0 * p.lambda_bar * tau).exp()).ln()
}

pub fn cusp(r: f64, t: f64, p: &CuspParams) -> Result<f64> {
    if !(r > 1.0) {
        return Err(FlowError::Domain(format!("cusp needs r > 1, got {r}")));
    }
    let l = r.ln();
    Ok(2.0 * (t + p.offset) / (r * r * l * l))
}

/// `1/((T/2)|y|² + 1)`, the inner extinction profile.
pub fn inner_profile_limit(y: Point, t_ext: f64) -> Result<f64> {
    if !(t_ext > 0.0) {
        return Err(FlowError::Domain(format!("T = {t_ext} must be positive")));
    }
    Ok(1.0 / (0.5 * t_ext * norm2(y) + 1.0))
}

/// `2T/ξ²` for `ξ > T`, `0` for `ξ < T`; undefined at the jump `ξ = T`.
pub fn outer_profile_limit(xi: f64, t_ext: f64) -> Result<f64> {
    if xi == t_ext {
        return Err(FlowError::UndefinedPoint(xi));
    }
    if xi > t_ext {
        Ok(2.0 * t_ext / (xi * xi))
    } else {
        Ok(0.0)
    }
}

fn positive(u: f64, x: Point, t: f64) -> Result<f64> {
    if u > 0.0 && u.is_finite() {
        Ok(u)
    } else {
        Err(FlowError::Domain(format!(
            "oracle sample u({:?}, {t}) = {u} is not positive",
            x
        )))
    }
}

/// Centred estimate of `u_t - Δ log u` at `(x, t)`: five-point Laplacian at
/// spacing `h`, centred time difference at step `dt`.
pub fn pde_residual<F>(sampler: F, x: Point, t: f64, h: f64, dt: f64) -> Result<f64>
where
    F: Fn(Point, f64) -> f64,
{
    if !(h > 0.0 && dt > 0.0) {
        return Err(FlowError::Domain(format!("need h, dt > 0, got {h}, {dt}")));
    }
    let s = |p: Point, tt: f64| positive(sampler(p, tt), p, tt);
    let u_t = (s(x, t + dt)? - s(x, t - dt)?) / (2.0 * dt);
    let c = s(x, t)?.ln();
    let e = s([x[0] + h, x[1]], t)?.ln();
    let wst = s([x[0] - h, x[1]], t)?.ln();
    let n = s([x[0], x[1] + h], t)?.ln();
    let so = s([x[0], x[1] - h], t)?.ln();
    let lap = (e + wst + n + so - 4.0 * c) / (h * h);
    Ok(u_t - lap)
}

/// Centred estimate of `Δ log U + T ∇·(y U)` for a steady profile.
pub fn inner_steady_residual<F>(profile: F, y: Point, t_ext: f64, h: f64) -> Result<f64>
where
    F: Fn(Point) -> f64,
{
    if !(h > 0.0) {
        return Err(FlowError::Domain(format!("need h > 0, got {h}")));
    }
    let s = |p: Point| positive(profile(p), p, 0.0);
    let c = s(y)?;
    let e = s([y[0] + h, y[1]])?;
    let wst = s([y[0] - h, y[1]])?;
    let n = s([y[0], y[1] + h])?;
    let so = s([y[0], y[1] - h])?;
    let lap = (e.ln() + wst.ln() + n.ln() + so.ln() - 4.0 * c.ln()) / (h * h);
    let div = ((y[0] + h) * e - (y[0] - h) * wst) / (2.0 * h)
        + ((y[1] + h) * n - (y[1] - h) * so) / (2.0 * h);
    Ok(lap + t_ext * div)
}

/// Centred estimate of `ξ V_ξ + 2V` for a profile of one variable.
pub fn outer_steady_residual<F>(profile: F, xi: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(h > 0.0) {
        return Err(FlowError::Domain(format!("need h > 0, got {h}")));
    }
    let d = (profile(xi + h) - profile(xi - h)) / (2.0 * h);
    Ok(xi * d + 2.0 * profile(xi))
}

/// Closed forms with a finite-difference convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactCase {
    Cigar,
    Cusp,
    InnerSteady,
    OuterSteady,
}

impl ExactCase {
    pub const ALL: [ExactCase; 4] = [
        ExactCase::Cigar,
        ExactCase::Cusp,
        ExactCase::InnerSteady,
        ExactCase::OuterSteady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExactCase::Cigar => "cigar",
            ExactCase::Cusp => "cusp",
            ExactCase::InnerSteady => "inner-steady",
            ExactCase::OuterSteady => "outer-steady",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Largest residual over the fixed sample points at spacing `h`
    /// (and time step `h` for the evolution cases).
    pub fn residual(self, h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        match self {
            ExactCase::Cigar => {
                let p = SolitonParams::new(0.5, 0.5)?;
                for (x, t) in [([0.7, 0.2], 0.1), ([1.3, -0.4], 0.3), ([0.0, 0.9], -0.2)] {
                    worst = worst.max(pde_residual(|y, s| cigar(y, s, &p), x, t, h, h)?.abs());
                }
            }
            ExactCase::Cusp => {
                let p = CuspParams::new(3.0)?;
                let f = |y: Point, s: f64| cusp(norm2(y).sqrt(), s, &p).unwrap_or(f64::NAN);
                for (x, t) in [([1.6, 0.5], 0.5), ([-2.0, 1.1], 1.0), ([0.3, -2.5], 0.2)] {
                    worst = worst.max(pde_residual(f, x, t, h, h)?.abs());
                }
            }
            ExactCase::InnerSteady => {
                let f = |y: Point| inner_profile_limit(y, 1.0).unwrap_or(f64::NAN);
                for y in [[0.3, 0.4], [1.2, -0.5], [-0.8, 1.7]] {
                    worst = worst.max(inner_steady_residual(f, y, 1.0, h)?.abs());
                }
            }
            ExactCase::OuterSteady => {
                let f = |xi: f64| outer_profile_limit(xi, 1.0).unwrap_or(f64::NAN);
                for xi in [1.5, 2.2, 3.1] {
                    worst = worst.max(outer_steady_residual(f, xi, h)?.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// One level of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub residual: f64,
    /// `log2` of the residual ratio to the previous level.
    pub order: Option<f64>,
}

/// Accepted range of measured orders for a second-order oracle.
pub const ORDER_RANGE: (f64, f64) = (1.7, 2.3);

/// Residuals at `h0, h0/2, ..., h0/2^refinements`.
pub fn convergence_study(case: ExactCase, h0: f64, refinements: usize) -> Result<Vec<ConvergenceRow>> {
    if refinements < 2 {
        return Err(FlowError::Config(format!(
            "need at least 2 refinements, got {refinements}"
        )));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(refinements + 1);
    for k in 0..=refinements {
        let h = h0 / (1u64 << k) as f64;
        let residual = case.residual(h)?;
        let order = rows.last().and_then(|prev| {
            (prev.residual > 0.0 && residual > 0.0).then(|| (prev.residual / residual).log2())
        });
        rows.push(ConvergenceRow { h, residual, order });
    }
    Ok(rows)
}

/// Every measured order lies in [`ORDER_RANGE`], or the residual vanishes
/// identically.
pub fn study_passes(rows: &[ConvergenceRow]) -> bool {
    if rows.iter().all(|r| r.residual == 0.0) {
        return true;
    }
    rows.iter().skip(1).all(|r| {
        r.order
            .is_some_and(|o| o >= ORDER_RANGE.0 && o <= ORDER_RANGE.1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cigar_values() {
        let p = SolitonParams::new(0.5, 0.5).unwrap();
        assert_eq!(cigar([0.0, 0.0], 0.0, &p), 1.0);
        assert!((cigar([1.0, 0.0], 0.0, &p) - 2.0 / 3.0).abs() < 1e-15);
        assert!((cigar([0.0, 0.0], 0.3, &p) - (-0.6f64).exp()).abs() < 1e-15);
        assert!(SolitonParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn cusp_values() {
        let p = CuspParams::new(0.0).unwrap();
        let e = std::f64::consts::E;
        assert!((cusp(e, 1.0, &p).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(cusp(1.0, 1.0, &p).is_err());
        assert!(cusp(0.5, 1.0, &p).is_err());
        assert!(CuspParams::new(-1.0).is_err());
    }

    #[test]
    fn limit_profiles() {
        assert_eq!(inner_profile_limit([0.0, 0.0], 1.0).unwrap(), 1.0);
        assert!((inner_profile_limit([1.0, 1.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(inner_profile_limit([0.0, 0.0], 0.0).is_err());
        assert_eq!(outer_profile_limit(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(outer_profile_limit(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(
            outer_profile_limit(1.0, 1.0),
            Err(FlowError::UndefinedPoint(1.0))
        );
    }

    #[test]
    fn residual_of_space_time_constant_is_zero() {
        let r = pde_residual(|_, _| 3.5, [0.2, -0.1], 1.0, 1e-3, 1e-3).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn residual_rejects_nonpositive_samples() {
        let r = pde_residual(|x, _| x[0], [0.0, 0.0], 1.0, 0.1, 0.1);
        assert!(matches!(r, Err(FlowError::Domain(_))));
    }

    #[test]
    fn all_cases_are_second_order() {
        for case in ExactCase::ALL {
            let rows = convergence_study(case, 0.02, 3).unwrap();
            assert!(study_passes(&rows), "{case:?}: {rows:?}");
            assert_eq!(ExactCase::parse(case.name()), Some(case));
        }
        assert!(convergence_study(ExactCase::Cigar, 0.02, 1).is_err());
    }

    #[test]
    fn collapsed_outer_branch_has_zero_residual() {
        let f = |xi: f64| outer_profile_limit(xi, 1.0).unwrap();
        for xi in [0.2, 0.5, 0.8] {
            assert_eq!(outer_steady_residual(f, xi, 0.01).unwrap(), 0.0);
        }
    }

    #[test]
    fn mismatched_soliton_rates_are_not_solutions() {
        let p = SolitonParams::new(0.5, 0.8).unwrap();
        let r = pde_residual(|x, t| cigar(x, t, &p), [0.7, 0.2], 0.1, 1e-3, 1e-3).unwrap();
        assert!(r.abs() > 1e-2);
    }
}
