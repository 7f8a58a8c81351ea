//! Executable forms of the extinction estimates: curvature and width rates,
//! Aronson–Bénilan, radial monotonicity, the integrated Harnack inequality,
//! outer-region functionals and the area law.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, interp_values};
use crate::error::{FlowError, Result};
use crate::exact::Point;
use crate::field::FlowState;
use crate::rescale::{self, ProfileSnapshot};

/// Number of `(x, y)` pairs in the fixed monotonicity sample.
pub const MONOTONICITY_PAIRS: usize = 4096;

/// Quadrature nodes along a segment in [`segment_length`].
const SEGMENT_NODES: usize = 512;

/// One row of theory-vs-numerics scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub tau: f64,
    pub mass: f64,
    pub rmax: f64,
    pub rmax_scaled: f64,
    pub width: f64,
    pub width_scaled: f64,
    pub alpha: f64,
    pub xi_front: f64,
    pub origin_curv_scaled: f64,
    pub anisotropy: f64,
    pub ab_margin: f64,
    pub mono_violation: f64,
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 13] = [
        "t",
        "tau",
        "mass",
        "rmax",
        "rmax_scaled",
        "width",
        "width_scaled",
        "alpha",
        "xi_front",
        "origin_curv_scaled",
        "anisotropy",
        "ab_margin",
        "mono_violation",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.tau,
            self.mass,
            self.rmax,
            self.rmax_scaled,
            self.width,
            self.width_scaled,
            self.alpha,
            self.xi_front,
            self.origin_curv_scaled,
            self.anisotropy,
            self.ab_margin,
            self.mono_violation,
        ]
    }

    pub fn from_values(v: [f64; 13]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            tau: v[1],
            mass: v[2],
            rmax: v[3],
            rmax_scaled: v[4],
            width: v[5],
            width_scaled: v[6],
            alpha: v[7],
            xi_front: v[8],
            origin_curv_scaled: v[9],
            anisotropy: v[10],
            ab_margin: v[11],
            mono_violation: v[12],
        }
    }
}

/// Evaluates every record field on `state`.
pub fn record(state: &FlowState, t_ext: f64, rho: f64, xi_ref: f64) -> Result<DiagnosticsRecord> {
    if !(state.t < t_ext) {
        return Err(FlowError::PastExtinction {
            t: state.t,
            t_est: t_ext,
        });
    }
    let tau = 1.0 / (t_ext - state.t);
    let rmax = max_interior(&calculus::curvature(state));
    let width = width(state);
    let la = rescale::log_alpha(state, t_ext)?;
    Ok(DiagnosticsRecord {
        t: state.t,
        tau,
        mass: calculus::mass(state),
        rmax,
        rmax_scaled: rmax / (tau * tau),
        width,
        width_scaled: width * tau,
        alpha: la.exp(),
        xi_front: rescale::xi_front_from_log(la, tau),
        origin_curv_scaled: rescale::rescaled_origin_curvature(state, t_ext)?,
        anisotropy: rescale::anisotropy_at_zeta(state, tau * xi_ref)?,
        ab_margin: aronson_benilan(state),
        mono_violation: monotonicity_check(state, rho)?,
    })
}

fn max_interior(r: &ndarray::Array2<f64>) -> f64 {
    let nz = r.nrows();
    r.slice(ndarray::s![1..nz - 1, ..])
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `(T - t)² R_max`.
pub fn rmax_scaling(state: &FlowState, t_ext: f64) -> f64 {
    let d = t_ext - state.t;
    d * d * max_interior(&calculus::curvature(state))
}

/// Longest level curve `{|x| = e^ζ}`: `max_ζ ∫ e^{w/2} dθ`.
pub fn width(state: &FlowState) -> f64 {
    let dth = state.grid.theta_weight();
    state
        .w
        .values()
        .outer_iter()
        .map(|row| row.iter().map(|w| (0.5 * w).exp()).sum::<f64>() * dth)
        .fold(0.0, f64::max)
}

/// `min (R + 1/t)` over interior nodes.
pub fn aronson_benilan(state: &FlowState) -> f64 {
    let r = calculus::curvature(state);
    let nz = r.nrows();
    let min = r
        .slice(ndarray::s![1..nz - 1, ..])
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    min + 1.0 / state.t
}

/// `min (u/t - u_t) = min u (R + 1/t)` over interior nodes.
pub fn aronson_benilan_density(state: &FlowState) -> f64 {
    let r = calculus::curvature(state);
    let nz = r.nrows();
    let inv_t = 1.0 / state.t;
    let mut m = f64::INFINITY;
    for i in 1..nz - 1 {
        for j in 0..r.ncols() {
            m = m.min(state.u(i, j) * (r[[i, j]] + inv_t));
        }
    }
    m
}

/// A point pair `(x, y)` with `|y| >= |x| + ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonePair {
    pub x: Point,
    pub y: Point,
}

fn polar(p: Point) -> (f64, f64) {
    (p[1].atan2(p[0]), (p[0] * p[0] + p[1] * p[1]).sqrt())
}

/// `u` at a physical point, with `u` taken flat below the innermost row.
pub fn u_at_point(state: &FlowState, p: Point) -> Result<f64> {
    let (th, r) = polar(p);
    let grid = &state.grid;
    let zeta = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
    let zeta = zeta.max(grid.zeta_min());
    let w = interp_values(state.w.values(), grid, zeta, th)?;
    Ok((w - 2.0 * zeta).exp())
}

/// Deterministic quasi-random pair set covering the grid in log radius.
pub fn monotone_pairs(state: &FlowState, rho: f64, n: usize) -> Vec<MonotonePair> {
    let grid = &state.grid;
    let (z_lo, z_hi) = (grid.zeta_min(), grid.zeta_max());
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let a = halton(k, 2);
        let b = halton(k, 3);
        let c = halton(k, 5);
        let d = halton(k, 7);
        let zx = z_lo + a * (z_hi - z_lo);
        let rx = zx.exp();
        let ry_min = rx + rho;
        if ry_min.ln() >= z_hi {
            continue;
        }
        let zy = ry_min.ln() + b * (z_hi - ry_min.ln());
        let ry = zy.exp();
        let (tx, ty) = (2.0 * PI * c, 2.0 * PI * d);
        out.push(MonotonePair {
            x: [rx * tx.cos(), rx * tx.sin()],
            y: [ry * ty.cos(), ry * ty.sin()],
        });
    }
    out
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `max (u(y) - u(x))` over the given pairs; pairs with `|y| < |x| + ρ`
/// are skipped.
pub fn monotonicity_violation(state: &FlowState, rho: f64, pairs: &[MonotonePair]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for p in pairs {
        if polar(p.y).1 < polar(p.x).1 + rho {
            continue;
        }
        worst = worst.max(u_at_point(state, p.y)? - u_at_point(state, p.x)?);
    }
    Ok(worst)
}

/// [`monotonicity_violation`] over the fixed [`monotone_pairs`] sample.
pub fn monotonicity_check(state: &FlowState, rho: f64) -> Result<f64> {
    let pairs = monotone_pairs(state, rho, MONOTONICITY_PAIRS);
    monotonicity_violation(state, rho, &pairs)
}

/// Constants of the integrated Harnack inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnackConstants {
    pub e: f64,
    pub c1: f64,
    pub c2: f64,
}

impl HarnackConstants {
    /// `E = 1 + 2/T` from `R >= -1/t >= -2/T` on `[T/2, T)`.
    pub fn for_extinction(t_ext: f64, c1: f64, c2: f64) -> Result<Self> {
        Self::new(1.0 + 2.0 / t_ext, c1, c2)
    }

    pub fn new(e: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(e > 1.0) || !(c1 >= 0.0) || !(c2 >= 0.0) {
            return Err(FlowError::Domain(format!(
                "need E > 1 and C1, C2 >= 0, got {e}, {c1}, {c2}"
            )));
        }
        Ok(HarnackConstants { e, c1, c2 })
    }
}

/// Space-time pair: `x1` on `states[i1]`, `x2` on `states[i2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackPair {
    pub x1: Point,
    pub i1: usize,
    pub x2: Point,
    pub i2: usize,
}

/// Curvature at a physical point, interpolated from the node values.
pub fn curvature_at_point(state: &FlowState, p: Point) -> Result<f64> {
    let (th, r) = polar(p);
    let grid = &state.grid;
    let zeta = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
    let nz = grid.n_zeta();
    let rf = calculus::curvature(state);
    // spatial curvature is undefined on the boundary rows
    let (lo, hi) = if state.prev_w.is_some() {
        (grid.zeta_min(), grid.zeta_max())
    } else {
        (grid.zeta()[1], grid.zeta()[nz - 2])
    };
    interp_values(&rf, grid, zeta.clamp(lo, hi), th)
}

/// Metric length of the straight segment `x1 -> x2` under `u (dx² + dy²)`.
pub fn segment_length(state: &FlowState, x1: Point, x2: Point) -> Result<f64> {
    let dx = [x2[0] - x1[0], x2[1] - x1[1]];
    let len = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
    if len == 0.0 {
        return Ok(0.0);
    }
    let n = SEGMENT_NODES;
    let mut acc = 0.0;
    for k in 0..n {
        let s = (k as f64 + 0.5) / n as f64;
        let p = [x1[0] + s * dx[0], x1[1] + s * dx[1]];
        acc += u_at_point(state, p)?.sqrt();
    }
    Ok(acc * len / n as f64)
}

/// `LHS - RHS` of
/// `1/√(R(x1,t1)+E) >= 1/√(R(x2,t2)+E) - C1 (t2-t1) - C2 d²_{t1}(x1,x2)/(t2-t1)`.
pub fn harnack_gap(
    states: &[FlowState],
    pairs: &[HarnackPair],
    k: &HarnackConstants,
) -> Result<Vec<f64>> {
    harnack_terms(states, pairs, k.e)?
        .iter()
        .map(|h| Ok(h.gap(k.c1, k.c2)))
        .collect()
}

/// Per-pair pieces of the Harnack inequality, independent of `C1`, `C2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackTerms {
    pub lhs: f64,
    pub head: f64,
    pub dt: f64,
    pub dist2: f64,
}

impl HarnackTerms {
    pub fn gap(&self, c1: f64, c2: f64) -> f64 {
        self.lhs - (self.head - c1 * self.dt - c2 * self.dist2 / self.dt)
    }
}

pub fn harnack_terms(states: &[FlowState], pairs: &[HarnackPair], e: f64) -> Result<Vec<HarnackTerms>> {
    pairs
        .iter()
        .map(|p| {
            let (s1, s2) = match (states.get(p.i1), states.get(p.i2)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(FlowError::Config(format!(
                        "pair indices ({}, {}) outside {} states",
                        p.i1,
                        p.i2,
                        states.len()
                    )))
                }
            };
            let dt = s2.t - s1.t;
            if !(dt > 0.0) {
                return Err(FlowError::Domain(format!(
                    "need t2 > t1, got {} and {}",
                    s2.t, s1.t
                )));
            }
            let r1 = curvature_at_point(s1, p.x1)? + e;
            let r2 = curvature_at_point(s2, p.x2)? + e;
            if !(r1 > 0.0 && r2 > 0.0) {
                return Err(FlowError::Domain(format!(
                    "R + E not positive ({r1}, {r2})"
                )));
            }
            let d = segment_length(s1, p.x1, p.x2)?;
            Ok(HarnackTerms {
                lhs: 1.0 / r1.sqrt(),
                head: 1.0 / r2.sqrt(),
                dt,
                dist2: d * d,
            })
        })
        .collect()
}

/// Log lattice of candidate `C1`, `C2` values: 0 and `10^{k/2}`, `k = -8..=8`.
pub fn harnack_lattice() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-8..=8).map(|k| 10f64.powf(k as f64 / 2.0)))
        .collect()
}

/// First `(C1, C2)` on the lattice (ordered by `C1 + C2`) for which every gap
/// is at least `-tol`, with the smallest gap it achieves.
pub fn harnack_search(terms: &[HarnackTerms], tol: f64) -> Option<(f64, f64, f64)> {
    let lat = harnack_lattice();
    let mut cands: Vec<(f64, f64)> = lat
        .iter()
        .flat_map(|&a| lat.iter().map(move |&b| (a, b)))
        .collect();
    cands.sort_by(|p, q| (p.0 + p.1).partial_cmp(&(q.0 + q.1)).unwrap());
    cands.into_iter().find_map(|(c1, c2)| {
        let min = terms
            .iter()
            .map(|t| t.gap(c1, c2))
            .fold(f64::INFINITY, f64::min);
        (min >= -tol).then_some((c1, c2, min))
    })
}

/// Random Harnack pairs with `t1 < t2`: points log-uniform in radius within
/// `[e^{zeta_min}, r_max]`, uniform in angle.
pub fn sample_harnack_pairs(
    states: &[FlowState],
    n: usize,
    r_max: f64,
    seed: u64,
) -> Vec<HarnackPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if states.len() < 2 {
        return Vec::new();
    }
    let z_lo = states[0].grid.zeta_min();
    let z_hi = r_max.ln();
    let point = |rng: &mut ChaCha8Rng| -> Point {
        let z = rng.gen_range(z_lo..z_hi);
        let th = rng.gen_range(0.0..2.0 * PI);
        [z.exp() * th.cos(), z.exp() * th.sin()]
    };
    (0..n)
        .map(|_| {
            let i1 = rng.gen_range(0..states.len() - 1);
            let i2 = rng.gen_range(i1 + 1..states.len());
            let x1 = point(&mut rng);
            let x2 = point(&mut rng);
            HarnackPair { x1, i1, x2, i2 }
        })
        .collect()
}

/// `∫_η^∞ ∫_0^{2π} ṽ dθ dξ`: trapezoid on the snapshot ξ nodes, plus a cusp
/// tail `2π c / ξ_hi` beyond the last node, `c = ξ_hi² · mean_θ ṽ(ξ_hi)`.
pub fn tail_area(snap: &ProfileSnapshot, eta: f64) -> Result<f64> {
    let xi = &snap.xi;
    let n = xi.len();
    if n < 2 || !(eta >= xi[0] && eta < xi[n - 1]) {
        return Err(FlowError::Range {
            what: "eta",
            value: eta,
            lo: xi.first().copied().unwrap_or(f64::NAN),
            hi: xi.last().copied().unwrap_or(f64::NAN),
        });
    }
    let dth = 2.0 * PI / snap.n_theta as f64;
    let col = |vals: &[f64]| vals.iter().sum::<f64>() * dth;
    let start = col(&snap.outer_at(eta)?);
    let k0 = xi.partition_point(|&x| x <= eta);
    let mut area = 0.0;
    let mut prev = (eta, start);
    for (x, row) in xi.iter().zip(&snap.outer).skip(k0) {
        let cur = (*x, col(row));
        area += 0.5 * (cur.0 - prev.0) * (cur.1 + prev.1);
        prev = cur;
    }
    let edge = prev.1 / (2.0 * PI);
    area += 2.0 * PI * edge * xi[n - 1];
    Ok(area)
}

/// `∫_0^{2π} log ṽ(ξ, θ) dθ` by the periodic trapezoid rule.
pub fn log_theta_avg(snap: &ProfileSnapshot, xi: f64) -> Result<f64> {
    let vals = snap.outer_at(xi)?;
    if let Some(v) = vals.iter().find(|v| !(**v > 0.0)) {
        return Err(FlowError::Domain(format!("profile value {v} is not positive")));
    }
    let dth = 2.0 * PI / snap.n_theta as f64;
    Ok(vals.iter().map(|v| v.ln()).sum::<f64>() * dth)
}

/// `max_θ ṽ(ξ, θ) / min_θ ṽ(ξ, θ)`.
pub fn anisotropy(snap: &ProfileSnapshot, xi: f64) -> Result<f64> {
    rescale::ratio(&snap.outer_at(xi)?)
}

/// Largest `w - log(2t / (ζ - ζ0)²)` over nodes with `ζ > ζ0`: positive
/// when the state rises above the cusp with its pole on `|x| = e^{ζ0}`.
pub fn cusp_excess(state: &FlowState, zeta0: f64) -> f64 {
    let w = state.w.values();
    let mut worst = f64::NEG_INFINITY;
    for (i, &z) in state.grid.zeta().iter().enumerate() {
        if z <= zeta0 {
            continue;
        }
        let bound = (2.0 * state.t).ln() - 2.0 * (z - zeta0).ln();
        for &x in w.row(i) {
            worst = worst.max(x - bound);
        }
    }
    worst
}

/// Largest relative deviation from `M(t) = M(t0) - 4π (t - t0)`, and the
/// record where it occurs.
pub fn mass_audit(records: &[DiagnosticsRecord]) -> Result<(f64, usize)> {
    if records.len() < 2 {
        return Err(FlowError::InsufficientData(format!(
            "{} records, need at least 2",
            records.len()
        )));
    }
    let (m0, t0) = (records[0].mass, records[0].t);
    Ok(records
        .iter()
        .enumerate()
        .map(|(k, r)| ((r.mass - m0 + 4.0 * PI * (r.t - t0)).abs() / m0, k))
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LogField;
    use crate::grid::CylGrid;

    fn state(nz: usize, nt: usize, f: impl Fn(f64, f64) -> f64) -> FlowState {
        let g = CylGrid::uniform(-8.0, 12.0, nz, nt).unwrap();
        let w = LogField::from_fn(&g, f).unwrap();
        FlowState::new(g, w, 0.5).unwrap()
    }

    #[test]
    fn cusp_lies_on_its_own_bound() {
        let s = state(81, 1, |z, _| (2.0 * 0.5f64).ln() - 2.0 * (z + 9.0).ln());
        assert!(cusp_excess(&s, -9.0).abs() < 1e-14);
        assert!(cusp_excess(&s, -8.5) < 0.0);
    }

    #[test]
    fn constant_field_width() {
        let c: f64 = 3.0;
        let s = state(41, 1, |_, _| c.ln());
        assert!((width(&s) - 2.0 * PI * c.sqrt()).abs() < 1e-12);
        let s = state(41, 16, |_, _| c.ln());
        assert!((width(&s) - 2.0 * PI * c.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn flat_state_curvature_scaling() {
        let s = state(41, 1, |_, _| 0.3);
        assert_eq!(rmax_scaling(&s, 1.0), 0.0);
    }

    #[test]
    fn radial_nonincreasing_has_no_violation() {
        let s = state(81, 1, |z, _| 2.0 * z - (1.0 + (2.0 * z).exp()).ln());
        assert!(monotonicity_check(&s, 1.0).unwrap() <= 0.0);
    }

    #[test]
    fn constructed_violation_is_reported() {
        // u = 0.2 for r < 1 and 0.3 beyond: u(y) - u(x) = 0.1
        let s = state(81, 8, |z, _| 2.0 * z + if z < 0.5 { 0.2f64 } else { 0.3 }.ln());
        let pair = MonotonePair {
            x: [0.1f64.exp(), 0.0],
            y: [0.0, 3.0f64.exp()],
        };
        let v = monotonicity_violation(&s, 1.0, &[pair]).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
    }

    #[test]
    fn synthetic_mass_law() {
        let mk = |t: f64, m: f64| DiagnosticsRecord::from_values([t, 0.0, m, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let m0 = 4.0 * PI;
        let mut recs: Vec<_> = (0..10)
            .map(|k| {
                let t = 0.01 + 0.05 * k as f64;
                mk(t, m0 - 4.0 * PI * (t - 0.01))
            })
            .collect();
        assert!(mass_audit(&recs).unwrap().0 < 1e-15);
        recs[6].mass += 0.5;
        let (dev, at) = mass_audit(&recs).unwrap();
        assert_eq!(at, 6);
        assert!((dev - 0.5 / m0).abs() < 1e-12);
        assert!(mass_audit(&recs[..1]).is_err());
    }

    #[test]
    fn degenerate_harnack_pair() {
        let s1 = state(81, 1, |z, _| 2.0 * z - (1.0 + (2.0 * z).exp()).ln());
        let mut s2 = s1.clone();
        s2.t += 1e-3;
        let k = HarnackConstants::for_extinction(1.0, 2.0, 1.0).unwrap();
        let p = HarnackPair {
            x1: [0.3, 0.1],
            i1: 0,
            x2: [0.3, 0.1],
            i2: 1,
        };
        let g = harnack_gap(&[s1.clone(), s2.clone()], &[p], &k).unwrap();
        assert!((g[0] - 2.0 * 1e-3).abs() < 1e-12);
        let back = HarnackPair { i1: 1, i2: 0, ..p };
        assert!(harnack_gap(&[s1, s2], &[back], &k).is_err());
    }
}
