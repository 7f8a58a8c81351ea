//! Verdicts comparing a finished trajectory with the asymptotic predictions.
//! Every check is a pure function of the records, snapshots and saved
//! states, so a report can be rebuilt from disk.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    cusp_excess, harnack_search, harnack_terms, log_theta_avg, mass_audit,
    sample_harnack_pairs, tail_area, DiagnosticsRecord, HarnackConstants,
};
use crate::error::{FlowError, Result};
use crate::exact::inner_profile_limit;
use crate::field::FlowState;
use crate::rescale::ProfileSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    MassLaw,
    CurvatureRate,
    WidthRate,
    InnerProfile,
    OuterProfile,
    Anisotropy,
    Monotonicity,
    AronsonBenilan,
    CuspComparison,
    Harnack,
}

impl CheckKind {
    pub const ALL: [CheckKind; 10] = [
        CheckKind::MassLaw,
        CheckKind::CurvatureRate,
        CheckKind::WidthRate,
        CheckKind::InnerProfile,
        CheckKind::OuterProfile,
        CheckKind::Anisotropy,
        CheckKind::Monotonicity,
        CheckKind::AronsonBenilan,
        CheckKind::CuspComparison,
        CheckKind::Harnack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::MassLaw => "mass-law",
            CheckKind::CurvatureRate => "curvature-rate",
            CheckKind::WidthRate => "width-rate",
            CheckKind::InnerProfile => "inner-profile",
            CheckKind::OuterProfile => "outer-profile",
            CheckKind::Anisotropy => "anisotropy",
            CheckKind::Monotonicity => "monotonicity",
            CheckKind::AronsonBenilan => "aronson-benilan",
            CheckKind::CuspComparison => "cusp-comparison",
            CheckKind::Harnack => "harnack",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not evaluable from the data at hand (too little τ, missing snapshot).
    Flag,
}

/// Tolerances and evaluation windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative deviation from the linear area law.
    pub mass_law: f64,
    /// `(T-t)² R_max` must stay in `[lo·T, hi·T]`.
    pub rmax_band: [f64; 2],
    /// Relative tolerance of `(T-t)² R(0)` against `2T`.
    pub origin_curvature: f64,
    /// `W τ` must stay in this multiple band of `2π √(2/T)`.
    pub width_band: [f64; 2],
    /// Sup distance of the inner profile to the cigar on `|y| <= y_max`.
    pub inner_profile: f64,
    pub lambda: f64,
    /// Relative tolerance of `d log α / dτ` against `2T`.
    pub log_alpha: f64,
    /// Pointwise relative error of the outer profile, and of its functionals.
    pub outer_profile: f64,
    /// Upper bound on `ṽ(T/2)`.
    pub outer_collapse: f64,
    pub anisotropy: f64,
    pub monotonicity: f64,
    pub aronson_benilan: f64,
    pub cusp_comparison: f64,
    /// Slack allowed on the Harnack gap.
    pub harnack: f64,
    /// `τ` window of the rate checks.
    pub rate_window: [f64; 2],
    /// `τ` of the inner-profile snapshot.
    pub inner_tau: f64,
    /// `τ` of the outer-profile snapshot.
    pub outer_tau: f64,
    pub harnack_pairs: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_law: 0.01,
            rmax_band: [1.0, 6.0],
            origin_curvature: 0.15,
            width_band: [0.5, 1.5],
            inner_profile: 0.05,
            lambda: 0.05,
            log_alpha: 0.10,
            outer_profile: 0.10,
            outer_collapse: 0.05,
            anisotropy: 1.1,
            monotonicity: 1e-3,
            aronson_benilan: 1e-3,
            cusp_comparison: 1e-6,
            harnack: 0.0,
            rate_window: [10.0, 50.0],
            inner_tau: 50.0,
            outer_tau: 12.0,
            harnack_pairs: 100,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_law", self.mass_law),
            ("origin_curvature", self.origin_curvature),
            ("inner_profile", self.inner_profile),
            ("lambda", self.lambda),
            ("log_alpha", self.log_alpha),
            ("outer_profile", self.outer_profile),
            ("outer_collapse", self.outer_collapse),
            ("anisotropy", self.anisotropy),
            ("monotonicity", self.monotonicity),
            ("aronson_benilan", self.aronson_benilan),
            ("cusp_comparison", self.cusp_comparison),
            ("inner_tau", self.inner_tau),
            ("outer_tau", self.outer_tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FlowError::Config(format!("tolerance {name} = {v} must be > 0")));
            }
        }
        if !(self.harnack >= 0.0) {
            return Err(FlowError::Config(format!(
                "tolerance harnack = {} must be >= 0",
                self.harnack
            )));
        }
        for (name, [lo, hi]) in [
            ("rmax_band", self.rmax_band),
            ("width_band", self.width_band),
            ("rate_window", self.rate_window),
        ] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(FlowError::Config(format!(
                    "{name} = [{lo}, {hi}] must satisfy 0 < lo < hi"
                )));
            }
        }
        if self.harnack_pairs == 0 {
            return Err(FlowError::Config("harnack_pairs must be >= 1".into()));
        }
        Ok(())
    }
}

/// What a check can see of a run.
#[derive(Debug, Clone, Copy)]
pub struct RunView<'a> {
    pub t_est: f64,
    /// Radius of a disk containing the initial support.
    pub rho: f64,
    pub records: &'a [DiagnosticsRecord],
    pub snapshots: &'a [ProfileSnapshot],
    /// Saved states, in time order.
    pub states: &'a [FlowState],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: CheckKind,
    pub verdict: Verdict,
    /// Named measured values, for the report.
    pub measured: Vec<(String, f64)>,
    pub note: String,
}

impl CheckOutcome {
    fn new(check: CheckKind, ok: bool, measured: Vec<(&str, f64)>, note: String) -> Self {
        CheckOutcome {
            check,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            measured: measured.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            note,
        }
    }

    fn flag(check: CheckKind, note: String) -> Self {
        CheckOutcome {
            check,
            verdict: Verdict::Flag,
            measured: Vec::new(),
            note,
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Snapshot at `tau`, matched to a relative `1e-9`.
pub fn snapshot_at(snaps: &[ProfileSnapshot], tau: f64) -> Option<&ProfileSnapshot> {
    snaps.iter().find(|s| (s.tau - tau).abs() <= 1e-9 * tau)
}

fn final_tau(view: &RunView) -> f64 {
    view.records.last().map_or(0.0, |r| r.tau)
}

fn insufficient(check: CheckKind, need: f64, have: f64) -> CheckOutcome {
    CheckOutcome::flag(
        check,
        format!("insufficient τ: reached {have:.4}, need {need}"),
    )
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn evaluate(check: CheckKind, view: &RunView, tol: &Tolerances) -> CheckOutcome {
    match evaluate_inner(check, view, tol) {
        Ok(o) => o,
        Err(e) => CheckOutcome::flag(check, e.to_string()),
    }
}

fn evaluate_inner(check: CheckKind, view: &RunView, tol: &Tolerances) -> Result<CheckOutcome> {
    let te = view.t_est;
    let recs = view.records;
    let reached = final_tau(view);
    let [w_lo, w_hi] = tol.rate_window;
    let window = || recs.iter().filter(move |r| r.tau >= w_lo * (1.0 - 1e-9) && r.tau <= w_hi * (1.0 + 1e-9));
    Ok(match check {
        CheckKind::MassLaw => {
            let (dev, at) = mass_audit(recs)?;
            CheckOutcome::new(
                check,
                dev <= tol.mass_law,
                vec![("max_rel_deviation", dev), ("at_t", recs[at].t)],
                format!("max |M - M(t0) + 4π(t - t0)| / M(t0) <= {}", tol.mass_law),
            )
        }
        CheckKind::CurvatureRate => {
            if reached < w_hi * (1.0 - 1e-9) {
                return Ok(insufficient(check, w_hi, reached));
            }
            let (lo, hi) = window().fold((f64::INFINITY, f64::NEG_INFINITY), |a, r| {
                (a.0.min(r.rmax_scaled), a.1.max(r.rmax_scaled))
            });
            let last = window().next_back().expect("window reaches the end");
            let origin_err = (last.origin_curv_scaled - 2.0 * te).abs() / (2.0 * te);
            let in_band = lo >= tol.rmax_band[0] * te && hi <= tol.rmax_band[1] * te;
            CheckOutcome::new(
                check,
                in_band && origin_err <= tol.origin_curvature,
                vec![
                    ("rmax_scaled_min", lo),
                    ("rmax_scaled_max", hi),
                    ("origin_curv_scaled", last.origin_curv_scaled),
                    ("two_t_est", 2.0 * te),
                    ("origin_rel_error", origin_err),
                ],
                format!(
                    "(T-t)²R_max in [{}T, {}T] on τ ∈ [{w_lo}, {w_hi}]; (T-t)²R(0) within {} of 2T",
                    tol.rmax_band[0], tol.rmax_band[1], tol.origin_curvature
                ),
            )
        }
        CheckKind::WidthRate => {
            if reached < w_hi * (1.0 - 1e-9) {
                return Ok(insufficient(check, w_hi, reached));
            }
            let scale = 2.0 * PI * (2.0 / te).sqrt();
            let vals: Vec<f64> = window().map(|r| r.width_scaled).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let first = vals.first().copied().unwrap_or(f64::NAN);
            let last = vals.last().copied().unwrap_or(f64::NAN);
            CheckOutcome::new(
                check,
                lo >= tol.width_band[0] * scale && hi <= tol.width_band[1] * scale,
                vec![
                    ("width_scaled_min", lo),
                    ("width_scaled_max", hi),
                    ("width_scaled_first", first),
                    ("width_scaled_last", last),
                    ("cigar_width", scale),
                ],
                format!(
                    "Wτ in [{}, {}] x 2π√(2/T) on τ ∈ [{w_lo}, {w_hi}]",
                    tol.width_band[0], tol.width_band[1]
                ),
            )
        }
        CheckKind::InnerProfile => {
            let Some(snap) = snapshot_at(view.snapshots, tol.inner_tau) else {
                return Ok(if reached < tol.inner_tau * (1.0 - 1e-9) {
                    insufficient(check, tol.inner_tau, reached)
                } else {
                    CheckOutcome::flag(check, format!("no snapshot at τ = {}", tol.inner_tau))
                });
            };
            let mut sup: f64 = 0.0;
            for (y, u) in snap.y.iter().zip(&snap.inner) {
                sup = sup.max((u - inner_profile_limit([*y, 0.0], te)?).abs());
            }
            let lam = snap.lambda_fit.unwrap_or(f64::NAN);
            let lam_err = (lam - 0.5 * te).abs() / (0.5 * te);
            // growth rate of log α over the last decade of τ
            let decade: Vec<&DiagnosticsRecord> = recs
                .iter()
                .filter(|r| r.tau >= 0.1 * snap.tau * (1.0 - 1e-9) && r.tau <= snap.tau * (1.0 + 1e-9))
                .collect();
            let taus: Vec<f64> = decade.iter().map(|r| r.tau).collect();
            let las: Vec<f64> = decade.iter().map(|r| r.alpha.ln()).collect();
            let rate = slope(&taus, &las).unwrap_or(f64::NAN);
            let rate_err = (rate - 2.0 * te).abs() / (2.0 * te);
            let ratio = snap.log_alpha / snap.tau;
            CheckOutcome::new(
                check,
                sup <= tol.inner_profile && lam_err <= tol.lambda && rate_err <= tol.log_alpha,
                vec![
                    ("sup_distance", sup),
                    ("lambda_fit", lam),
                    ("half_t_est", 0.5 * te),
                    ("lambda_rel_error", lam_err),
                    ("log_alpha_rate", rate),
                    ("two_t_est", 2.0 * te),
                    ("log_alpha_rate_rel_error", rate_err),
                    ("log_alpha_over_tau", ratio),
                ],
                format!(
                    "at τ = {:.4}: sup |ũ - cigar| <= {}, λ within {} of T/2, d log α/dτ within {} of 2T",
                    snap.tau, tol.inner_profile, tol.lambda, tol.log_alpha
                ),
            )
        }
        CheckKind::OuterProfile => {
            let Some(snap) = snapshot_at(view.snapshots, tol.outer_tau) else {
                return Ok(if reached < tol.outer_tau * (1.0 - 1e-9) {
                    insufficient(check, tol.outer_tau, reached)
                } else {
                    CheckOutcome::flag(check, format!("no snapshot at τ = {}", tol.outer_tau))
                });
            };
            let mut sup: f64 = 0.0;
            for (k, &x) in snap.xi.iter().enumerate() {
                if x >= te + 0.3 && x <= 3.0 {
                    let lim = 2.0 * te / (x * x);
                    for v in &snap.outer[k] {
                        sup = sup.max((v - lim).abs() / lim);
                    }
                }
            }
            let collapse = snap
                .outer_at(0.5 * te)?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut tail_err: f64 = 0.0;
            for eta in [1.5, 2.0, 2.5, 3.0] {
                let lim = 4.0 * PI * te / eta;
                tail_err = tail_err.max((tail_area(snap, eta)? - lim).abs() / lim);
            }
            let mut theta_err: f64 = 0.0;
            for xi in [2.0, 2.5, 3.0] {
                let lim = 2.0 * PI * (2.0 * te / (xi * xi)).ln();
                theta_err = theta_err.max((log_theta_avg(snap, xi)? - lim).abs() / lim.abs());
            }
            let t = tol.outer_profile;
            CheckOutcome::new(
                check,
                sup <= t && collapse <= tol.outer_collapse && tail_err <= t && theta_err <= t,
                vec![
                    ("sup_rel_error", sup),
                    ("v_at_half_t", collapse),
                    ("tail_area_rel_error", tail_err),
                    ("log_theta_avg_rel_error", theta_err),
                ],
                format!(
                    "at τ = {:.4}: ṽ vs 2T/ξ² on [T+0.3, 3], tail area vs 4πT/η on [1.5, 3], \
                     θ-averaged log ṽ vs 2π log(2T/ξ²) on [2, 3], all within {t}; ṽ(T/2) <= {}",
                    snap.tau, tol.outer_collapse
                ),
            )
        }
        CheckKind::Anisotropy => {
            if view.snapshots.len() < 2 {
                return Ok(CheckOutcome::flag(
                    check,
                    format!("{} snapshots, need at least 2", view.snapshots.len()),
                ));
            }
            let a: Vec<f64> = view.snapshots.iter().map(|s| s.anisotropy).collect();
            let nonincreasing = a.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-9));
            let last = *a.last().expect("two snapshots");
            CheckOutcome::new(
                check,
                nonincreasing && last <= tol.anisotropy,
                vec![("first", a[0]), ("last", last)],
                format!(
                    "max/min over θ of ṽ at ξ = 1.5T nonincreasing over snapshots, final <= {}",
                    tol.anisotropy
                ),
            )
        }
        CheckKind::Monotonicity => {
            let worst = recs.iter().map(|r| r.mono_violation).fold(f64::NEG_INFINITY, f64::max);
            CheckOutcome::new(
                check,
                worst <= tol.monotonicity,
                vec![("max_violation", worst)],
                format!("u(x) >= u(y) outside B_ρ with |x| < |y|, to {}", tol.monotonicity),
            )
        }
        CheckKind::AronsonBenilan => {
            // the datum itself is not smoothed; the estimate holds for t > t0
            let worst = recs.iter().skip(1).map(|r| r.ab_margin).fold(f64::INFINITY, f64::min);
            CheckOutcome::new(
                check,
                worst >= -tol.aronson_benilan,
                vec![("min_margin", worst)],
                format!("min (R + 1/t) >= -{} after the datum", tol.aronson_benilan),
            )
        }
        CheckKind::CuspComparison => {
            if view.states.is_empty() {
                return Ok(CheckOutcome::flag(check, "no saved states".into()));
            }
            let z0 = view.rho.ln();
            let worst = view
                .states
                .iter()
                .map(|s| cusp_excess(s, z0))
                .fold(f64::NEG_INFINITY, f64::max);
            CheckOutcome::new(
                check,
                worst <= tol.cusp_comparison,
                vec![("max_log_excess", worst)],
                format!(
                    "log v <= log(2t/(ζ - log ρ)²) outside B_ρ, to {}",
                    tol.cusp_comparison
                ),
            )
        }
        CheckKind::Harnack => {
            if view.states.len() < 2 {
                return Ok(CheckOutcome::flag(
                    check,
                    format!("{} saved states, need at least 2", view.states.len()),
                ));
            }
            let e = HarnackConstants::for_extinction(te, 1.0, 1.0)?.e;
            let r_max = view.rho.max(1.0) * 3.0;
            let pairs = sample_harnack_pairs(view.states, tol.harnack_pairs, r_max, view.seed);
            let terms = harnack_terms(view.states, &pairs, e)?;
            let found = harnack_search(&terms, tol.harnack);
            let (c1, c2, gap) = found.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            CheckOutcome::new(
                check,
                found.is_some(),
                vec![
                    ("e", e),
                    ("c1", c1),
                    ("c2", c2),
                    ("min_gap", gap),
                    ("pairs", pairs.len() as f64),
                ],
                "some lattice (C1, C2) makes every sampled gap nonnegative".into(),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(tau: f64, te: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: te - 1.0 / tau,
            tau,
            mass: 4.0 * PI * (1.0 / tau),
            rmax: 2.0 * te * tau * tau,
            rmax_scaled: 2.0 * te,
            width: 8.0 / tau,
            width_scaled: 8.0,
            alpha: (2.0 * te * tau).exp(),
            xi_front: te,
            origin_curv_scaled: 2.0 * te,
            anisotropy: 1.0,
            ab_margin: 0.1,
            mono_violation: 0.0,
        }
    }

    #[test]
    fn early_stop_flags_asymptotic_checks() {
        let recs: Vec<_> = [1.5, 2.0, 3.0, 5.0].iter().map(|t| rec(*t, 1.0)).collect();
        let view = RunView {
            t_est: 1.0,
            rho: 1.0,
            records: &recs,
            snapshots: &[],
            states: &[],
            seed: 1,
        };
        let tol = Tolerances::default();
        for c in [CheckKind::CurvatureRate, CheckKind::WidthRate, CheckKind::InnerProfile] {
            let o = evaluate(c, &view, &tol);
            assert_eq!(o.verdict, Verdict::Flag, "{c:?}");
            assert!(o.note.contains("insufficient τ"), "{}", o.note);
        }
        let m = evaluate(CheckKind::MassLaw, &view, &tol);
        assert_eq!(m.verdict, Verdict::Pass);
    }

    #[test]
    fn band_violation_fails() {
        let mut recs: Vec<_> = (10..=50).map(|t| rec(t as f64, 1.0)).collect();
        recs[5].rmax_scaled = 7.0;
        let view = RunView {
            t_est: 1.0,
            rho: 1.0,
            records: &recs,
            snapshots: &[],
            states: &[],
            seed: 1,
        };
        let o = evaluate(CheckKind::CurvatureRate, &view, &Tolerances::default());
        assert_eq!(o.verdict, Verdict::Fail);
        assert_eq!(o.value("rmax_scaled_max"), Some(7.0));
    }

    #[test]
    fn names_round_trip_and_slope_is_exact() {
        for c in CheckKind::ALL {
            assert_eq!(CheckKind::parse(c.name()), Some(c));
        }
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        assert!((slope(&x, &y).unwrap() - 3.0).abs() < 1e-14);
        assert!(Tolerances::default().validate().is_ok());
    }
}
