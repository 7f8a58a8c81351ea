//! End-to-end acceptance suite: one PASS/FAIL line per criterion.
//!
//! Three desk-scale runs are shared between the criteria:
//! a radial disk of area 4π followed to τ = 50, a radial disk of the same
//! area on `B_e` followed to τ = 12 for the outer region, and a two-bump
//! datum on a 384 x 64 grid followed to τ = 12.

use std::f64::consts::E;
use std::time::Instant;

// Written straight to the stderr handle so the lines survive libtest's
// output capture.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stderr(), $($t)*);
    }};
}

use cuspflow::checks::{evaluate, CheckKind, CheckOutcome, RunView, Tolerances, Verdict};
use cuspflow::diagnostics::cusp_excess;
use cuspflow::exact::{convergence_study, study_passes, ExactCase};
use cuspflow::solver::{init_state, run_observed, InitialDatum, Outcome, RunSpec, Trajectory};
use cuspflow::{CylGrid, GridSpec};

const T0: f64 = 1e-6;
const SEED: u64 = 20240611;

struct Observed {
    traj: Trajectory,
    /// Largest excess over the cusp across every recorded state.
    cusp_excess: f64,
    seconds: f64,
}

fn execute(spec: &RunSpec) -> Observed {
    let clock = Instant::now();
    let state = init_state(&spec.datum, &CylGrid::new(&spec.grid).unwrap()).unwrap();
    let z0 = spec.datum.rho.ln();
    let mut excess = f64::NEG_INFINITY;
    let traj = run_observed(spec, state, |s, _| excess = excess.max(cusp_excess(s, z0))).unwrap();
    assert_eq!(traj.outcome, Outcome::Completed);
    Observed {
        traj,
        cusp_excess: excess,
        seconds: clock.elapsed().as_secs_f64(),
    }
}

fn radial_inner() -> RunSpec {
    let mut s = RunSpec::new(InitialDatum::disk(4.0, 1.0, T0));
    s.grid = GridSpec::default();
    s.policy.sigma = 5e-4;
    s.policy.tau_schedule = vec![5.0, 10.0, 12.0, 20.0, 30.0, 50.0];
    s.keep_states = true;
    s
}

fn radial_outer() -> RunSpec {
    let mut s = RunSpec::new(InitialDatum::disk(4.0 / (E * E), E, T0));
    s.policy.sigma = 5e-4;
    s.policy.tau_schedule = vec![5.0, 10.0, 12.0];
    s
}

fn two_bumps() -> RunSpec {
    let mut s = RunSpec::new(InitialDatum::two_bumps(24.0, 1.0, [[0.5, 0.0], [-0.5, 0.0]], T0));
    s.grid = GridSpec {
        n_zeta: 384,
        n_theta: 64,
        ..GridSpec::default()
    };
    s.policy.sigma = 2e-3;
    s.policy.tau_schedule = vec![2.0, 3.0, 5.0, 8.0, 12.0];
    s.record_stride = 20;
    s
}

fn view<'a>(o: &'a Observed, rho: f64) -> RunView<'a> {
    RunView {
        t_est: o.traj.t_est,
        rho,
        records: &o.traj.records,
        snapshots: &o.traj.snapshots,
        states: &o.traj.states,
        seed: SEED,
    }
}

fn show(o: &CheckOutcome) -> String {
    let vals: Vec<String> = o.measured.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
    format!("{} [{:?}] {}", o.check.name(), o.verdict, vals.join(" "))
}

fn line(n: usize, ok: bool, what: &str, detail: &str) -> bool {
    say!("criterion {n}: {} — {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

#[test]
fn acceptance() {
    say!();
    let tol = Tolerances::default();
    let mut all = true;

    // 1: second-order residuals of the closed forms
    let clock = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for case in ExactCase::ALL {
        let rows = convergence_study(case, 0.02, 3).unwrap();
        ok &= study_passes(&rows);
        let orders: Vec<String> = rows
            .iter()
            .filter_map(|r| r.order.map(|o| format!("{o:.3}")))
            .collect();
        detail.push(format!("{} orders [{}]", case.name(), orders.join(", ")));
    }
    detail.push(format!("{:.2}s", clock.elapsed().as_secs_f64()));
    all &= line(1, ok, "exact-solution residual orders in [1.7, 2.3]", &detail.join("; "));

    let a = execute(&radial_inner());
    let va = view(&a, 1.0);
    say!(
        "  radial run: T_est={:.6} steps={} rejected={} final τ={:.3} {:.1}s",
        a.traj.t_est,
        a.traj.steps,
        a.traj.rejected,
        a.traj.final_tau(),
        a.seconds
    );
    assert!(a.traj.final_tau() >= 50.0 * (1.0 - 1e-9));

    // 2: area law
    let m = evaluate(CheckKind::MassLaw, &va, &tol);
    all &= line(2, m.verdict == Verdict::Pass, "mass law within 1%", &show(&m));

    // 3: Type II curvature rate
    let c = evaluate(CheckKind::CurvatureRate, &va, &tol);
    all &= line(3, c.verdict == Verdict::Pass, "(T-t)²R_max band and R(0) limit", &show(&c));

    // 4: width rate
    let w = evaluate(CheckKind::WidthRate, &va, &tol);
    all &= line(4, w.verdict == Verdict::Pass, "Wτ in a fixed positive band", &show(&w));

    // 5: inner profile
    let i = evaluate(CheckKind::InnerProfile, &va, &tol);
    all &= line(5, i.verdict == Verdict::Pass, "cigar limit at τ = 50", &show(&i));

    // 6: outer profile
    let b = execute(&radial_outer());
    let vb = view(&b, E);
    say!(
        "  outer run: T_est={:.6} steps={} final τ={:.3} {:.1}s",
        b.traj.t_est,
        b.traj.steps,
        b.traj.final_tau(),
        b.seconds
    );
    let o = evaluate(CheckKind::OuterProfile, &vb, &tol);
    all &= line(6, o.verdict == Verdict::Pass, "cusp limit at τ = 12", &show(&o));

    // 7: non-radial datum
    let c2 = execute(&two_bumps());
    let vc = view(&c2, 1.0);
    say!(
        "  two-bumps run: T_est={:.6} steps={} final τ={:.3} {:.1}s",
        c2.traj.t_est,
        c2.traj.steps,
        c2.traj.final_tau(),
        c2.seconds
    );
    let mono = evaluate(CheckKind::Monotonicity, &vc, &tol);
    let aniso = evaluate(CheckKind::Anisotropy, &vc, &tol);
    let ok = mono.verdict == Verdict::Pass && aniso.verdict == Verdict::Pass;
    all &= line(
        7,
        ok,
        "two-bumps monotonicity and decaying anisotropy",
        &format!("{}; {}", show(&mono), show(&aniso)),
    );

    // 8: inequality suite, on every recorded state of all three runs
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, v) in [("radial", &va), ("outer", &vb), ("two-bumps", &vc)] {
        let ab = evaluate(CheckKind::AronsonBenilan, v, &tol);
        ok &= ab.verdict == Verdict::Pass;
        parts.push(format!("{name} {}", show(&ab)));
    }
    for (name, o) in [("radial", &a), ("outer", &b), ("two-bumps", &c2)] {
        ok &= o.cusp_excess <= tol.cusp_comparison;
        parts.push(format!("{name} cusp excess {:.3e}", o.cusp_excess));
    }
    let h = evaluate(CheckKind::Harnack, &va, &tol);
    ok &= h.verdict == Verdict::Pass;
    parts.push(show(&h));
    all &= line(8, ok, "Aronson–Bénilan, cusp comparison, Harnack", &parts.join("; "));

    assert!(all, "acceptance criteria failed");
}
