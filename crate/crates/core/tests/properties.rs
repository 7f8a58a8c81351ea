use cuspflow::calculus::{curvature_field, interp, laplacian_c, mass};
use cuspflow::{CylGrid, FlowState, GridSpec, LogField};
use proptest::prelude::*;

fn stretched(n_zeta: usize, n_theta: usize) -> CylGrid {
    CylGrid::new(&GridSpec {
        n_zeta,
        n_theta,
        zeta_min: -6.0,
        zeta_split: 10.0,
        zeta_max: 30.0,
        ..GridSpec::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, k in 1usize..4, n in 64usize..160) {
        let g = stretched(n, 8);
        let f = LogField::from_fn(&g, |z, th| (0.3 * z).sin() + (k as f64 * th).cos()).unwrap();
        let h = LogField::from_fn(&g, |z, th| 0.01 * z * z * th.sin()).unwrap();
        let mix = LogField::from_fn(&g, |z, th| {
            a * ((0.3 * z).sin() + (k as f64 * th).cos()) + b * 0.01 * z * z * th.sin()
        })
        .unwrap();
        let (lf, lh, lm) = (
            laplacian_c(&f, &g).unwrap(),
            laplacian_c(&h, &g).unwrap(),
            laplacian_c(&mix, &g).unwrap(),
        );
        for ((x, y), m) in lf.values().iter().zip(lh.values()).zip(lm.values()) {
            prop_assert!((a * x + b * y - m).abs() <= 1e-9 * (1.0 + m.abs()));
        }
    }

    #[test]
    fn laplacian_annihilates_affine_in_zeta(c0 in -5.0..5.0f64, c1 in -3.0..3.0f64, n in 40usize..200) {
        let g = stretched(n, 4);
        let w = LogField::from_fn(&g, |z, _| c0 + c1 * z).unwrap();
        let l = laplacian_c(&w, &g).unwrap();
        for x in l.values() {
            prop_assert!(x.abs() <= 1e-10);
        }
    }

    #[test]
    fn interpolation_reproduces_affine_in_zeta(c0 in -5.0..5.0f64, c1 in -3.0..3.0f64, z in -6.0..30.0f64, th in 0.0..std::f64::consts::TAU) {
        let g = stretched(120, 6);
        let w = LogField::from_fn(&g, |zz, _| c0 + c1 * zz).unwrap();
        let v = interp(&w, &g, z, th).unwrap();
        prop_assert!((v - (c0 + c1 * z)).abs() <= 1e-11 * (1.0 + v.abs()));
    }

    #[test]
    fn mass_is_monotone_in_w(bump in 0.0..1.0f64, i in 1usize..100, j in 0usize..4) {
        let g = stretched(100, 4);
        let w = LogField::from_fn(&g, |z, th| 2.0 * z.min(0.0) - 2.0 * (1.0 + z.max(0.0)).ln() + 0.1 * th.cos()).unwrap();
        let base = FlowState::new(g.clone(), w.clone(), 0.5).unwrap();
        let mut raised = w;
        raised.values_mut()[[i.min(99), j]] += bump;
        let up = FlowState::new(g, raised, 0.5).unwrap();
        prop_assert!(mass(&up) >= mass(&base));
    }

    /// `u = 4a²/(1 + a²r²)²` is a round sphere with `R = 2` for every `a`.
    #[test]
    fn curvature_of_round_spheres(log_a in -1.5..1.5f64) {
        let g = CylGrid::uniform(-6.0, 6.0, 481, 1).unwrap();
        let w = LogField::from_fn(&g, |z, _| {
            let a2r2 = (2.0 * (log_a + z)).exp();
            (4.0f64).ln() + 2.0 * log_a + 2.0 * z - 2.0 * a2r2.ln_1p()
        })
        .unwrap();
        let s = FlowState::new(g, w, 1.0).unwrap();
        let r = curvature_field(&s);
        for i in 1..480 {
            prop_assert!((r[[i, 0]] - 2.0).abs() <= 2e-3, "R = {} at row {i}", r[[i, 0]]);
        }
    }
}
