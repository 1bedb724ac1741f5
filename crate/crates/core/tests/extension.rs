use decay_bounds::construction::{build_lambda, build_omega, ConstructionConfig, ConstructionParams};
use decay_bounds::extension::{reduce_mod_2pi, verify_phase, ExtensionEvaluator, PhaseContext, PHASE_WINDOW};
use decay_bounds::sampling::task_rng;
use decay_bounds::{Rational, Surface};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn parab(r: f64) -> ConstructionParams {
    ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)
        .unwrap()
        .at_r(r)
        .unwrap()
}

fn sphere(n: u64) -> ConstructionParams {
    ConstructionConfig::new(Surface::Sphere, 4, 1, Rational::int(3), None)
        .unwrap()
        .at_lattice_radius(n, 1e13)
        .unwrap()
}

/// Surface point for a quadrature node given in chart coordinates.
fn lift(surface: Surface, xi: &[f64]) -> Vec<f64> {
    match surface {
        Surface::Sphere => xi.to_vec(),
        Surface::Paraboloid => {
            let mut v = xi.to_vec();
            v.push(xi.iter().map(|t| t * t).sum());
            v
        }
    }
}

/// Straight f64 sum of w·e^{iRx·ξ}, usable while R·|x| is small.
fn direct_sum(ev: &ExtensionEvaluator, x: &[f64]) -> Complex64 {
    let q = &ev.quadrature;
    let mut total = Complex64::new(0.0, 0.0);
    for (node, &w) in q.nodes.iter().zip(&q.weights) {
        if w == 0.0 {
            continue;
        }
        let xi = lift(ev.params.surface(), &node.coords(&ev.patches));
        let phase: f64 = ev.params.r * x.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>();
        total += Complex64::from_polar(w, phase);
    }
    total * ev.normalization()
}

#[test]
fn extension_matches_direct_sum_at_small_r() {
    for p in [parab(2f64.powi(12)), sphere(1)] {
        let ev = ExtensionEvaluator::new(&p, 32, 4).unwrap();
        let mut rng = task_rng(17, 0);
        for _ in 0..10 {
            let x = ev.lambda.sample(&mut rng).unwrap();
            let got = ev.value_at(&x).value;
            let want = direct_sum(&ev, &x.coords(&ev.lambda));
            assert!((got - want).norm() <= 1e-7 * want.norm().max(1e-300), "{got} vs {want}");
        }
    }
}

#[test]
fn modulus_stays_near_the_origin_value() {
    for p in [parab(2f64.powi(20)), parab(2f64.powi(28)), sphere(2)] {
        let ev = ExtensionEvaluator::new(&p, 64, 1).unwrap();
        let at_zero = ev.value_at_coords(&vec![0.0; p.d()]).unwrap();
        assert!((at_zero.modulus_ratio - 1.0).abs() < 1e-12);
        let mut rng = task_rng(3, 0);
        for _ in 0..50 {
            let x = ev.lambda.sample(&mut rng).unwrap();
            assert!(ev.value_at(&x).modulus_ratio >= PHASE_WINDOW.cos() - 0.02);
        }
    }
}

#[test]
fn phase_window_holds_and_cross_check_agrees() {
    for p in [parab(2f64.powi(20)), parab(2f64.powi(26)), sphere(1), sphere(3)] {
        let rep = verify_phase(&p, 2000, 8).unwrap();
        assert!(rep.max_deviation < PHASE_WINDOW);
        assert!(rep.max_bound_ratio <= 1.0);
        if p.r <= 1e8 {
            assert!(rep.max_mismatch.unwrap() < 1e-8);
        }
    }
}

proptest! {
    #[test]
    fn reduction_lands_in_half_open_interval(x in -1e9f64..1e9) {
        let r = reduce_mod_2pi(x);
        prop_assert!(r > -PI && r <= PI);
        let k = (x - r) / TAU;
        prop_assert!((k - k.round()).abs() < 1e-6);
    }

    #[test]
    fn residuals_obey_their_bounds(e in 12i32..34, seed in 0u64..10_000, sph in any::<bool>()) {
        let p = if sph { sphere(1 + (e as u64 % 3)) } else { parab(2f64.powi(e)) };
        let lambda = build_lambda(&p);
        let omega = build_omega(&p).unwrap();
        let ctx = PhaseContext::new(&p);
        let mut rng = task_rng(seed, 2);
        for _ in 0..20 {
            let x = lambda.sample(&mut rng).unwrap();
            let xi = omega.sample(&mut rng).unwrap();
            let dec = ctx.decompose(&x, &xi);
            let total: f64 = dec.residuals.iter().map(|r| r.bound).sum();
            for r in &dec.residuals {
                prop_assert!(r.value.abs() <= r.bound, "{} = {} > {}", r.name, r.value, r.bound);
            }
            prop_assert!(dec.deviation() <= total);
            prop_assert!((dec.residual_sum() - ctx.residual_sum(&x, &xi)).abs() < 1e-15);
        }
    }
}
