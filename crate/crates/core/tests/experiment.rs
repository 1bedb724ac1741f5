use decay_bounds::construction::ConstructionConfig;
use decay_bounds::experiment::{
    bounds_report, closed_form_factors, fit_exponent, ols, scaling_run, RList, ScaleSpec, ScalingBudget,
};
use decay_bounds::rational::q;
use decay_bounds::{Rational, Surface};
use proptest::prelude::*;

#[test]
fn short_paraboloid_sweep() {
    let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None).unwrap();
    let scales: Vec<ScaleSpec> = [16, 18, 20, 22].iter().map(|&e| ScaleSpec::R(2f64.powi(e))).collect();
    let budget = ScalingBudget {
        x_samples: 300,
        mc_samples: 20_000,
        ..ScalingBudget::default()
    };
    let t = scaling_run(&cfg, &scales, budget, 5).unwrap();
    assert!(t.rows.iter().all(|r| r.ok()));
    assert!(t.rows.windows(2).all(|w| w[0].r < w[1].r));
    let fit = fit_exponent(&t).unwrap();
    assert_eq!(fit.target_slope, q(-2, 3));
    assert!(fit.within(0.15), "{fit:?}");
    for f in closed_form_factors(&t) {
        assert!((0.25..4.0).contains(&f));
    }
    let again = scaling_run(&cfg, &scales, budget, 5).unwrap();
    let (mut a, mut b) = (vec![], vec![]);
    t.write_csv(&mut a).unwrap();
    again.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn over_cap_rows_are_kept_as_failures() {
    let cfg = ConstructionConfig::new(Surface::Sphere, 4, 1, Rational::int(3), None).unwrap();
    let t = scaling_run(&cfg, &[ScaleSpec::N(50)], ScalingBudget::default(), 1).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(!t.rows[0].ok());
    assert!(fit_exponent(&t).is_err());
}

#[test]
fn bounds_report_flags_out_of_domain() {
    let rows = bounds_report(Surface::Sphere, 4, &[Rational::int(1), Rational::int(3)]);
    assert!(rows[0].error.is_some() && rows[0].new_upper.is_none());
    assert_eq!(rows[1].new_upper, Some(q(7, 3)));
}

proptest! {
    #[test]
    fn ols_recovers_exact_lines(slope in -3.0f64..3.0, icept in -50.0f64..50.0, n in 4usize..20) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let x = 10.0 + 1.3 * i as f64;
            (x, icept + slope * x)
        }).collect();
        let (s, c, se, res) = ols(&pts).unwrap();
        prop_assert!((s - slope).abs() < 1e-9);
        prop_assert!((c - icept).abs() < 1e-7);
        prop_assert!(se < 1e-6 && res < 1e-7);
    }

    #[test]
    fn geometric_r_lists(a in 1u32..20, steps in 0u32..8, f in 1u32..4) {
        let s = format!("2^{a}:2^{}:2^{f}", a + steps * f);
        let r: RList = s.parse().unwrap();
        prop_assert_eq!(r.0.len(), steps as usize + 1);
        prop_assert!(r.0.windows(2).all(|w| (w[1] / w[0] - 2f64.powi(f as i32)).abs() < 1e-9));
    }
}
