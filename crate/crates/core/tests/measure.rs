use decay_bounds::construction::{build_lambda, CellBlock, ConstructionConfig, SlabSet};
use decay_bounds::measure::{
    c_alpha_oracle, measure_grid, mu_ball, r_grid, regime_table, verify_kappa_balances, FractalMeasure,
    OracleBudget,
};
use decay_bounds::rational::q;
use decay_bounds::sampling::task_rng;
use decay_bounds::{Rational, Surface};
use proptest::prelude::*;
use rand::Rng;

/// Area of {|p − x| < r} ∩ [−a, a] × [−b, b], by a midpoint grid.
fn rect_disk_area(a: f64, b: f64, x: [f64; 2], r: f64) -> f64 {
    let n = 2000;
    let (hx, hy) = (2.0 * a / n as f64, 2.0 * b / n as f64);
    let mut count = 0usize;
    for i in 0..n {
        let px = -a + (i as f64 + 0.5) * hx;
        for j in 0..n {
            let py = -b + (j as f64 + 0.5) * hy;
            if (px - x[0]).powi(2) + (py - x[1]).powi(2) < r * r {
                count += 1;
            }
        }
    }
    count as f64 * hx * hy
}

#[test]
fn ball_measure_of_a_single_ball() {
    let w = 0.4;
    let set = SlabSet::from_blocks(vec![CellBlock::single(3, w)]).unwrap();
    let mu = FractalMeasure::from_slabset(set, 2.0, 50_000, 1).unwrap();
    let vol = |r: f64| 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    assert!((mu.mass.value / vol(w) - 1.0).abs() < 0.02);
    for r in [0.05, 0.2, 0.39, 0.6] {
        let b = mu_ball(&mu, &[0.0; 3], r, 4000, 2).unwrap();
        let want = vol(r.min(w));
        assert!((b.value / want - 1.0).abs() < 0.08, "r={r}: {} vs {want}", b.value);
    }
}

#[test]
fn ball_measure_of_a_rectangle() {
    let (a, b) = (0.3, 0.05);
    let set = SlabSet::from_blocks(vec![CellBlock::single(1, a), CellBlock::single(1, b)]).unwrap();
    let mu = FractalMeasure::from_slabset(set, 1.5, 50_000, 1).unwrap();
    for (x, r) in [([0.0, 0.0], 0.1), ([0.25, 0.0], 0.1), ([0.1, 0.05], 0.2), ([0.0, 0.2], 0.17)] {
        let got = mu_ball(&mu, &x, r, 4000, 9).unwrap();
        let want = rect_disk_area(a, b, x, r);
        assert!((got.value / want - 1.0).abs() < 0.08, "x={x:?} r={r}: {} vs {want}", got.value);
        assert!(got.lower <= want * 1.0001 && want <= got.upper * 1.0001);
    }
}

#[test]
fn grid_properties() {
    let breaks = [1e-3, 0.37, 1.0];
    let g = r_grid(1e-4, &breaks);
    assert_eq!(g[0], 1e-4);
    assert_eq!(*g.last().unwrap(), 2.0);
    for w in g.windows(2) {
        assert!(w[0] < w[1]);
        assert!(w[1] / w[0] <= 2f64.powf(0.25) * (1.0 + 1e-12));
    }
    for b in breaks {
        assert!(g.iter().any(|v| (v - b).abs() <= 1e-9 * b));
    }
}

#[test]
fn regime_tables_tile_the_scales() {
    for (s, d, m, a, k) in [
        (Surface::Sphere, 4, 1, Rational::int(3), q(1, 6)),
        (Surface::Paraboloid, 3, 1, Rational::int(2), q(1, 6)),
        (Surface::Paraboloid, 7, 2, Rational::int(5), q(1, 3)),
    ] {
        let t = regime_table(s, d, m, a, k).unwrap();
        assert_eq!(t[0].lo, None);
        assert_eq!(t[0].r_exponent, a * -1 + d);
        assert_eq!(t.last().unwrap().hi, Rational::ZERO);
        for w in t.windows(2) {
            assert_eq!(w[0].hi, w[1].lo.unwrap());
            // continuous across each boundary
            assert_eq!(w[0].exponent_at(w[0].hi), w[1].exponent_at(w[0].hi));
        }
    }
}

#[test]
fn knapp_scale_values() {
    let (d, m, a, k) = (4, 1, Rational::int(3), q(1, 6));
    let t = regime_table(Surface::Sphere, d, m, a, k).unwrap();
    let e = t.iter().find(|g| g.label == "S3").unwrap().exponent_at(-q(1, 2));
    assert_eq!(e, -(Rational::int(d) - a) / 2 - k * (d - m));
    let (d, a) = (3, Rational::int(2));
    let t = regime_table(Surface::Paraboloid, d, m, a, k).unwrap();
    let e = t.iter().find(|g| g.label == "P4").unwrap().exponent_at(-q(1, 2));
    assert_eq!(e, -(Rational::int(d) - a) / 2 - k * (d - m + 1));
}

#[test]
fn balance_examples() {
    let s = verify_kappa_balances(Surface::Sphere, 4, 1, Rational::int(3), q(1, 6)).unwrap();
    assert_eq!(s.target, Rational::int(-1));
    let p = verify_kappa_balances(Surface::Paraboloid, 3, 1, Rational::int(2), q(1, 6)).unwrap();
    assert_eq!(p.target, Rational::int(-1));
    for dk in [q(1, 100), q(-1, 100)] {
        assert!(verify_kappa_balances(Surface::Paraboloid, 3, 1, Rational::int(2), q(1, 6) + dk).is_err());
        assert!(verify_kappa_balances(Surface::Sphere, 4, 1, Rational::int(3), q(1, 6) + dk).is_err());
    }
}

#[test]
fn c_alpha_tracks_r_to_alpha_minus_d() {
    let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None).unwrap();
    let mut norm = vec![];
    for e in [12, 15, 18] {
        let p = cfg.at_r(2f64.powi(e)).unwrap();
        let mu = FractalMeasure::from_params(&p, 50_000, 1).unwrap();
        let o = c_alpha_oracle(&mu, OracleBudget::default(), 1).unwrap();
        norm.push(o.value * p.r);
        assert!(o.profile.rows.iter().all(|r| r.oracle_value >= 0.0));
    }
    let (lo, hi) = norm.iter().fold((f64::MAX, 0f64), |a, &v| (a.0.min(v), a.1.max(v)));
    assert!(hi / lo < 2.0, "{norm:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich_holds(e in 10i32..22, seed in 0u64..10_000, log_r in -7.0f64..0.3) {
        let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None).unwrap();
        let p = cfg.at_r(2f64.powi(e)).unwrap();
        let set = build_lambda(&p);
        let mut rng = task_rng(seed, 1);
        let x = set.sample(&mut rng).unwrap().coords(&set);
        let mu = FractalMeasure::from_slabset(set, 2.0, 10_000, seed).unwrap();
        let r = 10f64.powf(log_r) * rng.random_range(0.5..1.0);
        if let Ok(b) = mu_ball(&mu, &x, r, 500, seed) {
            prop_assert!(b.lower <= b.value && b.value <= b.upper, "{:?}", b);
        }
    }

    #[test]
    fn measure_grid_is_sorted(e in 8i32..30) {
        let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None).unwrap();
        let p = cfg.at_r(2f64.powi(e)).unwrap();
        let mu = FractalMeasure::from_params(&p, 2000, 1).unwrap();
        let g = measure_grid(&mu);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g[0] <= 0.5 / p.r);
    }
}
