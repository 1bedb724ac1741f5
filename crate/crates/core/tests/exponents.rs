use decay_bounds::exponents::{
    falconer_threshold, kappa_i, lemma_kappa_selector, lower_bound, prior_upper_bound, ExponentQuery, Part,
};
use decay_bounds::rational::q;
use decay_bounds::{Rational, Surface};
use proptest::prelude::*;

/// κ families in plain floating point.
fn kappa_f64(i: u8, m: f64, a: f64, d: f64) -> f64 {
    match i {
        1 => (d - m / 2.0 - a) / (d - m),
        2 => (d - a) / (2.0 * (d - m)),
        3 => (d - m / 2.0 - a) / (d - m + 1.0),
        4 => (d - a) / (2.0 * (d - m + 1.0)),
        5 => (d - a - 1.0) / (2.0 * (d - m - 1.0)),
        _ => unreachable!(),
    }
}

fn bound(s: Surface, d: i64, a: Rational) -> Rational {
    ExponentQuery::new(s, d, a).unwrap().bound().unwrap().kappa
}

#[test]
fn worked_values() {
    assert_eq!(kappa_i(2, 1, Rational::int(3), 4).unwrap(), q(1, 6));
    assert_eq!(bound(Surface::Sphere, 4, Rational::int(3)), q(1, 6));
    assert_eq!(bound(Surface::Sphere, 5, q(7, 2)), q(1, 4));
    let c = ExponentQuery::sphere(4, q(5, 2)).unwrap().bound().unwrap();
    assert_eq!((c.kappa, c.branch.part), (q(1, 3), Part::C));

    let p = ExponentQuery::paraboloid(3, Rational::int(2)).unwrap().bound().unwrap();
    assert_eq!((p.kappa, p.beta_upper), (q(1, 6), q(4, 3)));
    assert_eq!(bound(Surface::Paraboloid, 5, q(7, 2)), q(3, 16));
    assert_eq!(bound(Surface::Paraboloid, 4, Rational::int(2)), q(3, 8));

    assert_eq!(prior_upper_bound(Surface::Sphere, 4, Rational::int(3)).unwrap(), q(5, 2));
    assert_eq!(prior_upper_bound(Surface::Paraboloid, 3, Rational::int(2)).unwrap(), q(3, 2));
    assert_eq!(lower_bound(Rational::int(2), 3).unwrap(), q(4, 3));
    assert_eq!(lower_bound(q(3, 2), 3).unwrap(), Rational::ONE);
}

#[test]
fn threshold_closed_forms() {
    // d/2 + 1/(d+1) for d = 3, 5; d/2 + 1/(d+3) for odd d >= 7; d/2 + 1/(d+2) for even d
    for d in 3..=12i64 {
        let gap = match d {
            3 | 5 => d + 1,
            _ if d % 2 == 1 => d + 3,
            _ => d + 2,
        };
        let want = q(d, 2) + q(1, gap);
        assert_eq!(falconer_threshold(d).unwrap(), want, "d = {d}");
    }
    assert!(falconer_threshold(2).is_err());
}

#[test]
fn lemma_selector_values() {
    let s = lemma_kappa_selector(Surface::Sphere, 1, Rational::int(3), 4).unwrap();
    assert_eq!(s.kappa, q(1, 6));
    let p = lemma_kappa_selector(Surface::Paraboloid, 1, Rational::int(2), 3).unwrap();
    assert_eq!(p.kappa, q(1, 6));
    let x = lemma_kappa_selector(Surface::Paraboloid, 5, q(13, 2), 12).unwrap();
    let k3: f64 = (12.0 - 2.5 - 6.5) / 8.0;
    let k5 = (12.0 - 6.5 - 1.0) / 12.0;
    assert_eq!(x.kappa, q(3, 8));
    assert_eq!(x.kappa.to_f64(), k3.max(k5));
}

#[test]
fn out_of_domain_rejected() {
    assert!(ExponentQuery::sphere(4, Rational::int(2)).is_err());
    assert!(ExponentQuery::sphere(3, q(5, 2)).is_err());
    assert!(ExponentQuery::paraboloid(3, Rational::ONE).is_err());
    assert!(ExponentQuery::paraboloid(3, Rational::int(3)).is_err());
}

/// The one place the paraboloid table jumps: the shared endpoint α = d − F − 1 of
/// parts (c) and (d), F = ⌊(d+1)/3⌋, whenever part (d) is non-empty.
fn parab_jump_point(d: i64) -> Option<Rational> {
    let f = (d + 1) / 3;
    (f + 2 <= d / 2).then(|| Rational::int(d - f - 1))
}

fn alpha_in(lo_num: i64, d: i64, den: i64) -> impl Strategy<Value = Rational> {
    // α ∈ (lo_num/2, d) on a 1/den grid
    let lo = lo_num * den / 2 + 1;
    (lo..d * den).prop_map(move |n| Rational::new(n, den))
}

proptest! {
    #[test]
    fn rational_text_round_trip(n in -10_000i64..10_000, den in 1i64..5000) {
        let r = Rational::new(n, den);
        prop_assert_eq!(r.to_string().parse::<Rational>().unwrap(), r);
        let json = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rational>(&json).unwrap(), r);
    }

    #[test]
    fn kappa_families_match_floats(i in 1u8..=5, m in 1i64..6, d in 13i64..40, n in 1i64..400) {
        let a = Rational::new(n, 20);
        prop_assume!(a < d - 1);
        let exact = kappa_i(i, m, a, d).unwrap().to_f64();
        let float = kappa_f64(i, m as f64, a.to_f64(), d as f64);
        prop_assert!((exact - float).abs() < 1e-12);
    }

    #[test]
    fn sphere_bound_invariants((d, a) in (4i64..30).prop_flat_map(|d| (Just(d), alpha_in(d, d, 60)))) {
        let b = ExponentQuery::sphere(d, a).unwrap().bound().unwrap();
        prop_assert!(b.kappa > Rational::ZERO && b.kappa < q(1, 2));
        prop_assert_eq!(b.beta_upper, a - 1 + b.kappa * 2);
        prop_assert!(b.beta_upper < prior_upper_bound(Surface::Sphere, d, a).unwrap());
        prop_assert!(b.beta_upper >= lower_bound(a, d).unwrap());
    }

    #[test]
    fn parab_bound_invariants((d, a) in (3i64..30).prop_flat_map(|d| (Just(d), alpha_in(d - 1, d, 60)))) {
        let b = ExponentQuery::paraboloid(d, a).unwrap().bound().unwrap();
        prop_assert!(b.kappa > Rational::ZERO && b.kappa < q(1, 2));
        prop_assert_eq!(b.beta_upper, a - 1 + b.kappa * 2);
        prop_assert!(b.beta_upper < prior_upper_bound(Surface::Paraboloid, d, a).unwrap());
        prop_assert!(b.beta_upper >= lower_bound(a, d).unwrap());
        if d >= 4 {
            if let Ok(qs) = ExponentQuery::sphere(d, a) {
                prop_assert!(b.kappa < qs.bound().unwrap().kappa);
            }
        }
    }

    #[test]
    fn sphere_bound_is_lipschitz((d, a) in (4i64..30).prop_flat_map(|d| (Just(d), alpha_in(d, d - 1, 97)))) {
        let h = q(1, 97);
        let jump = (bound(Surface::Sphere, d, a + h) - bound(Surface::Sphere, d, a)).abs();
        prop_assert!(jump <= h, "d={} a={} jump={}", d, a, jump);
    }

    #[test]
    fn parab_bound_is_lipschitz_off_the_jump((d, a) in (3i64..30).prop_flat_map(|d| (Just(d), alpha_in(d - 1, d - 1, 97)))) {
        let h = q(1, 97);
        let (lo, hi) = (a, a + h);
        let jump = (bound(Surface::Paraboloid, d, hi) - bound(Surface::Paraboloid, d, lo)).abs();
        match parab_jump_point(d) {
            Some(p) if lo < p && p <= hi => prop_assert!(jump > Rational::ZERO),
            _ => prop_assert!(jump <= h, "d={} a={} jump={}", d, a, jump),
        }
    }
}

#[test]
fn parab_jump_is_upward_and_left_closed() {
    // At the shared endpoint part (c) wins by order, and its value exceeds the
    // left limit of part (d).
    for d in [10i64, 13, 15, 16] {
        let p = parab_jump_point(d).unwrap();
        let at = bound(Surface::Paraboloid, d, p);
        let left = bound(Surface::Paraboloid, d, p - q(1, 1_000_000));
        let right = bound(Surface::Paraboloid, d, p + q(1, 1_000_000));
        assert!(at > left + q(1, 1000), "d={d}");
        assert!((at - right).abs() < q(1, 10_000), "d={d}");
    }
    for d in 3..=9 {
        assert!(parab_jump_point(d).is_none());
    }
}
