use hexaperiod_core::asymptotics::*;
use hexaperiod_core::roots::horner;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn m_at(k: &AlphaConstants, z: f64, xi: f64, eta: f64) -> f64 {
    m_eval(k, C::new(z, 0.0), xi, eta).0.re
}

// closed forms of M at the poles and at r1, r2, r3
fn m_closed_forms(k: &AlphaConstants, xi: f64, eta: f64) -> Vec<(f64, f64)> {
    let (a, c) = (k.alpha, k.c);
    let sa = a.sqrt();
    let b = (1.0 + a * a) * c + sa * (1.0 + a);
    vec![
        (0.0, a.powi(4) * (1.0 - (eta - xi).powi(2))),
        (a * c, (1.0 - a).powi(8) * c.powi(8) * (1.0 - xi * xi)),
        (a / c, a.powi(4) * (1.0 - a).powi(8) * (1.0 - xi * xi)),
        (c, (1.0 - a).powi(8) * c.powi(8) * (1.0 - eta * eta)),
        (1.0 / c, (1.0 - a).powi(8) / a.powi(4) * (1.0 - eta * eta)),
        (k.r1, -a / (c * c) * (1.0 - a).powi(2) * (c + sa).powi(2) * (a * c + sa).powi(2) * (eta + xi).powi(2)),
        (k.r2, -a * (1.0 - a).powi(10) * c.powi(8) / (c + sa).powi(8) * b * b * (xi - 2.0 * eta).powi(2)),
        (k.r3, -a * (1.0 - a).powi(10) * c.powi(8) / (a * c + sa).powi(8) * b * b * (eta - 2.0 * xi).powi(2)),
    ]
}

fn hex_point() -> impl Strategy<Value = (f64, f64)> {
    (-0.999f64..0.999, -0.999f64..0.999).prop_filter("inside", |(x, y)| (y - x).abs() < 0.999)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn m_identities(a in 0.02f64..0.98, (xi, eta) in hex_point()) {
        let k = AlphaConstants::new(a).unwrap();
        let poly = saddle_polynomial(&k, xi, eta);
        prop_assert!(rel(poly[8], 1.0 - (xi - eta).powi(2)) < 1e-10);
        let scale = poly.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (z, want) in m_closed_forms(&k, xi, eta) {
            let got = m_at(&k, z, xi, eta);
            prop_assert!((got - want).abs() <= 1e-10 * want.abs() + 1e-15 * scale, "a={a} z={z} got={got} want={want}");
            let expanded = horner(&poly, C::new(z, 0.0)).0.re;
            let size: f64 = poly.iter().enumerate().map(|(i, v)| v.abs() * z.abs().powi(i as i32)).sum();
            prop_assert!((expanded - got).abs() < 1e-13 * size);
        }
    }

    #[test]
    fn pi_at_poles(a in 0.01f64..0.99) {
        let k = AlphaConstants::new(a).unwrap();
        let c = k.c;
        let cases = [
            (0.0, a.powi(4)),
            (a * c, (1.0 - a).powi(8) * c.powi(8)),
            (a / c, (1.0 - a).powi(8) * a.powi(4)),
            (c, (1.0 - a).powi(8) * c.powi(8)),
            (1.0 / c, (1.0 - a).powi(8) / a.powi(4)),
        ];
        for (z, want) in cases {
            prop_assert!(rel(k.pi_eval(C::new(z, 0.0)).re, want) < 1e-10);
        }
    }

    #[test]
    fn constants_invariants(a in 0.001f64..0.999) {
        let k = AlphaConstants::new(a).unwrap();
        let c = k.c;
        prop_assert!(0.0 < c && c < 1.0);
        let order = [k.r1, 0.0, a * c, k.r2, a / c, c, k.r3, 1.0 / c];
        prop_assert!(order.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((k.r_plus.norm() - k.radius0).abs() < 1e-12);
        prop_assert!(((k.r_plus - a / c).norm() - k.radius_alpha).abs() < 1e-12);
        prop_assert!(((k.r_plus - 1.0 / c).norm() - k.radius1).abs() < 1e-12);
        let third = std::f64::consts::PI / 3.0;
        prop_assert!(k.theta1 > 2.0 * third && k.theta1 < 3.0 * third);
        prop_assert!(k.theta_alpha > third && k.theta_alpha < 2.0 * third);
        prop_assert!(k.theta0 > 0.0 && k.theta0 < third);
    }

    #[test]
    fn saddle_properties(a in 0.02f64..0.98, (xi, eta) in hex_point()) {
        let k = AlphaConstants::new(a).unwrap();
        let Some(sd) = find_saddle(&k, xi, eta).unwrap() else { return Ok(()) };
        prop_assert!(sd.s.im > IM_TOL);
        let q = k.q_eval(sd.s).unwrap();
        prop_assert!((sd.w * sd.w - q).norm() < 1e-9 * q.norm().max(1e-12));
        let (x2, y2) = inverse_map(&k, sd.s, sd.w).unwrap();
        prop_assert!((x2 - xi).abs().max((y2 - eta).abs()) < 1e-8);
        let d = density_from_saddle(&k, sd.s);
        prop_assert!(d.sum_rule_residual() < 1e-12);
        prop_assert!(d.entries().all(|v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        let m = find_saddle(&k, -xi, -eta).unwrap().unwrap();
        prop_assert!((m.s - sd.s).norm() < 1e-9);
        if (xi - eta).abs() < 0.999 {
            let r = find_saddle(&k, xi, xi - eta).unwrap().unwrap();
            prop_assert!((r.s - k.star(sd.s.conj()).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn star_involution(re in -3.0f64..3.0, im in -3.0f64..3.0, a in 0.05f64..0.95) {
        let k = AlphaConstants::new(a).unwrap();
        let z = C::new(re, im);
        prop_assume!((z - 1.0 / k.c).norm() > 1e-3);
        prop_assert!((k.star(k.star(z).unwrap()).unwrap() - z).norm() < 1e-10 * z.norm().max(1.0));
    }
}

#[test]
fn saddle_is_unique_on_random_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut liquid = 0;
    for _ in 0..1000 {
        let a: f64 = rng.gen_range(0.02..0.98);
        let (xi, eta): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if (eta - xi).abs() >= 1.0 {
            continue;
        }
        let k = AlphaConstants::new(a).unwrap();
        if find_saddle(&k, xi, eta).unwrap().is_some() {
            liquid += 1;
        }
    }
    assert!(liquid > 300);
}

#[test]
fn q_behaviour() {
    let k = AlphaConstants::new(0.25).unwrap();
    assert!(k.q_eval(k.r_plus).unwrap().norm() < 1e-15);
    let z = C::new(1e6, 0.0);
    assert!(((z * z * k.q_eval(z).unwrap()).re - 0.25).abs() < 1e-5);
    assert!(k.q_eval(C::new(k.c + 1e-13, 0.0)).is_err());
    let fixed = C::new(1.0 / k.c + k.radius1, 0.0);
    assert!((k.star(fixed).unwrap() - fixed).norm() < 1e-14);
}

#[test]
fn inverse_map_principal_branch_gives_negative_xi() {
    let k = AlphaConstants::new(0.35).unwrap();
    for (re, im) in [(0.3, 0.2), (0.8, 0.05), (-0.4, 0.6), (1.5, 1.0)] {
        let s = C::new(re, im);
        let mut w = k.q_eval(s).unwrap().sqrt();
        // the branch behaving like 1/(2 s) at infinity and continued through the upper half-plane
        let f = |w: C| inverse_map(&k, s, w).unwrap();
        if f(w).0 > 0.0 {
            w = -w;
        }
        assert!(f(w).0 < 0.0);
        assert!((f(w).0 + f(-w).0).abs() < 1e-12);
    }
}

#[test]
fn circle_laws_full_grid() {
    for a in [0.1, 0.5, 0.9] {
        let k = AlphaConstants::new(a).unwrap();
        let r = circle_membership_suite(&k, 200, 100).unwrap();
        assert!(r.passes(1e-8), "a={a} {r:?}");
    }
}

// Near a regular boundary point the saddle leaves the real axis like the
// square root of the distance, so the deviation from the frozen brackets
// falls by about 10x per 100x in distance.
#[test]
fn frozen_limits_converge() {
    for a in [0.2, 0.5, 0.8] {
        let k = AlphaConstants::new(a).unwrap();
        for f in 1..=6 {
            let d3 = frozen_deviation(&k, f, 1e-3).unwrap();
            let d5 = frozen_deviation(&k, f, 1e-5).unwrap();
            let d7 = frozen_deviation(&k, f, 1e-7).unwrap();
            assert!(d5 < 0.2 * d3 && d7 < 0.2 * d5, "a={a} F{f}: {d3} {d5} {d7}");
            assert!(d7 < 0.01, "a={a} F{f}: {d7}");
        }
    }
}

#[test]
fn arctic_probes_flip() {
    for a in [0.04, 0.2, 0.4] {
        let k = AlphaConstants::new(a).unwrap();
        let pts = arctic_boundary(&k, 240).unwrap();
        for p in pts.iter().filter(|p| p.kind == BoundaryKind::Regular) {
            let sigma = p.branch as f64;
            let flips = probe_flips(&k, p.s, sigma, 1e-4).unwrap().unwrap();
            assert!(flips, "a={a} s={} ({}, {})", p.s, p.xi, p.eta);
            // a double real root of M at s
            let d = discriminant_proxy(&k, p.s, p.xi, p.eta);
            assert!(d < PROXY_TOL, "a={a} s={} {d}", p.s);
        }
    }
}

#[test]
fn envelope_matches_epsilon_limit() {
    // inverse map just above the real axis lands next to the envelope point
    let k = AlphaConstants::new(0.3).unwrap();
    for s in [-1.5, 0.1, 0.45, 0.8, 2.0] {
        let z = C::new(s, 1e-6);
        let (sq, _) = k.sqrt_q_real(s, 1.0);
        let w = k.q_eval(z).unwrap().sqrt();
        let w = if (w - sq).norm() < (w + sq).norm() { w } else { -w };
        let (xi, eta) = inverse_map(&k, z, w).unwrap();
        let (bx, by) = envelope_point(&k, s, 1.0).unwrap();
        assert!((xi - bx).abs() < 1e-4 && (eta - by).abs() < 1e-4, "s={s}: ({xi},{eta}) vs ({bx},{by})");
    }
}

#[test]
fn limit_density_is_frozen_in_the_corners() {
    let k = AlphaConstants::new(0.3).unwrap();
    let b = arctic_boundary(&k, 600).unwrap();
    // the corners at (1, 0) and (-1, 0) are both in F1 by point symmetry
    assert_eq!(limit_density(&k, &b, 0.975, 0.0).unwrap(), frozen_limit(1));
    assert_eq!(frozen_family_near(&b, -0.975, 0.0), Some(1));
    let d = limit_density(&k, &b, 0.0, 0.0).unwrap();
    assert!(d.entries().all(|v| v > 0.0 && v < 1.0));
    let mut fams = std::collections::BTreeSet::new();
    for (xi, eta) in [(0.99, 0.5), (0.5, 0.99), (-0.5, 0.49), (-0.99, -0.5), (-0.5, -0.99), (0.5, -0.49)] {
        if find_saddle(&k, xi, eta).unwrap().is_none() {
            fams.insert(frozen_family_near(&b, xi, eta).unwrap());
        }
    }
    assert!(fams.len() >= 3, "{fams:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn m_identities_high_precision(a in 0.001f64..0.999, (xi, eta) in hex_point()) {
        let k = AlphaConstants::new(a).unwrap();
        let got = m_special_values_mp(a, xi, eta, 192);
        for (g, (z, want)) in got.iter().zip(m_closed_forms(&k, xi, eta)) {
            prop_assert!((g - want).abs() <= 1e-10 * want.abs(), "a={a} z={z} got={g} want={want}");
        }
    }
}
