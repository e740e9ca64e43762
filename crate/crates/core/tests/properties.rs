//! Randomized invariants across the library.

use proptest::prelude::*;
use qcdl_core::bounds::{distortion_bound, lemma1_bound, BoundInputs, ConstantsConfig};
use qcdl_core::geometry::{chordal_distance, inversion_point, norm, ExtendedPoint};
use qcdl_core::{ConvexGauge, Domain, QField, SphericalQuadratureSpec};

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, n)
}

fn gauge() -> impl Strategy<Value = ConvexGauge> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|a| ConvexGauge::exp_scaled(a).unwrap()),
        (1.0..4.0f64, 0.0..2.0f64).prop_map(|(p, c)| ConvexGauge::power_shift(p, c).unwrap()),
        (0.1..3.0f64, 0.0..2.0f64).prop_map(|(a, b)| ConvexGauge::linear(a, b).unwrap()),
        (0.0..1.0f64, 0.1..2.0f64, 0.0..3.0f64).prop_map(|(v0, s1, s2)| {
            ConvexGauge::piecewise_linear(vec![(0.0, v0), (1.0, v0 + s1), (3.0, v0 + s1 + 2.0 * (s1 + s2))])
                .unwrap()
        }),
    ]
}

proptest! {
    #[test]
    fn chordal_metric_axioms(x in point(3), y in point(3), z in point(3)) {
        let (x, y, z) = (
            ExtendedPoint::Finite(x),
            ExtendedPoint::Finite(y),
            ExtendedPoint::Finite(z),
        );
        let inf = ExtendedPoint::infinity(3).unwrap();
        let h = |a: &ExtendedPoint, b: &ExtendedPoint| chordal_distance(a, b).unwrap();
        prop_assert_eq!(h(&x, &y), h(&y, &x));
        prop_assert!(h(&x, &y) <= 1.0);
        for (a, b, c) in [(&x, &y, &z), (&x, &inf, &y), (&inf, &x, &z)] {
            prop_assert!(h(a, c) <= h(a, b) + h(b, c) + 1e-15);
        }
    }

    #[test]
    fn chordal_distance_to_infinity(x in point(4)) {
        let h = chordal_distance(&ExtendedPoint::Finite(x.clone()), &ExtendedPoint::infinity(4).unwrap()).unwrap();
        let r = norm(&x);
        prop_assert!((h - 1.0 / (1.0 + r * r).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inversion_is_an_involution(x in point(2)) {
        prop_assume!(norm(&x) > 1e-3);
        let p = ExtendedPoint::Finite(x.clone());
        let back = inversion_point(&inversion_point(&p));
        let b = back.coords().unwrap();
        for (u, v) in b.iter().zip(&x) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    /// Left inverse: Φ⁻¹(τ) ≤ t ⇔ τ ≤ Φ(t).
    #[test]
    fn generalized_inverse_galois(g in gauge(), t in 0.0..6.0f64, s in 0.0..1.0f64) {
        let tau0 = g.tau0();
        let phi_t = g.evaluate(t).unwrap();
        if phi_t > tau0 {
            let inv = g.generalized_inverse(phi_t).unwrap();
            prop_assert!(inv <= t * (1.0 + 1e-12) + 1e-12);
        }
        let tau = tau0 + s * (phi_t - tau0);
        if tau > tau0 {
            let inv = g.generalized_inverse(tau).unwrap();
            prop_assert!(g.evaluate(inv).unwrap() >= tau * (1.0 - 1e-12));
        }
    }

    #[test]
    fn tau_integral_is_additive(g in gauge(), n in 2usize..5, a in 0.1..5.0f64, k1 in 0.1..3.0f64, k2 in 0.1..3.0f64) {
        let lo = g.tau0() + a;
        let mid = lo * (1.0 + k1);
        let hi = mid * (1.0 + k2);
        let whole = g.tau_integral(n, lo, hi).unwrap();
        let parts = g.tau_integral(n, lo, mid).unwrap() + g.tau_integral(n, mid, hi).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-8 * whole.abs().max(1e-12));
    }

    #[test]
    fn jensen_on_spheres(g in gauge(), n in 2usize..4, slope in -1.0..1.0f64, offset in 0.0..2.0f64,
                         c in point(2), r in 0.05..0.9f64) {
        let field = QField::coordinate_affine(slope, offset, Domain::ball(vec![0.0; n], 1.0).unwrap()).unwrap();
        let spec = SphericalQuadratureSpec::default_for(n);
        let mut x0 = vec![0.0; n];
        x0[0] = c[0] / 500.0;
        let mean = field.spherical_mean(&x0, r, &spec).unwrap();
        let phi_mean = field.spherical_phi_mean(&g, &x0, r, &spec).unwrap();
        prop_assert!(g.evaluate(mean).unwrap() <= phi_mean + 1e-8);
    }

    #[test]
    fn lemma1_is_homogeneous_in_delta(i in 0.01..100.0f64, delta in 0.01..1.0f64, n in 2usize..6) {
        let cfg = ConstantsConfig::placeholder();
        let a = BoundInputs::new(n, delta, vec![0.0; n], 1.0).unwrap();
        let one = BoundInputs::new(n, 1.0, vec![0.0; n], 1.0).unwrap();
        prop_assert_eq!(lemma1_bound(i, &a, &cfg).unwrap(), lemma1_bound(i, &one, &cfg).unwrap() / delta);
    }

    #[test]
    fn distortion_bound_is_monotone_in_distance(s in 0.0..2.0f64, r1 in 0.001..0.5f64, r2 in 0.001..0.5f64) {
        prop_assume!((r1 - r2).abs() > 1e-6);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let cfg = ConstantsConfig::placeholder();
        let spec = SphericalQuadratureSpec::default_for(2);
        let field = QField::radial_power(vec![0.2, 0.1], s, Domain::ball(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
        let inputs = BoundInputs::new(2, 0.3, vec![0.0, 0.0], 0.6).unwrap();
        let b_lo = distortion_bound(&field, &inputs, &[lo, 0.0], &cfg, &spec).unwrap().bound;
        let b_hi = distortion_bound(&field, &inputs, &[0.0, hi], &cfg, &spec).unwrap().bound;
        prop_assert!(b_lo <= b_hi);
    }
}

#[test]
fn monte_carlo_means_agree_with_deterministic_rules() {
    let mut within = 0;
    let trials = 200;
    for seed in 0..trials {
        let n = 2 + (seed % 2) as usize;
        let domain = Domain::ball(vec![0.0; n], 2.0).unwrap();
        let field = QField::radial_power(vec![0.3; n], 1.5, domain).unwrap();
        let x0 = vec![0.1; n];
        let exact = field
            .spherical_mean(&x0, 0.7, &SphericalQuadratureSpec::default_for(n))
            .unwrap();
        let mc = field
            .spherical_mean_with_error(&x0, 0.7, &SphericalQuadratureSpec::MonteCarlo { samples: 2000, seed })
            .unwrap();
        if (mc.mean - exact).abs() <= 4.0 * mc.std_error {
            within += 1;
        }
    }
    assert!(within as f64 >= 0.99 * trials as f64, "{within} of {trials}");
}

#[test]
fn monte_carlo_results_do_not_depend_on_thread_count() {
    let field = QField::coordinate_affine(0.5, 1.0, Domain::ball(vec![0.0; 5], 1.0).unwrap()).unwrap();
    let g = ConvexGauge::exp_scaled(1.0).unwrap();
    let spec = SphericalQuadratureSpec::default_for(5);
    let a = field.weighted_phi_mass(&g, &spec).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| field.weighted_phi_mass(&g, &spec).unwrap());
    assert_eq!(a.to_bits(), b.to_bits());
}
