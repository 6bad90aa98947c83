//! Invariants of fields, chaos statistics and estimators.

use std::f64::consts::PI;

use capnodal::chaos::{local_trispectrum, second_chaos_projection};
use capnodal::field::{sample_field, HarmonicField, SphericalPoint};
use capnodal::mc::estimate::{correlation, covariance, standardized_k4, variance};
use capnodal::mc::{clt_check, standardize};
use capnodal::nodal::{nodal_length_cap_value, CapDomain};
use proptest::prelude::*;

fn scaled(f: &HarmonicField, k: f64) -> HarmonicField {
    HarmonicField::from_coefficients(f.ell(), f.coefficients().iter().map(|c| k * c).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evaluation_is_linear_in_coefficients(
        ell in 1u32..40, s1 in 0u64..1000, s2 in 0u64..1000,
        a in -3.0f64..3.0, theta in 0.0f64..PI, phi in -PI..PI,
    ) {
        let f = sample_field(ell, s1).unwrap();
        let g = sample_field(ell, s2).unwrap();
        let sum: Vec<f64> = f.coefficients().iter().zip(g.coefficients()).map(|(x, y)| a * x + y).collect();
        let h = HarmonicField::from_coefficients(ell, sum).unwrap();
        let p = SphericalPoint::new(theta, phi);
        let want = a * f.eval(p).unwrap() + g.eval(p).unwrap();
        prop_assert!((h.eval(p).unwrap() - want).abs() < 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn eigenfunction_of_the_laplacian(ell in 2u32..30, seed in 0u64..1000, theta in 0.2f64..2.9, phi in -PI..PI) {
        // second differences of T along a meridian and a parallel
        let f = sample_field(ell, seed).unwrap();
        let t = |th: f64, ph: f64| f.eval(SphericalPoint::new(th, ph)).unwrap();
        let h = 1e-3;
        let t0 = t(theta, phi);
        let d2t = (t(theta + h, phi) - 2.0 * t0 + t(theta - h, phi)) / (h * h);
        let d1t = (t(theta + h, phi) - t(theta - h, phi)) / (2.0 * h);
        let d2p = (t(theta, phi + h) - 2.0 * t0 + t(theta, phi - h)) / (h * h);
        let lap = d2t + theta.cos() / theta.sin() * d1t + d2p / theta.sin().powi(2);
        let lam = (ell * (ell + 1)) as f64;
        let scale = lam * f.coefficients().iter().map(|c| c.abs()).sum::<f64>();
        prop_assert!((lap + lam * t0).abs() < 1e-4 * scale);
    }

    #[test]
    fn nodal_length_is_scale_invariant(seed in 0u64..1000, k in 0.01f64..100.0, r in 0.2f64..1.2) {
        let f = sample_field(15, seed).unwrap();
        let cap = CapDomain::new(r).unwrap();
        let a = nodal_length_cap_value(&f, &cap, Some(96)).unwrap();
        let b = nodal_length_cap_value(&scaled(&f, k), &cap, Some(96)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn chaos_statistics_are_even_in_the_field(seed in 0u64..1000, r in 0.2f64..1.2) {
        let f = sample_field(15, seed).unwrap();
        let neg = scaled(&f, -1.0);
        let cap = CapDomain::new(r).unwrap();
        let a = local_trispectrum(&f, &cap, None).unwrap();
        let b = local_trispectrum(&neg, &cap, None).unwrap();
        prop_assert!((a.h4 - b.h4).abs() <= 1e-9 * (1.0 + a.h4.abs()));
        let p = second_chaos_projection(&f, &cap, None).unwrap();
        let q = second_chaos_projection(&neg, &cap, None).unwrap();
        prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
    }

    #[test]
    fn estimators_respect_affine_maps(
        xs in prop::collection::vec(-10.0f64..10.0, 8..60),
        a in 0.1f64..5.0, b in -5.0f64..5.0,
    ) {
        prop_assume!(variance(&xs).value > 1e-6);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let vx = variance(&xs).value;
        prop_assert!((variance(&ys).value - a * a * vx).abs() <= 1e-9 * a * a * vx);
        prop_assert!((covariance(&xs, &ys).value - a * vx).abs() <= 1e-9 * a * vx);
        prop_assert!((correlation(&xs, &ys).value - 1.0).abs() < 1e-9);
        let k = standardized_k4(&xs).value;
        prop_assert!((standardized_k4(&ys).value - k).abs() <= 1e-7 * (1.0 + k.abs()));
    }

    #[test]
    fn correlation_is_bounded(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..80)) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let c = correlation(&xs, &ys).value;
        prop_assert!(c.is_nan() || c.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn ks_statistic_is_bounded_and_affine_invariant(
        xs in prop::collection::vec(-10.0f64..10.0, 200..300), a in 0.1f64..5.0, b in -5.0f64..5.0,
    ) {
        prop_assume!(variance(&xs).value > 1e-6);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let k1 = clt_check(&standardize(&xs), None).unwrap();
        let k2 = clt_check(&standardize(&ys), None).unwrap();
        prop_assert!((0.0..=1.0).contains(&k1.statistic));
        prop_assert!((k1.statistic - k2.statistic).abs() < 1e-9);
    }
}
