//! Property-based invariants for the analytic kernels.

use proptest::prelude::*;
use slitlab::analytic::{capture_probability, momentum_density, sine_integral, Xi, PLANCK};

proptest! {
    #[test]
    fn sine_integral_is_odd(x in -500.0f64..500.0) {
        let pos = sine_integral(x).unwrap();
        let neg = sine_integral(-x).unwrap();
        prop_assert_eq!(pos, -neg);
    }

    #[test]
    fn sine_integral_is_bounded_by_gibbs_maximum(x in 0.0f64..1.0e6) {
        // Si attains its global maximum Si(π) ≈ 1.8519 at x = π.
        let si = sine_integral(x).unwrap();
        prop_assert!((0.0..=1.852).contains(&si));
    }

    #[test]
    fn capture_probability_lies_in_the_unit_interval(xi in 0.0f64..1.0e4) {
        let p = capture_probability(Xi::new(xi).unwrap());
        prop_assert!((0.0..=1.0).contains(&p), "P({}) = {}", xi, p);
    }

    #[test]
    fn capture_probability_is_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = capture_probability(Xi::new(lo).unwrap());
        let p_hi = capture_probability(Xi::new(hi).unwrap());
        prop_assert!(p_hi + 1e-14 >= p_lo);
    }

    #[test]
    fn momentum_density_is_even_and_nonnegative(u in -200.0f64..200.0) {
        let b = 124e-6;
        let p = u * PLANCK / b;
        let d = momentum_density(p, b).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, momentum_density(-p, b).unwrap());
    }
}
