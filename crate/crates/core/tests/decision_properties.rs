use proptest::prelude::*;
use zeno_tomo::decision::{
    binomial_error, binomial_threshold, optimal_binomial_error, required_particles,
};
use zeno_tomo::interferometer::{
    zeno_probabilities, zeno_threshold, zeno_threshold_loops, ApparatusConfig,
};
use zeno_tomo::special::{binomial_cdf, binomial_pmf};

proptest! {
    #[test]
    fn error_is_a_probability_below_the_smaller_prior(
        p1 in 0.001f64..0.9,
        gap in 0.001f64..0.09,
        alpha in 0.01f64..0.99,
        n in 1u64..2000,
    ) {
        let p2 = p1 + gap;
        let rule = binomial_threshold(p1, p2, alpha, n).unwrap();
        let pe = binomial_error(p1, p2, alpha, n, &rule).unwrap();
        prop_assert!((0.0..=alpha.min(1.0 - alpha) + 1e-12).contains(&pe));
        prop_assert!((optimal_binomial_error(p2, p1, 1.0 - alpha, n).unwrap() - pe).abs() < 1e-15);
    }

    #[test]
    fn cdf_is_monotone_in_k(n in 1u64..400, p in 0.001f64..0.999) {
        let mut last = 0.0;
        for k in 0..=n as i64 {
            let c = binomial_cdf(k, n, p).unwrap();
            prop_assert!(c + 1e-13 >= last);
            prop_assert!((0.0..=1.0 + 1e-13).contains(&c));
            last = c;
        }
        prop_assert!((last - 1.0).abs() < 1e-15);
        prop_assert!((binomial_cdf(0, n, p).unwrap() - binomial_pmf(0, n, p)).abs() < 1e-13);
    }

    #[test]
    fn threshold_forms_are_dual(loops in 1u32..100_000) {
        let tau = zeno_threshold(loops);
        prop_assert!(tau > 1.0 - std::f64::consts::PI / f64::from(loops));
        if tau > 0.0 {
            let l = zeno_threshold_loops(tau).unwrap();
            prop_assert!((l - f64::from(loops)).abs() < 1e-6 * f64::from(loops));
        }
    }

    #[test]
    fn absorption_is_monotone_in_loops_inside_the_regime(tau in 0.05f64..0.95) {
        let start = zeno_threshold_loops(tau).unwrap().ceil() as u32 + 1;
        let pa = |l: u32| zeno_probabilities(&ApparatusConfig::new(l, tau).unwrap()).unwrap().p_a;
        prop_assert!(pa(start * 2) < pa(start));
        prop_assert!(pa(start * 8) < pa(start * 2));
    }
}

#[test]
fn required_particles_meets_target_from_both_orders() {
    let a = required_particles(0.0591, 0.0199, 0.97, 0.005).unwrap();
    let b = required_particles(0.0199, 0.0591, 0.03, 0.005).unwrap();
    assert_eq!(a, b);
    assert!(optimal_binomial_error(0.0591, 0.0199, 0.97, a).unwrap() <= 0.005);
    assert!(optimal_binomial_error(0.0591, 0.0199, 0.97, a - 1).unwrap() > 0.005);
}
