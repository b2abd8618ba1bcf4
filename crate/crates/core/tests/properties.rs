//! Randomized invariants of the arithmetic, the discrete operators and the
//! inverse iteration.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cuspsteklov::assembly::{FemSpace, Problem};
use cuspsteklov::geometry::{Domain, DomainSpec, WeightMode};
use cuspsteklov::mesh::ladder_mesh;
use cuspsteklov::numerics::Dd;
use cuspsteklov::p_solver::{
    constant_start, inverse_iteration, operator_properties, random_fem_function, trace_constant, InnerSolveConfig,
};

fn cusp(alpha: f64, h: f64) -> FemSpace {
    let domain = Domain::Cusp(DomainSpec::power(alpha).unwrap());
    FemSpace::new(ladder_mesh(&domain, h, 0).unwrap(), domain, WeightMode::Profile).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dd_division_inverts_multiplication(a in -1e6f64..1e6, b in 1e-3f64..1e3) {
        let x = Dd::new(a) + Dd::new(a * 1e-17);
        let back = (x * Dd::new(b)) / Dd::new(b) - x;
        prop_assert!(back.to_f64().abs() <= 1e-30 * a.abs().max(1e-300));
    }

    #[test]
    fn dd_square_root_squares_back(x in 1e-12f64..1e12) {
        let r = Dd::new(x).sqrt();
        prop_assert!(((r * r) - Dd::new(x)).to_f64().abs() <= 1e-30 * x);
    }

    #[test]
    fn dd_sum_is_exact(a in -1e8f64..1e8, e in -1e-8f64..1e-8) {
        let s = Dd::sum(a, e) - Dd::new(a);
        prop_assert_eq!(s.to_f64(), e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn operator_suite_holds_for_any_exponent(p in 1.1f64..6.0, seed in 0u64..1000) {
        let s = cusp(2.0, 0.4);
        for check in operator_properties(&s, p, 12, seed).unwrap() {
            prop_assert!(check.passed, "p = {p}: {} worst {:e}", check.name, check.worst);
        }
    }

    #[test]
    fn rayleigh_quotient_is_scale_invariant(p in 1.1f64..6.0, seed in 0u64..1000, t in prop_oneof![Just(-2.0f64), Just(0.5), Just(8.0)]) {
        let s = cusp(2.0, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_fem_function(&s, &mut rng, seed as usize);
        let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
        for (problem, q) in [(Problem::Schrodinger, p), (Problem::Harmonic, 2.0)] {
            let a = s.rayleigh_quotient(&u, q, problem).unwrap();
            let b = s.rayleigh_quotient(&tu, q, problem).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn inverse_iteration_is_monotone_and_certifies_the_trace_constant(p in 1.3f64..4.0) {
        let s = cusp(2.0, 0.4);
        let cfg = InnerSolveConfig::default();
        let trace = inverse_iteration(&s, p, &constant_start(&s), &cfg, 1e-6, 300).unwrap();
        prop_assert!(trace.converged, "p = {p}: {:?}", trace.failure);
        for w in trace.steps.windows(2) {
            prop_assert!(w[1].mu <= w[0].mu + 1e-12);
        }
        for st in &trace.steps {
            prop_assert!(st.sobolev_p <= st.mu * (1.0 + 1e-12));
        }
        let rep = trace_constant(&s, &trace, 20, 3).unwrap();
        prop_assert!(rep.max_ratio <= 1.0 + 1e-8);
    }
}
