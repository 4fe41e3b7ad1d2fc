//! Randomised identities over the coupling range and the complex rapidity plane.

use std::f64::consts::PI;

use proptest::prelude::*;
use sinhgordon::cli::reference_synthetic;
use sinhgordon::form_factors::{form_factor, OperatorSpec};
use sinhgordon::scattering::s_matrix;
use sinhgordon::special_fn::{log_barnes_g, log_gamma, two_body_f, CouplingParams};
use sinhgordon::Complex64;

fn coupling() -> impl Strategy<Value = CouplingParams> {
    (0.02f64..0.48).prop_map(|b| CouplingParams::from_b(b, 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn s_matrix_unitary_and_crossing(p in coupling(), re in -6.0f64..6.0, im in -0.3f64..0.3) {
        let beta = Complex64::new(re, im);
        let s = s_matrix(beta, &p).unwrap();
        prop_assert!((s * s_matrix(-beta, &p).unwrap() - 1.0).norm() < 1e-12 * s.norm().max(1.0));
        let crossed = s_matrix(Complex64::new(0.0, PI) - beta, &p).unwrap();
        prop_assert!((crossed - s).norm() < 1e-12 * s.norm().max(1.0));
        if im == 0.0 {
            prop_assert!((s.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn barnes_g_recursion(re in -4.5f64..6.0, im in -3.0f64..3.0) {
        prop_assume!(im.abs() > 1e-3 || re.fract().abs() > 1e-3);
        let z = Complex64::new(re, im);
        let d = log_barnes_g(z + 1.0).unwrap() - log_gamma(z).unwrap() - log_barnes_g(z).unwrap();
        prop_assert!((d.exp() - 1.0).norm() < 1e-11);
    }

    #[test]
    fn two_body_watson(p in coupling(), x in 0.05f64..5.0) {
        // F(β) = S(β) F(−β) and F(iπ − β) = F(iπ + β).
        let beta = Complex64::new(x, 0.0);
        let f = two_body_f(beta, &p).unwrap();
        let rhs = s_matrix(beta, &p).unwrap() * two_body_f(-beta, &p).unwrap();
        prop_assert!((f - rhs).norm() < 1e-11 * f.norm().max(1.0));
        let ipi = Complex64::new(0.0, PI);
        let a = two_body_f(ipi - beta, &p).unwrap();
        let b = two_body_f(ipi + beta, &p).unwrap();
        prop_assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn synthetic_exchange(p in coupling(), b0 in -2.0f64..2.0, b1 in -2.0f64..2.0, b2 in -2.0f64..2.0) {
        let spec = reference_synthetic(0.0);
        let beta = [b0, b1, b2].map(|x| Complex64::new(x, 0.0));
        let f = form_factor(&spec, &beta, &p).unwrap();
        let swapped = [beta[1], beta[0], beta[2]];
        let rhs = s_matrix(beta[0] - beta[1], &p).unwrap() * form_factor(&spec, &swapped, &p).unwrap();
        prop_assert!((f - rhs).norm() < 1e-10 * f.norm().max(1.0));
    }

    #[test]
    fn field_odd_only(p in coupling(), b0 in -2.0f64..2.0, b1 in -2.0f64..2.0) {
        let field = OperatorSpec::field(&p).unwrap();
        let beta = [b0, b1].map(|x| Complex64::new(x, 0.0));
        prop_assert!(form_factor(&field, &beta, &p).unwrap().norm() < 1e-13);
    }
}
