use proptest::prelude::*;
use qpolar::gaussian::{
    is_quantum_blob, purity, purity_from_nu, quantum_condition, rsup_check, sigma_from_wy, wy_from_sigma,
    projection_pair_check,
};
use qpolar::matcore::rel_diff;
use qpolar::sampling::{random_non_quantum_cov, random_pure, random_quantum_cov, seeded};
use qpolar::TolerancePolicy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantum_states_pass_every_equivalent_check(seed in any::<u64>(), n in 1usize..5) {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let st = random_quantum_cov(&mut rng, n, 1.0, 0.3);
        prop_assert!(quantum_condition(&st, &tol).holds);
        for j in 1..=n {
            prop_assert!(rsup_check(&st, j, &tol).unwrap());
        }
        let rep = projection_pair_check(&st, &tol).unwrap();
        prop_assert!(rep.is_pair);
    }

    #[test]
    fn non_quantum_states_fail_condition(seed in any::<u64>(), n in 1usize..5) {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let st = random_non_quantum_cov(&mut rng, n, 1.0);
        prop_assert!(!quantum_condition(&st, &tol).holds);
    }

    #[test]
    fn pure_state_round_trip(seed in any::<u64>(), n in 1usize..5, hbar in 0.2f64..3.0) {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let psi = random_pure(&mut rng, n, hbar);
        let st = sigma_from_wy(&psi, &tol).unwrap();
        prop_assert!((purity(&st) - 1.0).abs() < 1e-8);
        prop_assert!((purity_from_nu(&st) - 1.0).abs() < 1e-8);
        prop_assert!(is_quantum_blob(&st, &tol).unwrap().is_blob);
        let back = wy_from_sigma(&st, &tol).unwrap();
        prop_assert!(rel_diff(back.w().as_mat(), psi.w().as_mat()) < 1e-8);
        prop_assert!((back.y().as_mat() - psi.y().as_mat()).norm() < 1e-8 * (1.0 + psi.y().as_mat().norm()));
    }

    #[test]
    fn purity_routes_agree(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = seeded(seed);
        let st = random_quantum_cov(&mut rng, n, 1.0, 0.0);
        let a = purity(&st);
        let b = purity_from_nu(&st);
        let ev = st.sigma().eigenvalues();
        let kappa = ev[ev.len() - 1] / ev[0];
        prop_assert!((a - b).abs() < (1e-9 + 1e-15 * kappa) * a);
        prop_assert!(a <= 1.0 + 1e-9);
    }
}
