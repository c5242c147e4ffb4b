use proptest::prelude::*;
use qpolar::bounds::{
    concentration, donoho_stark_check, hardy_classify, mahler_box, mahler_ellipsoid, mahler_volume, HardyCase,
};
use qpolar::gaussian::{Axis, GaussianPure};
use qpolar::matcore::rel_diff;
use qpolar::polarity::{polar_dual, BoxBody, ConvexBody, EllipsoidBody, Space};
use qpolar::sampling::{random_invertible, random_spd, seeded};
use qpolar::TolerancePolicy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mahler_volume_is_linear_invariant(seed in any::<u64>(), n in 1usize..7, hbar in 0.2f64..3.0) {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let a = random_spd(&mut rng, n, 1.5);
        let x: ConvexBody = EllipsoidBody::new(Space::Position, a, hbar, &tol).unwrap().into();
        let r = mahler_volume(&x, hbar, &tol).unwrap();
        let want = mahler_ellipsoid(n, hbar);
        prop_assert!((r.upsilon - want).abs() < 1e-10 * want);
        prop_assert!(r.within_bounds);

        let ConvexBody::Ellipsoid(e) = &x else { unreachable!() };
        let l = random_invertible(&mut rng, n, 0.5);
        let moved: ConvexBody = e.linear_image(l.as_mat()).unwrap().into();
        let rm = mahler_volume(&moved, hbar, &tol).unwrap();
        prop_assert!((rm.upsilon - want).abs() < 1e-9 * want);
    }

    #[test]
    fn mahler_box_value(widths in proptest::collection::vec(0.05f64..20.0, 1..8), hbar in 0.2f64..3.0) {
        let tol = TolerancePolicy::default();
        let n = widths.len();
        let b: ConvexBody = BoxBody::new(Space::Position, widths).unwrap().into();
        let r = mahler_volume(&b, hbar, &tol).unwrap();
        prop_assert!((r.upsilon - mahler_box(n, hbar)).abs() < 1e-10 * r.upsilon);
        prop_assert!(r.within_bounds);
    }

    #[test]
    fn hardy_dual_shapes_give_the_unique_gaussian(seed in any::<u64>(), n in 1usize..5, hbar in 0.3f64..2.0) {
        let tol = TolerancePolicy::default();
        let a = random_spd(&mut seeded(seed), n, 1.0);
        let v = hardy_classify(&a, &a.inverse(&tol).unwrap(), hbar, &tol).unwrap();
        prop_assert_eq!(v.case, HardyCase::UniqueGaussian);
        let psi = v.state.unwrap();
        prop_assert!(rel_diff(psi.w().as_mat(), a.as_mat()) < 1e-12);
        prop_assert!(psi.y().as_mat().norm() == 0.0);
        prop_assert!((v.hardy_capacity - std::f64::consts::PI * hbar).abs() < 1e-9 * hbar);
    }

    #[test]
    fn hardy_case_tracks_scaling(seed in any::<u64>(), n in 1usize..5, c in 0.1f64..3.0) {
        let tol = TolerancePolicy::default();
        let a = random_spd(&mut seeded(seed), n, 1.0);
        prop_assume!((c - 1.0).abs() > 1e-6);
        let v = hardy_classify(&a, &a.inverse(&tol).unwrap().scale(c), 1.0, &tol).unwrap();
        let want = if c > 1.0 { HardyCase::NoFunction } else { HardyCase::InfiniteFamily };
        prop_assert_eq!(v.case, want);
    }

    #[test]
    fn donoho_stark_holds_for_standard_gaussian_on_balls(n in 1usize..5, r in 0.2f64..4.0) {
        let tol = TolerancePolicy::default();
        let hbar = 1.0;
        let psi = GaussianPure::standard(hbar, n);
        let x: ConvexBody = EllipsoidBody::ball(Space::Position, n, r).unwrap().into();
        let p = polar_dual(&x, hbar).unwrap();
        let ex = concentration(&psi, &x, Axis::Position, 1, 1 << 14, &tol).unwrap();
        let ep = concentration(&psi, &p, Axis::Momentum, 2, 1 << 14, &tol).unwrap();
        let rep = donoho_stark_check(ex.eps, ep.eps, &x, &p, hbar, &tol).unwrap();
        prop_assert!(rep.holds != Some(false));
        prop_assert!(rep.band.is_some());
    }

    #[test]
    fn concentration_shrinks_with_the_body(n in 1usize..4, r in 0.2f64..3.0, grow in 1.05f64..3.0) {
        let tol = TolerancePolicy::default();
        let psi = GaussianPure::standard(1.0, n);
        let small: ConvexBody = BoxBody::new(Space::Position, vec![r; n]).unwrap().into();
        let large: ConvexBody = BoxBody::new(Space::Position, vec![r * grow; n]).unwrap().into();
        let es = concentration(&psi, &small, Axis::Position, 0, 1 << 12, &tol).unwrap().eps;
        let el = concentration(&psi, &large, Axis::Position, 0, 1 << 12, &tol).unwrap().eps;
        prop_assert!(el < es);
    }
}
