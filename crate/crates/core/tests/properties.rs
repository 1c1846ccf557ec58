use maxlat_core::lattice::{ball_count, BallSpec, Limits, Mode};
use maxlat_core::maxop::{apply_avg, dyadic_maximal, GridFunction, Semantics};
use maxlat_core::multiplier::{MultiplierDp, TorusPoint};
use proptest::prelude::*;

fn frequency(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5f64..0.5, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_count_matches_exact(d in 1u32..40, n in 1u32..30) {
        let spec = BallSpec::new(d, n).unwrap();
        let limits = Limits::default();
        let exact: f64 = ball_count(spec, Mode::Exact, &limits).unwrap().to_string().parse().unwrap();
        let fast: f64 = ball_count(spec, Mode::Fast, &limits).unwrap().to_string().parse().unwrap();
        prop_assert!((fast - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn multiplier_is_even_bounded_and_permutation_invariant(
        (d, xi) in (1usize..7).prop_flat_map(|d| (Just(d), frequency(d))),
        n in 1u32..6,
    ) {
        let dp = MultiplierDp::new(d as u32, n, &Limits::default()).unwrap();
        let m = dp.eval(n, &TorusPoint::new(xi.clone())).unwrap();
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        let mut rev = xi.clone();
        rev.reverse();
        let shifted: Vec<f64> = xi.iter().map(|x| x + 3.0).collect();
        prop_assert!(m.abs() <= 1.0 + 1e-12);
        for other in [neg, rev, shifted] {
            prop_assert!((dp.eval(n, &TorusPoint::new(other)).unwrap() - m).abs() < 1e-12);
        }
    }

    #[test]
    fn averages_contract_and_maximal_dominates(
        values in prop::collection::vec(-1.0f64..1.0, 64),
        n in 1u32..4,
    ) {
        let f = GridFunction::from_real(2, 8, |x| values[(x[0].rem_euclid(8) * 8 + x[1].rem_euclid(8)) as usize]).unwrap();
        let a = apply_avg(&f, n, Semantics::Periodic).unwrap();
        prop_assert!(a.recompute_norm() <= f.recompute_norm() * (1.0 + 1e-12));
        let sup = dyadic_maximal(&f, &[1, 2], Semantics::Periodic).unwrap();
        for r in [1u32, 2] {
            let g = apply_avg(&f, r, Semantics::Periodic).unwrap();
            for (s, v) in sup.values().iter().zip(g.values()) {
                prop_assert!(s.re + 1e-12 >= v.norm());
            }
        }
    }
}
