use fptrack::bounds::{
    asymptotic_bound_async_inf, asymptotic_bound_sync, beta_coefficient, per_iterate_bound, per_iterate_bound_series,
    BoundInputs,
};
use fptrack::domain::DomainSpec;
use fptrack::experiment::median;
use fptrack::norm::{NormKind, NormSpec};
use fptrack::rng::derive_seed;
use proptest::prelude::*;

fn box_and_point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..0.0, n),
            prop::collection::vec(0.0f64..5.0, n),
            prop::collection::vec(-20.0f64..20.0, n),
            prop::collection::vec(-20.0f64..20.0, n),
        )
    })
}

proptest! {
    #[test]
    fn box_projection_is_idempotent_and_nonexpansive((lo, hi, x, y) in box_and_point()) {
        let hi: Vec<f64> = hi.iter().map(|h| h + 1e-3).collect();
        let d = DomainSpec::boxed(lo, hi).unwrap();
        let px = d.project(&x);
        let py = d.project(&y);
        prop_assert!(d.contains(&px));
        prop_assert_eq!(d.project(&px), px.clone());
        for norm in [NormSpec::ell_2(), NormSpec::ell_inf()] {
            prop_assert!(norm.dist(&px, &py) <= norm.dist(&x, &y) + 1e-12);
        }
    }

    #[test]
    fn ball_projection_lands_inside(x in prop::collection::vec(-10.0f64..10.0, 3), r in 0.1f64..5.0) {
        for kind in [NormKind::Ell2, NormKind::EllInf] {
            let d = DomainSpec::ball(vec![1.0, -1.0, 0.5], r, kind).unwrap();
            let p = d.project(&x);
            prop_assert!(d.contains(&p));
            if d.contains(&x) {
                prop_assert_eq!(p, x.clone());
            }
        }
    }

    #[test]
    fn recursion_matches_explicit_sum(
        l in prop::collection::vec(0.0f64..0.99, 1..30),
        e0 in 0.0f64..10.0,
        e in 0.0f64..0.1,
        s in 0.0f64..0.1,
    ) {
        let n = l.len();
        let ef = vec![e; n];
        let sig = vec![s; n];
        let series = per_iterate_bound_series(e0, &ef, &sig, &l).unwrap();
        let explicit = per_iterate_bound(e0, &ef, &sig, &l, n).unwrap();
        prop_assert!((series[n] - explicit).abs() <= 1e-9 * (1.0 + explicit));
        prop_assert!((beta_coefficient(n, n, &l).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn delay_never_tightens_the_bound(l in 0.01f64..0.99, s in 0.0f64..1.0, e in 0.0f64..1.0, td in 0usize..20) {
        let base = BoundInputs::new(l, e, s, 4, NormKind::EllInf);
        let sync = asymptotic_bound_sync(&base).unwrap();
        let a = asymptotic_bound_async_inf(&base.with_delay(td, 1)).unwrap();
        let b = asymptotic_bound_async_inf(&base.with_delay(td + 1, 1)).unwrap();
        prop_assert!(sync <= a + 1e-15);
        prop_assert!(a <= b);
    }

    #[test]
    fn seeds_are_deterministic_and_tag_sensitive(seed: u64, a: u64, b: u64) {
        prop_assert_eq!(derive_seed(seed, &[a, b]), derive_seed(seed, &[a, b]));
        if a != b {
            prop_assert_ne!(derive_seed(seed, &[a]), derive_seed(seed, &[b]));
        }
    }

    #[test]
    fn median_lies_between_extremes(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let m = median(&v);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= m && m <= hi);
    }
}
