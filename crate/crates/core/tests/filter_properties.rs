use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wdn_estim::filters::{kf_predict, kf_update, ukf_predict, ukf_update, ut_weights, GaussianBelief};

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn arb_system(max_n: usize) -> impl Strategy<Value = (GaussianBelief<f64>, DMatrix<f64>, DMatrix<f64>)> {
    (2usize..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(0.01f64..1.0, n),
        )
            .prop_map(move |(m, a, f, q)| {
                let a = DMatrix::from_vec(n, n, a);
                let p = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
                let belief = GaussianBelief::new(DVector::from_vec(m), p).unwrap();
                (belief, DMatrix::from_vec(n, n, f), DMatrix::from_diagonal(&DVector::from_vec(q)))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unscented_predict_is_exact_for_affine_maps((belief, f, q) in arb_system(12), alpha in 0.1f64..1.0) {
        let n = belief.dim();
        let w = ut_weights(n, alpha, 2.0).unwrap();
        let offset = DVector::from_fn(n, |i, _| i as f64 * 0.5);
        let u = ukf_predict(&belief, |x| &f * x + &offset, &q, &w).unwrap();
        let k = kf_predict(&belief, &f, &q).unwrap();
        prop_assert!((&u.mean - &k.mean - &offset).amax() <= 1e-9 * k.mean.amax().max(1.0));
        prop_assert!(rel_err(&u.cov, &k.cov) <= 1e-9);
        prop_assert!((&u.cov - u.cov.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn updates_never_grow_the_trace((belief, g_full, _) in arb_system(10), rows in 1usize..6, r in 1e-4f64..1.0) {
        let n = belief.dim();
        let m = rows.min(n);
        let g = g_full.rows(0, m).into_owned();
        let r = DMatrix::identity(m, m) * r;
        let z = &g * &belief.mean + DVector::from_element(m, 0.3);
        let w = ut_weights(n, 0.5, 2.0).unwrap();

        let k = kf_update(&belief, &g, &r, &z).unwrap();
        let u = ukf_update(&belief, |x| &g * x, &r, &z, &w).unwrap();
        let t0 = belief.cov.trace();
        prop_assert!(k.cov.trace() <= t0 * (1.0 + 1e-12));
        prop_assert!(u.cov.trace() <= t0 * (1.0 + 1e-12));
        prop_assert!(rel_err(&u.cov, &k.cov) <= 1e-7);
        prop_assert!((&u.mean - &k.mean).amax() <= 1e-7 * k.mean.amax().max(1.0));
        for c in [&k.cov, &u.cov] {
            prop_assert!((c - c.transpose()).amax() <= 1e-12);
        }
    }
}
