use proptest::prelude::*;
use slp_core::linalg::{compact_svd, spearman, Matrix};

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=40, 1usize..=40).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |d| Matrix::from_vec(r, c, d).unwrap())
    })
}

/// Random matrix of rank at most `k`.
fn low_rank() -> impl Strategy<Value = Matrix> {
    (1usize..=12, 1usize..=12, 1usize..=3).prop_flat_map(|(r, c, k)| {
        (
            prop::collection::vec(-3.0f64..3.0, r * k),
            prop::collection::vec(-3.0f64..3.0, k * c),
        )
            .prop_map(move |(a, b)| {
                let a = Matrix::from_vec(r, k, a).unwrap();
                let b = Matrix::from_vec(k, c, b).unwrap();
                a.matmul(&b).unwrap()
            })
    })
}

fn gram_error(cols: &Matrix) -> f64 {
    let g = cols.transpose().matmul(cols).unwrap();
    let mut worst = 0.0f64;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

fn check_svd(a: &Matrix) -> Result<(), TestCaseError> {
    let svd = compact_svd(a).unwrap();
    let r = svd.rank();
    prop_assert_eq!(svd.u.rows(), a.rows());
    prop_assert_eq!(svd.u.cols(), r);
    prop_assert_eq!(svd.h.rows(), r);
    prop_assert_eq!(svd.h.cols(), a.cols());
    prop_assert!(r <= a.rows().min(a.cols()));
    prop_assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    prop_assert!(svd.s.iter().all(|&s| s >= 0.0));

    let rebuilt = svd.reconstruct();
    let diff: f64 = a
        .data()
        .iter()
        .zip(rebuilt.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    prop_assert!(diff <= 1e-10 * a.frobenius_norm().max(1.0), "reconstruction {diff}");
    if r > 0 {
        prop_assert!(gram_error(&svd.u) <= 1e-10, "U gram {}", gram_error(&svd.u));
        prop_assert!(gram_error(&svd.h.transpose()) <= 1e-10);
        for j in 0..r {
            let col = svd.u.col(j);
            let mut pivot = 0;
            for (i, v) in col.iter().enumerate() {
                if v.abs() > col[pivot].abs() {
                    pivot = i;
                }
            }
            prop_assert!(col[pivot] >= 0.0);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn svd_contracts(a in matrix()) {
        check_svd(&a)?;
    }
}

proptest! {
    #[test]
    fn svd_low_rank(a in low_rank()) {
        check_svd(&a)?;
        prop_assert!(compact_svd(&a).unwrap().rank() <= 3);
    }

    #[test]
    fn svd_is_deterministic(a in matrix()) {
        let x = compact_svd(&a).unwrap();
        let y = compact_svd(&a.clone()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&x.s), bits(&y.s));
        prop_assert_eq!(bits(x.u.data()), bits(y.u.data()));
        prop_assert_eq!(bits(x.h.data()), bits(y.h.data()));
    }

    #[test]
    fn spearman_self_symmetric_monotone(
        a in prop::collection::vec(-100.0f64..100.0, 2..50),
        seed in prop::collection::vec(-100.0f64..100.0, 50),
    ) {
        let b = &seed[..a.len()];
        if a.iter().any(|&v| v != a[0]) {
            prop_assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        }
        let ab = spearman(&a, b).unwrap();
        prop_assert_eq!(ab, spearman(b, &a).unwrap());
        prop_assert!((-1.0..=1.0).contains(&ab));
        // strictly increasing transforms leave ranks, hence the score, unchanged
        let a_t: Vec<f64> = a.iter().map(|v| (v / 50.0).exp() * 3.0 + 1.0).collect();
        let b_t: Vec<f64> = b.iter().map(|v| v * v * v + 2.0 * v).collect();
        prop_assert!((spearman(&a_t, &b_t).unwrap() - ab).abs() < 1e-12);
    }
}
