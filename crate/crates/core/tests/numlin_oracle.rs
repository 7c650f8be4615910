use nalgebra::DMatrix;
use proptest::prelude::*;
use robust_nag::numlin::{lstsq_min_norm, norm, null_space, numerical_rank, solve_square, svd, ComplexMatrix};
use robust_nag::C64;

fn entries(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b)), len)
}

fn matrix(max: usize) -> impl Strategy<Value = (usize, usize, Vec<C64>)> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| entries(m * n).prop_map(move |d| (m, n, d)))
}

fn ours(m: usize, n: usize, d: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_row_major(m, n, d.to_vec()).unwrap()
}

fn oracle(m: usize, n: usize, d: &[C64]) -> DMatrix<C64> {
    DMatrix::from_row_slice(m, n, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match(case in matrix(7)) {
        let (m, n, d) = case;
        let mut want: Vec<f64> = oracle(m, n, &d).singular_values().iter().copied().collect();
        want.sort_by(|a, b| b.total_cmp(a));
        let got = svd(&ours(m, n, &d)).s;
        prop_assert_eq!(got.len(), m.min(n));
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10 * (1.0 + w), "{g} vs {w}");
        }
    }

    #[test]
    fn svd_reconstructs(case in matrix(6)) {
        let (m, n, d) = case;
        let a = ours(m, n, &d);
        let s = svd(&a);
        let k = s.s.len();
        for i in 0..m {
            for j in 0..n {
                let mut x = C64::default();
                for r in 0..k {
                    x += s.u[(i, r)] * s.s[r] * s.v[(j, r)].conj();
                }
                prop_assert!((x - a[(i, j)]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn square_solve_matches(d in entries(25), b in entries(5)) {
        let x = solve_square(&ours(5, 5, &d), &b).unwrap();
        let want = oracle(5, 5, &d).lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
        let scale = 1.0 + want.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (g, w) in x.iter().zip(want.iter()) {
            prop_assert!((g - w).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn low_rank_products(left in entries(12), right in entries(12)) {
        // (6x2)(2x6): rank 2, null space of dimension 4
        let l = ours(6, 2, &left);
        let r = ours(2, 6, &right);
        let a = l.matmul(&r);
        prop_assert_eq!(numerical_rank(&a, 1e-10), 2);
        let nb = null_space(&a, 1e-10);
        prop_assert_eq!(nb.cols(), 4);
        for c in 0..nb.cols() {
            let v = nb.column(c);
            prop_assert!(norm(&a.matvec(&v)) <= 1e-10 * (1.0 + a.frobenius()));
            prop_assert!((norm(&v) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn min_norm_least_squares(d in entries(12), b in entries(3)) {
        // consistent wide system: residual zero and no component in the null space
        let a = ours(3, 4, &d);
        let x = lstsq_min_norm(&a, &b, 1e-12).unwrap();
        let r: Vec<C64> = a.matvec(&x).iter().zip(&b).map(|(u, v)| u - v).collect();
        prop_assert!(norm(&r) <= 1e-9 * (1.0 + norm(&b)));
        let nb = null_space(&a, 1e-12);
        for c in 0..nb.cols() {
            let v = nb.column(c);
            let proj: C64 = v.iter().zip(&x).map(|(u, w)| u.conj() * w).sum();
            prop_assert!(proj.norm() <= 1e-9 * (1.0 + norm(&x)));
        }
    }
}
