use crate::algebra::{Monomial, PolySystem, Polynomial, Role};
use crate::error::{invalid, Result};
use crate::numlin::{svd, ComplexMatrix};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Exponent vectors in `n` variables of total degree `<= d`, graded then
/// lexicographic with the first variable leading.
pub fn graded_monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=d {
        let mut cur = vec![0u32; n];
        fill(&mut cur, 0, deg, &mut out);
    }
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    let n = cur.len();
    if n == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        fill(cur, pos + 1, left - e, out);
    }
    cur[pos] = 0;
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `(1/gamma!) d^gamma f / dx^gamma` with `gamma` indexed over `vars`.
pub fn taylor_coefficient(f: &Polynomial, vars: &[usize], gamma: &[u32]) -> Polynomial {
    let mut g = f.clone();
    let mut denom = 1.0;
    for (&v, &e) in vars.iter().zip(gamma) {
        for _ in 0..e {
            g = g.derivative(v);
        }
        denom *= factorial(e);
    }
    g.scale(C64::new(1.0 / denom, 0.0))
}

/// Coefficients of `f(x* + y)` in `y`, as a map from exponent vector to value.
fn shifted(f: &Polynomial, x_star: &[C64]) -> Polynomial {
    let n = f.arity();
    let mut g = f.clone();
    for (v, &x) in x_star.iter().enumerate() {
        let sub = &Polynomial::var(n, v) + &Polynomial::constant(n, x);
        g = g.compose_var(v, &sub);
    }
    g
}

/// `d`-th Macaulay matrix of a system in variables only.
///
/// Rows are indexed by `(beta, j)` with `|beta| <= max(0, d - 1)` (beta major),
/// columns by `alpha` with `|alpha| <= d`; the entry is the Taylor coefficient of
/// `f_j` at `x*` of order `alpha - beta` when `beta <= alpha`, else zero.
pub fn macaulay_matrix(f: &PolySystem, x_star: &[C64], d: u32) -> Result<ComplexMatrix> {
    if f.roles().iter().any(|r| *r != Role::Variable) {
        return invalid("Macaulay matrix needs a system in variables only");
    }
    let n = f.arity();
    if x_star.len() != n {
        return Err(crate::Error::Dimension { expected: n, got: x_star.len() });
    }
    let shifted: Vec<Polynomial> = f.polys().iter().map(|p| shifted(p, x_star)).collect();
    Ok(macaulay_from(&shifted, n, d))
}

fn macaulay_from(shifted: &[Polynomial], n: usize, d: u32) -> ComplexMatrix {
    let cols = graded_monomials(n, d);
    let rows = graded_monomials(n, d.saturating_sub(1));
    let k = shifted.len();
    let mut m = ComplexMatrix::zeros(rows.len() * k, cols.len());
    for (bi, beta) in rows.iter().enumerate() {
        for (j, g) in shifted.iter().enumerate() {
            for (ai, alpha) in cols.iter().enumerate() {
                if beta.iter().zip(alpha).all(|(b, a)| b <= a) {
                    let diff: Vec<u32> = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
                    m[(bi * k + j, ai)] = g.coefficient(&Monomial::from_dense(&diff));
                }
            }
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacaulayProfile {
    #[serde(skip)]
    pub matrices: Vec<ComplexMatrix>,
    pub null_dims: Vec<usize>,
    pub hilbert: Vec<usize>,
    pub stabilized: bool,
    pub multiplicity: Option<usize>,
    /// Absolute singular-value threshold used for every rank decision.
    pub threshold: f64,
}

/// Local Hilbert function `h(0..=d_max)` from Macaulay null-space dimensions.
///
/// Ranks use the absolute threshold `tol * s_max(M_{d_max})`, so that rounding
/// noise in `f(x*)` is not mistaken for a nonzero entry of the small matrices.
pub fn local_hilbert(f: &PolySystem, x_star: &[C64], d_max: u32, tol: f64) -> Result<MacaulayProfile> {
    if f.roles().iter().any(|r| *r != Role::Variable) {
        return invalid("local Hilbert function needs a system in variables only");
    }
    let n = f.arity();
    let shifted: Vec<Polynomial> = f.polys().iter().map(|p| shifted(p, x_star)).collect();
    let matrices: Vec<ComplexMatrix> = (0..=d_max).map(|d| macaulay_from(&shifted, n, d)).collect();
    let svds: Vec<_> = matrices.iter().map(svd).collect();
    let top = svds.last().and_then(|s| s.s.first().copied()).unwrap_or(0.0);
    let threshold = tol * top;
    let null_dims: Vec<usize> = matrices
        .iter()
        .zip(&svds)
        .map(|(m, s)| m.cols() - s.rank_abs(threshold))
        .collect();
    let mut hilbert = Vec::with_capacity(null_dims.len());
    for (d, &nd) in null_dims.iter().enumerate() {
        let prev = if d == 0 { 0 } else { null_dims[d - 1] };
        hilbert.push(nd.saturating_sub(prev));
    }
    if hilbert.first() != Some(&1) {
        return invalid(format!("h(0) = {} at the given point: not a solution at tolerance", hilbert.first().unwrap_or(&0)));
    }
    let stabilized = hilbert.iter().skip(1).any(|&h| h == 0);
    let multiplicity = if stabilized {
        let upto = hilbert.iter().position(|&h| h == 0).unwrap_or(hilbert.len());
        Some(hilbert[..upto].iter().sum())
    } else {
        None
    };
    Ok(MacaulayProfile { matrices, null_dims, hilbert, stabilized, multiplicity, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_system;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn ordering() {
        let m = graded_monomials(2, 2);
        assert_eq!(m, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(graded_monomials(3, 3).len(), 20);
    }

    #[test]
    fn low_order_matrices() {
        let f = parse_system("vars x, y; poly x^2 + 3*x*y - 1; poly y - 2*x;").unwrap();
        let x = [C64::new(0.5, 0.1), r(-1.0)];
        let m0 = macaulay_matrix(&f, &x, 0).unwrap();
        let fx = f.evaluate(&x).unwrap();
        assert_eq!(m0.cols(), 1);
        assert_eq!(m0.column(0), fx);
        let m1 = macaulay_matrix(&f, &x, 1).unwrap();
        assert_eq!((m1.rows(), m1.cols()), (2, 3));
        for v in 0..2 {
            let d = f.differentiate(v).unwrap().evaluate(&x).unwrap();
            for j in 0..2 {
                assert!((m1[(j, v + 1)] - d[j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn square_of_x() {
        let f = parse_system("vars x; poly x^2;").unwrap();
        let m2 = macaulay_matrix(&f, &[r(0.0)], 2).unwrap();
        // rows beta = 1, x; columns 1, x, x^2
        let expect = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m2[(i, j)], r(expect[i][j]));
            }
        }
        let prof = local_hilbert(&f, &[r(0.0)], 2, 1e-8).unwrap();
        assert_eq!(prof.hilbert, vec![1, 1, 0]);
        assert_eq!(prof.multiplicity, Some(2));
        assert_eq!(prof.null_dims, vec![1, 2, 2]);
    }

    #[test]
    fn simple_root() {
        let f = parse_system("vars x, y; poly x - 1; poly y + x;").unwrap();
        let prof = local_hilbert(&f, &[r(1.0), r(-1.0)], 1, 1e-8).unwrap();
        assert_eq!(prof.hilbert, vec![1, 0]);
        assert_eq!(prof.multiplicity, Some(1));
    }

    #[test]
    fn not_a_root() {
        let f = parse_system("vars x; poly x - 1;").unwrap();
        assert!(local_hilbert(&f, &[r(0.0)], 1, 1e-8).is_err());
    }

    mod props {
        use super::super::*;
        use crate::algebra::{PolySystem, Role};
        use proptest::prelude::*;

        fn system(n: usize, coeffs: &[(f64, f64)]) -> PolySystem {
            let mons = graded_monomials(n, 3);
            let polys = coeffs
                .chunks(mons.len())
                .map(|cs| {
                    let terms = mons.iter().zip(cs).map(|(a, &(re, im))| (Monomial::from_dense(a), C64::new(re, im)));
                    Polynomial::from_terms(n, terms)
                })
                .collect();
            let names = (0..n).map(|i| format!("x{i}")).collect();
            PolySystem::new(names, vec![Role::Variable; n], polys).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn entries_are_scaled_derivatives(
                coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 40),
                x in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2),
                d in 0u32..4,
            ) {
                // two cubics in two variables: 10 coefficients each
                let f = system(2, &coeffs[..20]);
                let xs: Vec<C64> = x.iter().map(|&(re, im)| C64::new(re, im)).collect();
                let m = macaulay_matrix(&f, &xs, d).unwrap();
                let cols = graded_monomials(2, d);
                let rows = graded_monomials(2, d.saturating_sub(1));
                for (bi, beta) in rows.iter().enumerate() {
                    for j in 0..2 {
                        for (ai, alpha) in cols.iter().enumerate() {
                            let expect = if beta.iter().zip(alpha).all(|(b, a)| b <= a) {
                                let diff: Vec<u32> = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
                                taylor_coefficient(f.poly(j), &[0, 1], &diff).eval(&xs)
                            } else {
                                C64::default()
                            };
                            prop_assert!((m[(bi * 2 + j, ai)] - expect).norm() <= 1e-12);
                        }
                    }
                }
            }
        }
    }
}
