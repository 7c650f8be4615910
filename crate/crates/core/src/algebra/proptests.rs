use super::*;
use crate::C64;
use proptest::prelude::*;

fn coef() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn poly(arity: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..4, arity), coef()), 1..7).prop_map(move |ts| {
        Polynomial::from_terms(arity, ts.into_iter().map(|(e, c)| (Monomial::from_dense(&e), c)))
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(coef(), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivative_matches_central_difference(p in poly(3), z in point(3), v in 0usize..3) {
        let h = 1e-5;
        let d = p.derivative(v).eval(&z);
        let mut zp = z.clone();
        zp[v] += h;
        let mut zm = z.clone();
        zm[v] -= h;
        let fd = (p.eval(&zp) - p.eval(&zm)) / (2.0 * h);
        prop_assert!((d - fd).norm() <= 1e-6 * p.eval(&z).norm().max(1.0));
    }

    #[test]
    fn dehomogenize_recovers_original(ps in prop::collection::vec(poly(3), 1..4), two in any::<bool>(), seed in any::<u64>()) {
        let names = vec!["a".to_string(), "b".to_string(), "q".to_string()];
        let roles = vec![Role::Variable, Role::Variable, Role::Parameter];
        let sys = PolySystem::new(names, roles, ps).unwrap();
        let groups = if two { vec![vec![0], vec![1]] } else { vec![vec![0, 1]] };
        let (h, scheme) = homogenize_seeded(&sys, groups, seed).unwrap();
        let ones: Vec<C64> = scheme.homogenizers.iter().map(|_| C64::new(1.0, 0.0)).collect();
        let back = h.fix(&scheme.homogenizers, &ones).unwrap();
        for i in 0..sys.len() {
            prop_assert_eq!(back.poly(i), sys.poly(i));
        }
        prop_assert_eq!(h.len(), sys.len() + scheme.groups.len());
    }

    #[test]
    fn randomize_is_reproducible(ps in prop::collection::vec(poly(2), 3..5), seed in any::<u64>(), k in 1usize..3) {
        let sys = PolySystem::new(vec!["x".into(), "y".into()], vec![Role::Variable; 2], ps).unwrap();
        prop_assert_eq!(randomize(&sys, k, seed).unwrap(), randomize(&sys, k, seed).unwrap());
    }

    #[test]
    fn randomize_keeps_roots(a in coef(), b in coef(), seed in any::<u64>(), k in 1usize..4) {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let xa = &x - &Polynomial::constant(2, a);
        let yb = &y - &Polynomial::constant(2, b);
        let polys = vec![xa.clone(), &yb * &(&x * &y), &xa.pow(2) + &yb];
        let sys = PolySystem::new(vec!["x".into(), "y".into()], vec![Role::Variable; 2], polys).unwrap();
        let g = randomize(&sys, k, seed).unwrap();
        for v in g.evaluate(&[a, b]).unwrap() {
            prop_assert!(v.norm() <= 1e-12);
        }
    }

    #[test]
    fn source_round_trip(ps in prop::collection::vec(poly(3), 1..4)) {
        let sys = PolySystem::new(
            vec!["x".into(), "y".into(), "p".into()],
            vec![Role::Variable, Role::Variable, Role::Parameter],
            ps,
        ).unwrap();
        prop_assert_eq!(parse_system(&to_source(&sys)).unwrap(), sys);
    }
}
