use proptest::prelude::*;
use robust_nag::algebra::{parse_system, CompiledSystem};
use robust_nag::numlin::norm;
use robust_nag::structure::cluster_points;
use robust_nag::tracker::{solve_total_degree, PathStatus, TrackOptions};
use robust_nag::C64;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn distinct(points: &[Vec<C64>]) -> usize {
    let mut ids = cluster_points(points, 1e-6);
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

#[test]
fn decoupled_quadratics() {
    // x^2 = a, y^2 = b: roots are the four sign choices
    let f = parse_system("vars x, y; params a, b; poly x^2 - a; poly y^2 - b;").unwrap();
    let res = solve_total_degree(&f, &[c(2.0), c(-3.0)], 1, &TrackOptions::default()).unwrap();
    assert_eq!(res.len(), 4);
    let (sa, sb) = (2f64.sqrt(), C64::new(0.0, 3f64.sqrt()));
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            let want = [c(sx * sa), sb * sy];
            assert!(res.iter().any(|r| (r.endpoint[0] - want[0]).norm() < 1e-10 && (r.endpoint[1] - want[1]).norm() < 1e-10));
        }
    }
}

#[test]
fn circle_and_line() {
    // x^2 + y^2 = 1, y = x: (±1/sqrt 2, ±1/sqrt 2); the line has degree 1 so two paths
    let f = parse_system("vars x, y; poly x^2 + y^2 - 1; poly y - x;").unwrap();
    let res = solve_total_degree(&f, &[], 3, &TrackOptions::default()).unwrap();
    assert_eq!(res.len(), 2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for s in [h, -h] {
        assert!(res.iter().any(|r| r.is_success() && (r.endpoint[0] - c(s)).norm() < 1e-10 && (r.endpoint[1] - c(s)).norm() < 1e-10));
    }
}

#[test]
fn deficient_system_diverges() {
    // two circles: 2 finite points, the other 2 at the circular points at infinity
    let f = parse_system("vars x, y; poly x^2 + y^2 - 4; poly x^2 + y^2 - 2*x - 1;").unwrap();
    let res = solve_total_degree(&f, &[], 7, &TrackOptions::default()).unwrap();
    assert_eq!(res.len(), 4);
    let finite: Vec<Vec<C64>> = res.iter().filter(|r| r.is_success()).map(|r| r.endpoint.clone()).collect();
    assert_eq!(finite.len(), 2);
    assert_eq!(res.iter().filter(|r| r.status == PathStatus::Diverged).count(), 2);
    for p in &finite {
        assert!((p[0] - c(1.5)).norm() < 1e-9);
        assert!((p[1] * p[1] - c(1.75)).norm() < 1e-9);
    }
}

#[test]
fn same_seed_same_endpoints() {
    let f = parse_system("vars x, y; poly x^3 - 2*x*y + 1; poly y^2 + x - 3;").unwrap();
    let a = solve_total_degree(&f, &[], 11, &TrackOptions::default()).unwrap();
    let b = solve_total_degree(&f, &[], 11, &TrackOptions::default()).unwrap();
    assert_eq!(a, b);
}

fn dense(coef: &[(f64, f64)], degs: &[u32]) -> String {
    // dense polynomials in x, y, z with the given total degrees
    let mut k = 0;
    let mut src = String::from("vars x, y, z;\n");
    for &d in degs {
        let mut terms = Vec::new();
        for i in 0..=d {
            for j in 0..=d - i {
                for l in 0..=d - i - j {
                    let (re, im) = coef[k % coef.len()];
                    k += 1;
                    terms.push(format!("({re:.6} + {im:.6}i)*x^{i}*y^{j}*z^{l}"));
                }
            }
        }
        src.push_str(&format!("poly {};\n", terms.join(" + ")));
    }
    src
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bezout_count_for_generic_dense(
        coef in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 40),
        degs in prop::collection::vec(1u32..=3, 3),
        seed in 0u64..1000,
    ) {
        let f = parse_system(&dense(&coef, &degs)).unwrap();
        let res = solve_total_degree(&f, &[], seed, &TrackOptions::default()).unwrap();
        let bezout: u32 = degs.iter().product();
        prop_assert_eq!(res.len(), bezout as usize);
        let ok: Vec<Vec<C64>> = res.iter().filter(|r| r.is_success()).map(|r| r.endpoint.clone()).collect();
        prop_assert_eq!(ok.len(), bezout as usize);
        prop_assert_eq!(distinct(&ok), bezout as usize);
        let cs = CompiledSystem::new(&f);
        for p in &ok {
            prop_assert!(norm(&cs.eval(p)) <= 1e-8 * (1.0 + norm(p)).powi(3));
        }
    }
}
