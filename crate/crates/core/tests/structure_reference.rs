use robust_nag::algebra::{parse_system, Role, Slice};
use robust_nag::structure::{trace_data, witness_superset, Label, WitnessOptions};
use robust_nag::C64;

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

const QUARTIC: &str = "vars x1, x2; params p1, p2, p3, p4, p5, p6, p7, p8, p9, p10;
poly p1 + p2*x1 + p3*x1^2 + p4*x1^3 + p5*x1*x2 + p6*x1^2*x2 + p7*x1^3*x2 + p8*x2^2 + p9*x1^2*x2^2 + p10*x1*x2^3;";

const P_HAT: [f64; 10] = [-30.0, 20.0, 18.0, -12.0, 12.000007, -8.0, 0.0000003, -5.0, 3.0, 2.0];

#[test]
fn quartic_trace_values() {
    let f = parse_system(QUARTIC).unwrap();
    let p: Vec<C64> = P_HAT.iter().map(|&v| r(v)).collect();
    let slice = Slice { coeffs: vec![vec![r(2.0), r(-3.0), r(-1.0)]] };
    let opts = WitnessOptions { slice: Some(slice.clone()), ..Default::default() };
    let w = witness_superset(&f, &p, 1, 17, &opts).unwrap();
    assert_eq!(w.points.len(), 4);
    assert!(w.points.iter().all(|c| c.has(Label::NearSolution)));

    let fx = f.fix_role(Role::Parameter, &p).unwrap();
    let pts: Vec<Vec<C64>> = w.points.iter().map(|c| c.point.clone()).collect();
    let td = trace_data(&fx, &slice, &pts, 0, 5, 4).unwrap();

    let table = [
        ([1.15384590, 0.43589727], [0.08241763, -0.27838824], [0.00546655, 0.00364437]),
        ([-0.99999993, -0.99999995], [0.07142858, -0.28571428], [-0.00546648, -0.00364432]),
        ([1.64589862, 0.76393241], [-0.17082057, -0.44721371], [0.13416408, 0.08944272]),
        ([8.35410056, 5.23606704], [1.17082044, 0.44721363], [-0.13416415, -0.08944277]),
    ];
    let mut order = Vec::new();
    for (wt, wdt, wddt) in &table {
        let j = (0..4)
            .find(|&j| (td.w[j][0] - r(wt[0])).norm() < 1e-6 && (td.w[j][1] - r(wt[1])).norm() < 1e-6)
            .expect("witness point from table");
        for k in 0..2 {
            assert!((td.wd[j][k] - r(wdt[k])).norm() < 1e-7, "wd {j} {k}");
            assert!((td.wdd[j][k] - r(wddt[k])).norm() < 1e-7, "wdd {j} {k}");
        }
        order.push(j);
    }
    let s12 = [td.wdd[order[0]][0] + td.wdd[order[1]][0], td.wdd[order[0]][1] + td.wdd[order[1]][1]];
    assert!((s12[0] - r(7e-8)).norm() < 1e-8 && (s12[1] - r(5e-8)).norm() < 1e-8);
    assert!(td.full_trace().norm() < 1e-12);
}
