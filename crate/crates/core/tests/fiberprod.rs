use proptest::prelude::*;
use robust_nag::algebra::{parse_system, PolySystem, Slice};
use robust_nag::fiberprod::{build_witness_condition, image_dimension, ConditionSystem, FiberProductSystem};
use robust_nag::structure::{witness_superset, WitnessOptions, WitnessSuperset};
use robust_nag::tracker::TrackOptions;
use robust_nag::C64;

const POSDIM: &str = "vars x1, x2; params p1, p2;
poly x1*x2 - 2*x1 + p1*x2 + p2;
poly x1^2 - 2*x1 + p1*x1 + p2;";

fn nominal() -> Vec<C64> {
    vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]
}

fn setup(seed: u64) -> (PolySystem, WitnessSuperset, Vec<Vec<C64>>) {
    let f = parse_system(POSDIM).unwrap();
    let ws = witness_superset(&f, &nominal(), 1, seed, &WitnessOptions::default()).unwrap();
    let near: Vec<Vec<C64>> = ws.near_solutions().iter().map(|p| p.point.clone()).collect();
    (f, ws, near)
}

fn copy(f: &PolySystem, ws: &WitnessSuperset, pts: &[Vec<C64>], k: usize, seed: u64) -> ConditionSystem {
    let slice = ws.slice.clone().unwrap();
    let new = if k == 0 { Some(slice.clone()) } else { Some(Slice::random(2, 1, seed + k as u64).unwrap()) };
    build_witness_condition(f, 1, pts, &ws.randomized, &slice, new, &nominal(), seed, &TrackOptions::default()).unwrap()
}

#[test]
fn one_point_on_the_line() {
    let (_, _, near) = setup(5);
    assert_eq!(near.len(), 1);
    assert!((near[0][0] + 1.0).norm() < 1e-8);
}

#[test]
fn copies_share_parameters() {
    let (f, ws, near) = setup(5);
    let a = copy(&f, &ws, &near, 0, 21);
    let b = copy(&f, &ws, &near, 1, 21);
    assert!(a.start_residual(&nominal()) < 1e-10);
    assert!(b.start_residual(&nominal()) < 1e-10);
    let fp = FiberProductSystem::assemble(vec![a.clone(), b.clone()]).unwrap();
    assert_eq!(fp.n_params, 2);
    assert_eq!(fp.offsets, vec![0, a.block_len]);
    assert_eq!(fp.n_unknowns(), a.block_len + b.block_len + 2);
    assert_eq!(fp.n_equations(), a.system.len() + b.system.len());
    assert_eq!(fp.size(), fp.n_unknowns() + fp.n_equations());
    assert_eq!(fp.ignore_pairs.len(), 1);
    let z = fp.start_point(&nominal());
    assert!(fp.min_block_separation(&z) > 1e-3);
    assert!(!fp.on_diagonal(&z, 1e-8));
}

#[test]
fn dimension_drops_once() {
    let (f, ws, near) = setup(5);
    let one = FiberProductSystem::assemble(vec![copy(&f, &ws, &near, 0, 21)]).unwrap();
    let d1 = image_dimension(&one, &one.start_point(&nominal()), 1e-8).unwrap();
    assert_eq!(d1.dim, 1);
    let two = FiberProductSystem::assemble(vec![copy(&f, &ws, &near, 0, 21), copy(&f, &ws, &near, 1, 21)]).unwrap();
    let d2 = image_dimension(&two, &two.start_point(&nominal()), 1e-8).unwrap();
    assert_eq!(d2.dim, 1);
}

#[test]
fn mismatched_parameters_rejected() {
    let (f, ws, near) = setup(5);
    let a = copy(&f, &ws, &near, 0, 21);
    let g = parse_system("vars y; params q1, q2; poly y - q1 - q2;").unwrap();
    let b = ConditionSystem { system: g, block_len: 1, start_block: vec![C64::new(0.0, 0.0)], point_blocks: vec![0..1], ..a.clone() };
    assert!(FiberProductSystem::assemble(vec![a, b]).is_err());
    assert!(FiberProductSystem::assemble(vec![]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn appending_components_never_raises_the_dimension(seed in 0u64..1000) {
        let (f, ws, near) = setup(seed);
        prop_assume!(near.len() == 1);
        let mut comps = Vec::new();
        let mut last = 2;
        for k in 0..3 {
            comps.push(copy(&f, &ws, &near, k, seed));
            let fp = FiberProductSystem::assemble(comps.clone()).unwrap();
            let d = image_dimension(&fp, &fp.start_point(&nominal()), 1e-8).unwrap();
            prop_assert!(d.dim <= last);
            last = d.dim;
        }
        prop_assert_eq!(last, 1);
    }
}
