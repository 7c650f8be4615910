use crate::algebra::{randomize, CompiledSystem, HomogenizationScheme, PolySystem, Role, Slice};
use crate::error::{invalid, Result};
use crate::numlin::norm;
use crate::rng::derive_seed;
use crate::tracker::{solve_total_degree, PathStatus, TrackOptions, TrackResult};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Scaled residual below which a point is a near-solution.
    pub near_solution: f64,
    /// Scaled residual above which a point is a nonsolution.
    pub non_solution: f64,
    /// Relative homogenizing magnitude below which a point is near infinity.
    pub near_infinity: f64,
    /// Relative homogenizing magnitude below which a point is at infinity.
    pub at_infinity: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { near_solution: 1e-4, non_solution: 1e-1, near_infinity: 1e-2, at_infinity: 1e-10 }
    }
}

impl Thresholds {
    /// Thresholds tightened by `factor` for validation.
    pub fn tightened(&self, factor: f64) -> Thresholds {
        Thresholds {
            near_solution: self.near_solution / factor,
            non_solution: self.non_solution,
            near_infinity: self.near_infinity / factor,
            at_infinity: self.at_infinity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NonSolution,
    NearSolution,
    Ambiguous,
    NearInfinity(usize),
    AtInfinity(usize),
    Finite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPoint {
    pub point: Vec<C64>,
    pub residual_full_system: f64,
    /// Residual scaled by `1 + |x|^deg`.
    pub scaled_residual: f64,
    pub homogenizing_magnitudes: Vec<f64>,
    pub cluster_id: Option<usize>,
    pub labels: BTreeSet<Label>,
    pub thresholds: Thresholds,
    pub status: PathStatus,
}

impl ClassifiedPoint {
    pub fn has(&self, l: Label) -> bool {
        self.labels.contains(&l)
    }

    pub fn is_near_solution(&self) -> bool {
        self.has(Label::NearSolution)
    }
}

/// Residual of `f(x; p)` relative to `1 + |x|^deg`.
pub(crate) fn scaled_residual(f: &CompiledSystem, full: &[C64], x_norm: f64, deg: u32) -> (f64, f64) {
    let r = norm(&f.eval(full));
    (r, r / (1.0 + x_norm.powi(deg as i32)))
}

pub(crate) fn residual_labels(scaled: f64, th: &Thresholds) -> Label {
    if scaled < th.near_solution {
        Label::NearSolution
    } else if scaled > th.non_solution {
        Label::NonSolution
    } else {
        Label::Ambiguous
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessOptions {
    pub thresholds: Thresholds,
    pub track: TrackOptions,
    /// Fixed slice coefficients instead of random ones.
    pub slice: Option<Slice>,
}

#[derive(Clone, Debug)]
pub struct WitnessSuperset {
    pub points: Vec<ClassifiedPoint>,
    /// The randomized square part `R_{n-D} f`, over variables and parameters.
    pub randomized: PolySystem,
    pub slice: Option<Slice>,
    pub diverged: usize,
    pub results: Vec<TrackResult>,
}

impl WitnessSuperset {
    pub fn near_solutions(&self) -> Vec<&ClassifiedPoint> {
        self.points.iter().filter(|p| p.is_near_solution()).collect()
    }

    /// Square system `{R f, L}` over variables and parameters.
    pub fn sliced_system(&self) -> Result<PolySystem> {
        sliced(&self.randomized, self.slice.as_ref())
    }
}

pub(crate) fn sliced(randomized: &PolySystem, slice: Option<&Slice>) -> Result<PolySystem> {
    let mut polys = randomized.polys().to_vec();
    if let Some(s) = slice {
        let vars = randomized.indices_of(Role::Variable);
        polys.extend(s.polys(randomized.arity(), &vars));
    }
    randomized.with_polys(polys)
}

pub(crate) fn full_point(f: &PolySystem, x: &[C64], p: &[C64]) -> Vec<C64> {
    let vars = f.indices_of(Role::Variable);
    let params = f.indices_of(Role::Parameter);
    let mut z = vec![C64::default(); f.arity()];
    for (k, &i) in vars.iter().enumerate() {
        z[i] = x[k];
    }
    for (k, &i) in params.iter().enumerate() {
        z[i] = p[k];
    }
    z
}

/// Solve `{R_{n-D} f(x; p), L_D(x)}` and classify endpoints by the residual of `f`.
pub fn witness_superset(f: &PolySystem, p: &[C64], dim: usize, seed: u64, opts: &WitnessOptions) -> Result<WitnessSuperset> {
    let vars = f.indices_of(Role::Variable);
    let n = vars.len();
    if dim >= n && !(dim == 0 && n == 0) {
        return invalid(format!("dimension {dim} leaves no equations for {n} variables"));
    }
    let k = n - dim;
    if f.len() < k {
        return invalid(format!("{} polynomials cannot cut out codimension {k}", f.len()));
    }
    let randomized = randomize(f, k, derive_seed(seed, 1))?;
    let slice = if dim == 0 {
        None
    } else {
        match &opts.slice {
            Some(s) if s.codim() == dim && s.n_vars() == n => Some(s.clone()),
            Some(_) => return invalid("fixed slice has wrong shape"),
            None => Some(Slice::random(n, dim, derive_seed(seed, 2))?),
        }
    };
    let square = sliced(&randomized, slice.as_ref())?;
    let results = solve_total_degree(&square, p, derive_seed(seed, 3), &opts.track)?;
    let fc = CompiledSystem::new(f);
    let deg = f.degrees().into_iter().max().unwrap_or(0);
    let mut points = Vec::new();
    let mut diverged = 0;
    for r in &results {
        if r.status == PathStatus::Diverged {
            diverged += 1;
            continue;
        }
        let full = full_point(f, &r.endpoint, p);
        let (res, scaled) = scaled_residual(&fc, &full, norm(&r.endpoint), deg);
        let mut labels = BTreeSet::new();
        labels.insert(residual_labels(scaled, &opts.thresholds));
        labels.insert(Label::Finite);
        points.push(ClassifiedPoint {
            point: r.endpoint.clone(),
            residual_full_system: res,
            scaled_residual: scaled,
            homogenizing_magnitudes: Vec::new(),
            cluster_id: None,
            labels,
            thresholds: opts.thresholds,
            status: r.status,
        });
    }
    Ok(WitnessSuperset { points, randomized, slice, diverged, results })
}

/// Relative magnitude `|x_h| / |(x_h, group)|` per group.
pub fn infinity_magnitudes(point: &[C64], scheme: &HomogenizationScheme) -> Vec<f64> {
    (0..scheme.groups.len())
        .map(|g| {
            let coords = scheme.group_coordinates(g);
            let h = point[coords[0]].norm();
            let total = coords.iter().map(|&i| point[i].norm_sqr()).sum::<f64>().sqrt();
            if total == 0.0 {
                0.0
            } else {
                h / total
            }
        })
        .collect()
}

/// Label points of a homogenized system by how close each group's homogenizing
/// coordinate is to zero. `points` are full coordinate vectors of the homogenized
/// variables (parameters excluded), in the order the scheme indexes them.
pub fn classify_infinity(
    results: &[TrackResult],
    scheme: &HomogenizationScheme,
    system: &CompiledSystem,
    thresholds: &Thresholds,
) -> Vec<ClassifiedPoint> {
    results
        .iter()
        .filter(|r| r.status != PathStatus::Diverged)
        .map(|r| {
            let mags = infinity_magnitudes(&r.endpoint, scheme);
            let mut labels = BTreeSet::new();
            let mut finite = true;
            for (g, &m) in mags.iter().enumerate() {
                if m < thresholds.near_infinity {
                    labels.insert(Label::NearInfinity(g));
                    finite = false;
                }
                if m < thresholds.at_infinity {
                    labels.insert(Label::AtInfinity(g));
                }
            }
            if finite {
                labels.insert(Label::Finite);
            }
            let res = if system.arity() == r.endpoint.len() { norm(&system.eval(&r.endpoint)) } else { r.residual };
            ClassifiedPoint {
                point: r.endpoint.clone(),
                residual_full_system: res,
                scaled_residual: res / (1.0 + norm(&r.endpoint)),
                homogenizing_magnitudes: mags,
                cluster_id: None,
                labels,
                thresholds: *thresholds,
                status: r.status,
            }
        })
        .collect()
}

/// Single-linkage clustering; cluster ids are numbered by first member.
pub fn cluster_points(points: &[Vec<C64>], radius: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            if d <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let root = find(&mut parent, i);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        out.push(ids[root]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_system;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn clusters() {
        let a = vec![C64::new(-1.41421355, 0.000187073241389)];
        let b = vec![C64::new(-1.41421355, -0.000187073241389)];
        assert_eq!(cluster_points(&[a.clone(), b.clone()], 1e-3), vec![0, 0]);
        assert_eq!(cluster_points(&[a, b], 1e-6), vec![0, 1]);
        assert!(cluster_points(&[], 1.0).is_empty());
        // chaining
        let pts: Vec<Vec<C64>> = [0.0, 0.9, 1.8, 5.0].iter().map(|&v| vec![r(v)]).collect();
        assert_eq!(cluster_points(&pts, 1.0), vec![0, 0, 0, 1]);
    }

    #[test]
    fn posdim_generic_fiber() {
        let f = parse_system(
            "vars x1, x2; params p1, p2; poly x1*x2 - 2*x1 + p1*x2 + p2; poly x1^2 - 2*x1 + p1*x1 + p2;",
        )
        .unwrap();
        let p = [C64::new(0.3, 0.7), C64::new(-1.1, 0.2)];
        let w = witness_superset(&f, &p, 1, 3, &WitnessOptions::default()).unwrap();
        assert_eq!(w.points.len(), 2);
        assert!(w.points.iter().all(|c| c.has(Label::NonSolution)));
    }

    #[test]
    fn exact_zero_homogenizer_is_near_infinity() {
        let f = parse_system("vars x, y; poly x*y - 1;").unwrap();
        let (_, scheme) = crate::algebra::homogenize_seeded(&f, vec![vec![0, 1]], 1).unwrap();
        let tr = TrackResult {
            endpoint: vec![r(1.0), r(0.0), r(0.0)],
            status: PathStatus::Success,
            residual: 0.0,
            steps: 0,
            final_t: 0.0,
            condition: None,
        };
        let sys = CompiledSystem::new(&f);
        for th in [1e-2, 1e-12] {
            let t = Thresholds { near_infinity: th, ..Default::default() };
            let c = classify_infinity(std::slice::from_ref(&tr), &scheme, &sys, &t);
            assert!(c[0].has(Label::NearInfinity(0)));
        }
    }
}
