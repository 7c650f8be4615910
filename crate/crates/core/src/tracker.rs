//! Predictor-corrector path tracking.

use crate::algebra::{CompiledSystem, HomogenizationScheme, PolySystem, Role};
use crate::error::{invalid, Error, Result};
use crate::numlin::{condition_number, lstsq_min_norm, norm, ComplexMatrix, Lu};
use crate::rng::Rng;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `H(x, t)` square in `x` for every `t`; tracked from `t = 1` to `t = 0`.
pub trait Homotopy: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[C64], t: f64) -> Vec<C64>;

    /// `(H, dH/dx, dH/dt)`.
    fn eval_jac(&self, x: &[C64], t: f64) -> (Vec<C64>, ComplexMatrix, Vec<C64>);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStatus {
    Success,
    Diverged,
    SingularEndpoint,
    StepFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackResult {
    pub endpoint: Vec<C64>,
    pub status: PathStatus,
    pub residual: f64,
    pub steps: usize,
    pub final_t: f64,
    /// Condition number of `dH/dx` at the endpoint, when computed.
    pub condition: Option<f64>,
}

impl TrackResult {
    pub fn is_success(&self) -> bool {
        self.status == PathStatus::Success
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackOptions {
    pub start_tol: f64,
    pub corrector_tol: f64,
    pub max_newton: usize,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub grow_after: usize,
    pub t_end: f64,
    pub divergence: f64,
    pub polish_iters: usize,
    pub residual_tol: f64,
    pub max_steps: usize,
    /// Skip the endpoint condition estimate above this dimension.
    pub condition_max_dim: usize,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            start_tol: 1e-8,
            corrector_tol: 1e-10,
            max_newton: 3,
            h_init: 0.05,
            h_min: 1e-14,
            h_max: 0.1,
            grow_after: 5,
            t_end: 1e-6,
            divergence: 1e12,
            polish_iters: 12,
            residual_tol: 1e-10,
            max_steps: 100_000,
            condition_max_dim: 400,
        }
    }
}

fn tangent(h: &dyn Homotopy, x: &[C64], t: f64) -> Option<Vec<C64>> {
    let (_, hx, ht) = h.eval_jac(x, t);
    let lu = Lu::factor(&hx).ok()?;
    let neg: Vec<C64> = ht.iter().map(|v| -v).collect();
    Some(lu.solve(&neg))
}

fn axpy(x: &[C64], a: f64, k: &[C64]) -> Vec<C64> {
    x.iter().zip(k).map(|(xi, ki)| xi + ki * a).collect()
}

/// One RK4 step of `dx/dt = -H_x^{-1} H_t` from `t` to `t - dt`.
fn rk4(h: &dyn Homotopy, x: &[C64], t: f64, dt: f64) -> Option<Vec<C64>> {
    let k1 = tangent(h, x, t)?;
    let k2 = tangent(h, &axpy(x, -dt / 2.0, &k1), t - dt / 2.0)?;
    let k3 = tangent(h, &axpy(x, -dt / 2.0, &k2), t - dt / 2.0)?;
    let k4 = tangent(h, &axpy(x, -dt, &k3), t - dt)?;
    Some(
        (0..x.len())
            .map(|i| x[i] - (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
            .collect(),
    )
}

fn newton_step(h: &dyn Homotopy, x: &[C64], t: f64) -> Option<Vec<C64>> {
    let (v, hx, _) = h.eval_jac(x, t);
    let lu = Lu::factor(&hx).ok()?;
    Some(lu.solve(&v))
}

fn correct(h: &dyn Homotopy, mut x: Vec<C64>, t: f64, opts: &TrackOptions) -> Option<Vec<C64>> {
    let mut prev = f64::INFINITY;
    for k in 0..opts.max_newton {
        let d = newton_step(h, &x, t)?;
        let dn = norm(&d);
        let scale = 1.0 + norm(&x);
        if !dn.is_finite() || (k == 0 && dn > 0.1 * scale) || (k > 0 && dn > 0.5 * prev) {
            return None;
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi -= di;
        }
        if dn <= opts.corrector_tol * scale {
            return Some(x);
        }
        prev = dn;
    }
    None
}

/// Newton at `t = 0` until quadratic convergence stalls; returns the best iterate
/// and whether contraction was observed.
fn polish(h: &dyn Homotopy, x: &[C64], opts: &TrackOptions) -> (Vec<C64>, bool) {
    let mut best = x.to_vec();
    let mut best_res = norm(&h.eval(x, 0.0));
    let mut cur = x.to_vec();
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.polish_iters {
        let d = match newton_step(h, &cur, 0.0) {
            Some(d) => d,
            None => break,
        };
        let dn = norm(&d);
        if !dn.is_finite() {
            break;
        }
        for (xi, di) in cur.iter_mut().zip(&d) {
            *xi -= di;
        }
        let res = norm(&h.eval(&cur, 0.0));
        if res <= best_res {
            best_res = res;
            best.clone_from(&cur);
        }
        let scale = 1.0 + norm(&cur);
        if dn <= 1e-13 * scale || (prev.is_finite() && dn <= 1e-3 * prev && dn <= 1e-6 * scale) {
            converged = true;
            break;
        }
        prev = dn;
    }
    (best, converged)
}

pub fn track_path(h: &dyn Homotopy, start: &[C64], opts: &TrackOptions) -> TrackResult {
    let fail = |x: Vec<C64>, status, steps, t: f64| {
        let residual = norm(&h.eval(&x, t));
        TrackResult { endpoint: x, status, residual, steps, final_t: t, condition: None }
    };
    assert_eq!(start.len(), h.dim(), "start point dimension");
    let r0 = norm(&h.eval(start, 1.0));
    if !(r0 <= opts.start_tol * (1.0 + norm(start))) {
        return fail(start.to_vec(), PathStatus::StepFailure, 0, 1.0);
    }
    let mut x = start.to_vec();
    let mut t = 1.0;
    let mut dt = opts.h_init;
    let mut streak = 0;
    let mut steps = 0;
    while t > opts.t_end {
        if steps >= opts.max_steps {
            return fail(x, PathStatus::StepFailure, steps, t);
        }
        steps += 1;
        let step = dt.min(t - opts.t_end);
        let t1 = if step >= t - opts.t_end { opts.t_end } else { t - step };
        let next = rk4(h, &x, t, t - t1).and_then(|xp| correct(h, xp, t1, opts));
        match next {
            Some(xn) => {
                x = xn;
                t = t1;
                if norm(&x) > opts.divergence {
                    return fail(x, PathStatus::Diverged, steps, t);
                }
                streak += 1;
                if streak >= opts.grow_after {
                    dt = (dt * 2.0).min(opts.h_max);
                    streak = 0;
                }
            }
            None => {
                dt /= 2.0;
                streak = 0;
                if dt < opts.h_min {
                    return fail(x, PathStatus::StepFailure, steps, t);
                }
            }
        }
    }
    let (xp, converged) = polish(h, &x, opts);
    let residual = norm(&h.eval(&xp, 0.0));
    let condition = if h.dim() <= opts.condition_max_dim {
        let (_, hx, _) = h.eval_jac(&xp, 0.0);
        Some(condition_number(&hx))
    } else {
        None
    };
    let status = if norm(&xp) > opts.divergence {
        PathStatus::Diverged
    } else if converged && residual <= opts.residual_tol {
        PathStatus::Success
    } else {
        PathStatus::SingularEndpoint
    };
    TrackResult { endpoint: xp, status, residual, steps, final_t: 0.0, condition }
}

/// Homotopy given by a polynomial system with one `Path`-role indeterminate;
/// every other indeterminate is an unknown, in order.
pub struct PolyHomotopy {
    compiled: CompiledSystem,
    path: usize,
    unknowns: Vec<usize>,
}

impl PolyHomotopy {
    pub fn new(sys: &PolySystem) -> Result<Self> {
        let paths = sys.indices_of(Role::Path);
        if paths.len() != 1 {
            return invalid("homotopy needs exactly one path indeterminate");
        }
        let unknowns: Vec<usize> = (0..sys.arity()).filter(|&i| i != paths[0]).collect();
        if unknowns.len() != sys.len() {
            return Err(Error::Dimension { expected: unknowns.len(), got: sys.len() });
        }
        Ok(PolyHomotopy { compiled: CompiledSystem::new(sys), path: paths[0], unknowns })
    }

    fn full(&self, x: &[C64], t: f64) -> Vec<C64> {
        let mut z = vec![C64::default(); self.compiled.arity()];
        for (k, &i) in self.unknowns.iter().enumerate() {
            z[i] = x[k];
        }
        z[self.path] = C64::new(t, 0.0);
        z
    }
}

impl Homotopy for PolyHomotopy {
    fn dim(&self) -> usize {
        self.unknowns.len()
    }

    fn eval(&self, x: &[C64], t: f64) -> Vec<C64> {
        self.compiled.eval(&self.full(x, t))
    }

    fn eval_jac(&self, x: &[C64], t: f64) -> (Vec<C64>, ComplexMatrix, Vec<C64>) {
        let z = self.full(x, t);
        let (v, j) = self.compiled.eval_jacobian(&z);
        (v, j.select_cols(&self.unknowns), j.column(self.path))
    }
}

/// Straight-line homotopy in a block of parameter indeterminates:
/// `p(t) = t p1 + (1 - t) p0`.
pub struct ParameterHomotopy {
    compiled: CompiledSystem,
    params: Vec<usize>,
    unknowns: Vec<usize>,
    p1: Vec<C64>,
    p0: Vec<C64>,
}

impl ParameterHomotopy {
    pub fn new(sys: &PolySystem, params: &[usize], p1: &[C64], p0: &[C64]) -> Result<Self> {
        if p1.len() != params.len() || p0.len() != params.len() {
            return Err(Error::Dimension { expected: params.len(), got: p1.len().min(p0.len()) });
        }
        let unknowns: Vec<usize> = (0..sys.arity()).filter(|i| !params.contains(i)).collect();
        if unknowns.len() != sys.len() {
            return Err(Error::Dimension { expected: unknowns.len(), got: sys.len() });
        }
        Ok(ParameterHomotopy {
            compiled: CompiledSystem::new(sys),
            params: params.to_vec(),
            unknowns,
            p1: p1.to_vec(),
            p0: p0.to_vec(),
        })
    }

    fn full(&self, x: &[C64], t: f64) -> Vec<C64> {
        let mut z = vec![C64::default(); self.compiled.arity()];
        for (k, &i) in self.unknowns.iter().enumerate() {
            z[i] = x[k];
        }
        for (k, &i) in self.params.iter().enumerate() {
            z[i] = self.p1[k] * t + self.p0[k] * (1.0 - t);
        }
        z
    }
}

impl Homotopy for ParameterHomotopy {
    fn dim(&self) -> usize {
        self.unknowns.len()
    }

    fn eval(&self, x: &[C64], t: f64) -> Vec<C64> {
        self.compiled.eval(&self.full(x, t))
    }

    fn eval_jac(&self, x: &[C64], t: f64) -> (Vec<C64>, ComplexMatrix, Vec<C64>) {
        let (v, j) = self.compiled.eval_jacobian(&self.full(x, t));
        let dp: Vec<C64> = self.p1.iter().zip(&self.p0).map(|(a, b)| a - b).collect();
        let jp = j.select_cols(&self.params);
        (v, j.select_cols(&self.unknowns), jp.matvec(&dp))
    }
}

/// Track from solutions at `p1` to `p0` along the straight parameter path.
pub fn parameter_homotopy(
    sys: &PolySystem,
    p1: &[C64],
    p0: &[C64],
    starts: &[Vec<C64>],
    opts: &TrackOptions,
) -> Result<Vec<TrackResult>> {
    let h = ParameterHomotopy::new(sys, &sys.indices_of(Role::Parameter), p1, p0)?;
    Ok(track_all(&h, starts, opts))
}

pub fn track_all(h: &dyn Homotopy, starts: &[Vec<C64>], opts: &TrackOptions) -> Vec<TrackResult> {
    starts.par_iter().map(|s| track_path(h, s, opts)).collect()
}

/// `(1 - t) F + gamma t G` with `G_i = x_i^{d_i} - x_h^{d_i}` on the first rows
/// and the target's own rows elsewhere (patch equations).
struct GammaHomotopy {
    target: CompiledSystem,
    start_rows: Vec<(usize, u32)>,
    hom: usize,
    gamma: C64,
}

impl GammaHomotopy {
    fn start_eval(&self, x: &[C64]) -> (Vec<C64>, Vec<(usize, C64, C64)>) {
        let mut g = Vec::with_capacity(self.start_rows.len());
        let mut dg = Vec::with_capacity(self.start_rows.len());
        for &(v, d) in &self.start_rows {
            let a = x[v].powu(d);
            let b = x[self.hom].powu(d);
            g.push(a - b);
            let da = x[v].powu(d - 1) * d as f64;
            let db = -x[self.hom].powu(d - 1) * d as f64;
            dg.push((v, da, db));
        }
        (g, dg)
    }
}

impl Homotopy for GammaHomotopy {
    fn dim(&self) -> usize {
        self.target.arity()
    }

    fn eval(&self, x: &[C64], t: f64) -> Vec<C64> {
        let mut f = self.target.eval(x);
        let (g, _) = self.start_eval(x);
        for (i, gi) in g.iter().enumerate() {
            f[i] = f[i] * (1.0 - t) + self.gamma * t * gi;
        }
        f
    }

    fn eval_jac(&self, x: &[C64], t: f64) -> (Vec<C64>, ComplexMatrix, Vec<C64>) {
        let (mut f, mut j) = self.target.eval_jacobian(x);
        let (g, dg) = self.start_eval(x);
        let mut ht = vec![C64::default(); f.len()];
        for i in 0..g.len() {
            ht[i] = self.gamma * g[i] - f[i];
            f[i] = f[i] * (1.0 - t) + self.gamma * t * g[i];
            for c in 0..j.cols() {
                j[(i, c)] *= 1.0 - t;
            }
            let (v, da, db) = dg[i];
            j[(i, v)] += self.gamma * t * da;
            j[(i, self.hom)] += self.gamma * t * db;
        }
        (f, j, ht)
    }
}

/// Solve a square system in its variables by a total-degree homotopy.
///
/// `params` are substituted for the parameter-role indeterminates first. The
/// system is tracked in homogeneous coordinates on a random patch; endpoints
/// whose homogenizing coordinate vanishes are reported as diverged. Endpoints
/// are returned in the original affine coordinates, one per start path, in a
/// fixed lexicographic path order.
pub fn solve_total_degree(sys: &PolySystem, params: &[C64], seed: u64, opts: &TrackOptions) -> Result<Vec<TrackResult>> {
    let f = sys.fix_role(Role::Parameter, params)?;
    if f.roles().iter().any(|r| *r != Role::Variable) {
        return invalid("total-degree solve expects only variables after parameter substitution");
    }
    let n = f.arity();
    if f.len() != n {
        return Err(Error::Dimension { expected: n, got: f.len() });
    }
    let degrees = f.degrees();
    if degrees.iter().any(|&d| d == 0) {
        return invalid("constant polynomial in total-degree solve");
    }
    let mut rng = Rng::new(seed);
    let gamma = rng.unit_complex();
    let groups = vec![(0..n).collect::<Vec<_>>()];
    let scheme = HomogenizationScheme::random(&f, groups, rng.uniform().to_bits())?;
    let names = crate::algebra::fresh_names(&f, "hom", 1);
    let fh = crate::algebra::homogenize(&f, &scheme, &names)?;
    let hom = scheme.homogenizers[0];
    let patch = &scheme.patches[0];
    let h = GammaHomotopy {
        target: CompiledSystem::new(&fh),
        start_rows: (0..n).map(|i| (i, degrees[i])).collect(),
        hom,
        gamma,
    };

    let total: usize = degrees.iter().map(|&d| d as usize).product();
    let mut starts = Vec::with_capacity(total);
    let mut idx = vec![0u32; n];
    for _ in 0..total {
        let mut z: Vec<C64> = (0..n)
            .map(|i| C64::from_polar(1.0, 2.0 * PI * idx[i] as f64 / degrees[i] as f64))
            .collect();
        z.push(C64::new(1.0, 0.0));
        // patch coefficients are ordered [homogenizer, x_1..x_n]
        let denom: C64 = patch[0] + (0..n).map(|i| patch[i + 1] * z[i]).sum::<C64>();
        let s = C64::new(1.0, 0.0) / denom;
        starts.push(z.into_iter().map(|v| v * s).collect::<Vec<_>>());
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < degrees[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    let results = track_all(&h, &starts, opts);
    let fc = CompiledSystem::new(&f);
    Ok(results
        .into_iter()
        .map(|r| {
            let xh = r.endpoint[hom];
            let scale = norm(&r.endpoint);
            // without an endgame a singular path into infinity stops well short of it
            let cut = if r.status == PathStatus::SingularEndpoint { 1e-4 } else { 1e-8 };
            let at_infinity = xh.norm() <= cut * scale;
            let affine: Vec<C64> = r.endpoint[..n].iter().map(|v| v / xh).collect();
            let status = match r.status {
                PathStatus::Success | PathStatus::SingularEndpoint if at_infinity => PathStatus::Diverged,
                s => s,
            };
            let residual = if at_infinity { r.residual } else { norm(&fc.eval(&affine)) };
            TrackResult { endpoint: affine, status, residual, ..r }
        })
        .collect())
}

/// Newton's method on a square system in all of its indeterminates.
pub fn newton_refine(sys: &PolySystem, point: &[C64], tol: f64, max_iter: usize) -> (Vec<C64>, bool) {
    let c = CompiledSystem::new(sys);
    let mut x = point.to_vec();
    if sys.len() != sys.arity() || point.len() != sys.arity() {
        return (x, false);
    }
    for _ in 0..max_iter {
        let (v, j) = c.eval_jacobian(&x);
        let d = match Lu::factor(&j) {
            Ok(lu) => lu.solve(&v),
            Err(_) => return (x, false),
        };
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi -= di;
        }
        if norm(&d) <= tol {
            return (x, true);
        }
    }
    (x, false)
}

/// Gauss-Newton with pseudoinverse steps for over- or under-determined systems.
pub fn gauss_newton(c: &CompiledSystem, point: &[C64], tol: f64, max_iter: usize, rank_tol: f64) -> (Vec<C64>, bool) {
    let mut x = point.to_vec();
    for _ in 0..max_iter {
        let (v, j) = c.eval_jacobian(&x);
        let d = match lstsq_min_norm(&j, &v, rank_tol) {
            Ok(d) => d,
            Err(_) => return (x, false),
        };
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi -= di;
        }
        if norm(&d) <= tol * (1.0 + norm(&x)) {
            return (x, true);
        }
    }
    (x, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_system;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn linear_homotopy() {
        let s = parse_system("vars x; path t; poly x - t;").unwrap();
        let h = PolyHomotopy::new(&s).unwrap();
        let res = track_path(&h, &[r(1.0)], &TrackOptions::default());
        assert_eq!(res.status, PathStatus::Success);
        assert!(res.endpoint[0].norm() < 1e-12);
        assert_eq!(res.final_t, 0.0);
    }

    #[test]
    fn divergence_detected() {
        // x t = 1: x = 1/t blows up
        let s = parse_system("vars x; path t; poly x*t - 1;").unwrap();
        let h = PolyHomotopy::new(&s).unwrap();
        let opts = TrackOptions { divergence: 1e4, ..Default::default() };
        let res = track_path(&h, &[r(1.0)], &opts);
        assert_eq!(res.status, PathStatus::Diverged);
    }

    #[test]
    fn univariate_total_degree() {
        let s = parse_system("vars x; poly x^2 - 1;").unwrap();
        let res = solve_total_degree(&s, &[], 1, &TrackOptions::default()).unwrap();
        assert_eq!(res.len(), 2);
        let mut xs: Vec<f64> = res.iter().map(|r| r.endpoint[0].re).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 1.0).abs() < 1e-12 && (xs[1] - 1.0).abs() < 1e-12);
        assert!(res.iter().all(TrackResult::is_success));
    }

    #[test]
    fn newton_examples() {
        // {x^2 + p x + 2, 2x + p} from the perturbed root of x^2 + 2.8284271 x + 2
        let s = parse_system("vars x, p; poly x^2 + p*x + 2; poly 2*x + p;").unwrap();
        let (z, ok) = newton_refine(&s, &[r(-1.41421355), r(2.8284271)], 1e-15, 50);
        assert!(ok);
        assert!((z[0].re + 1.414213562373095).abs() < 1e-12);
        assert!((z[1].re - 2.828427124746190).abs() < 1e-12);
        // exact root is a fixed point
        let lin = parse_system("vars x; poly x - 3;").unwrap();
        let (z, ok) = newton_refine(&lin, &[r(3.0)], 1e-14, 5);
        assert!(ok && z[0] == r(3.0));
        // singular: double root of x^2 at 0
        let sq = parse_system("vars x; poly x^2;").unwrap();
        let (_, ok) = newton_refine(&sq, &[r(0.0)], 1e-14, 5);
        assert!(!ok);
    }

    #[test]
    fn constant_parameter_path() {
        let s = parse_system("vars x; params p; poly x^2 - p;").unwrap();
        let starts = vec![vec![r(2.0)], vec![r(-2.0)]];
        let res = parameter_homotopy(&s, &[r(4.0)], &[r(4.0)], &starts, &TrackOptions::default()).unwrap();
        for (r0, s0) in res.iter().zip(&starts) {
            assert!((r0.endpoint[0] - s0[0]).norm() < 1e-12);
        }
    }
}
