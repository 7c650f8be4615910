use crate::algebra::{randomize, CompiledSystem, PolySystem, Polynomial, Role};
use crate::error::{Error, Result};
use crate::fiberprod::FiberProductSystem;
use crate::numlin::norm;
use crate::rng::{derive_seed, Rng};
use crate::tracker::{track_path, Homotopy, PathStatus, PolyHomotopy, TrackOptions, TrackResult};
use crate::C64;

/// `G = [F; lambda_0 grad |p - p_hat|^2 + sum_j lambda_j grad F_j; b . lambda - 1]`
/// and its gradient-descent homotopy.
#[derive(Clone, Debug)]
pub struct LagrangeSystem {
    /// `G` over `(z, lambda)`.
    pub system: PolySystem,
    /// `H(z, lambda, t)`: `F - t F(z_hat)` in place of `F`.
    pub homotopy: PolySystem,
    /// Unknowns of `F` (blocks and parameters).
    pub n_unknowns: usize,
    /// Equations of `F`.
    pub n_equations: usize,
    pub n_params: usize,
    pub patch: Vec<C64>,
    pub p_hat: Vec<C64>,
    /// `(z_hat, lambda_start)`.
    pub start: Vec<C64>,
}

impl LagrangeSystem {
    /// `M + N`, the size of the underlying fiber product.
    pub fn size(&self) -> usize {
        self.n_equations + self.n_unknowns
    }
}

/// Build the critical-point system of `|p - p_hat|^2` on `V(F)` (holomorphic
/// squared distance, no conjugation), with multipliers in projective space on the
/// random patch `b . lambda = 1` and start multipliers `e_0 / b_0`.
pub fn build_lagrange(fp: &FiberProductSystem, p_hat: &[C64], z_hat: &[C64], seed: u64) -> Result<LagrangeSystem> {
    build_lagrange_reduced(fp, p_hat, z_hat, fp.full_system.len(), seed)
}

/// As [`build_lagrange`], with `F` first randomized down to `rank` equations.
/// When `V(F)` is not a complete intersection the Jacobian of `F` has rank below
/// `M` on it and the multipliers are not unique; `RF` keeps the same local
/// solution set with a full-rank Jacobian.
pub fn build_lagrange_reduced(
    fp: &FiberProductSystem,
    p_hat: &[C64],
    z_hat: &[C64],
    rank: usize,
    seed: u64,
) -> Result<LagrangeSystem> {
    let reduced;
    let f = if rank < fp.full_system.len() {
        reduced = randomize(&fp.full_system, rank, derive_seed(seed, 1))?;
        &reduced
    } else {
        &fp.full_system
    };
    let n = f.arity();
    let m = f.len();
    if z_hat.len() != n {
        return Err(Error::Dimension { expected: n, got: z_hat.len() });
    }
    if p_hat.len() != fp.n_params {
        return Err(Error::Dimension { expected: fp.n_params, got: p_hat.len() });
    }
    let lam_names: Vec<String> = (0..=m).map(|j| format!("lambda{j}")).collect();
    let g0 = f.extend_indeterminates(&lam_names, &vec![Role::Multiplier; m + 1])?;
    let arity = g0.arity();
    let lam = |j: usize| n + j;
    let params: Vec<usize> = fp.param_indices().collect();

    let mut grad = vec![Polynomial::zero(arity); n];
    for (k, &pi) in params.iter().enumerate() {
        // lambda_0 * 2 (p_i - p_hat_i)
        let d = &Polynomial::var(arity, pi) - &Polynomial::constant(arity, p_hat[k]);
        grad[pi] = d.scale(C64::new(2.0, 0.0)).times_var(lam(0), 1);
    }
    for (j, fj) in g0.polys().iter().enumerate() {
        for v in fj.support() {
            let d = fj.derivative(v).times_var(lam(j + 1), 1);
            grad[v] = &grad[v] + &d;
        }
    }
    let mut rng = Rng::new(seed);
    let patch = rng.unit_vec(m + 1);
    let lam_idx: Vec<usize> = (0..=m).map(lam).collect();
    let patch_poly = Polynomial::linear(arity, &lam_idx, &patch, C64::new(-1.0, 0.0));

    let mut polys: Vec<Polynomial> = g0.polys().to_vec();
    polys.extend(grad.iter().cloned());
    polys.push(patch_poly.clone());
    let system = g0.with_polys(polys)?;

    // homotopy: F_j - t F_j(z_hat)
    let f_hat = CompiledSystem::new(f).eval(z_hat);
    let h0 = system.extend_indeterminates(&["t".to_string()], &[Role::Path])?;
    let ha = h0.arity();
    let tvar = ha - 1;
    let map: Vec<usize> = (0..arity).collect();
    let mut hpolys = Vec::with_capacity(system.len());
    for (j, p) in system.polys().iter().enumerate() {
        let e = p.embed(ha, &map);
        if j < m {
            let shift = Polynomial::constant(ha, f_hat[j]).times_var(tvar, 1);
            hpolys.push(&e - &shift);
        } else {
            hpolys.push(e);
        }
    }
    let homotopy = h0.with_polys(hpolys)?;

    let mut start = z_hat.to_vec();
    let mut l0 = vec![C64::default(); m + 1];
    l0[0] = C64::new(1.0, 0.0) / patch[0];
    start.extend(l0);
    Ok(LagrangeSystem {
        system,
        homotopy,
        n_unknowns: n,
        n_equations: m,
        n_params: fp.n_params,
        patch,
        p_hat: p_hat.to_vec(),
        start,
    })
}

#[derive(Clone, Debug)]
pub struct Descent {
    pub track: TrackResult,
    pub z: Vec<C64>,
    pub lambda: Vec<C64>,
    pub p_star: Vec<C64>,
    /// `|G(endpoint)|`.
    pub residual_g: f64,
    /// `|F(z*)|`.
    pub residual_f: f64,
    /// `|H(start, 1)|`.
    pub start_residual: f64,
}

impl Descent {
    /// The path reached `t = 0` at a point satisfying `G`.
    pub fn reached_end(&self) -> bool {
        match self.track.status {
            PathStatus::Success => true,
            PathStatus::SingularEndpoint => self.residual_g <= 1e-8,
            _ => false,
        }
    }
}

/// Track the gradient-descent homotopy from `t = 1` to `t = 0`. Tracking failures
/// are reported in the result, not as errors.
pub fn descend(g: &LagrangeSystem, opts: &TrackOptions) -> Result<Descent> {
    let h = PolyHomotopy::new(&g.homotopy)?;
    let start_residual = norm(&h.eval(&g.start, 1.0));
    let track = track_path(&h, &g.start, opts);
    let n = g.n_unknowns;
    let z = track.endpoint[..n].to_vec();
    let lambda = track.endpoint[n..].to_vec();
    let p_star = z[n - g.n_params..].to_vec();
    let vals = CompiledSystem::new(&g.system).eval(&track.endpoint);
    let residual_g = norm(&vals);
    let residual_f = norm(&vals[..g.n_equations]);
    Ok(Descent { track, z, lambda, p_star, residual_g, residual_f, start_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_system;
    use crate::fiberprod::build_hilbert_condition;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn double_root() -> (FiberProductSystem, Vec<C64>) {
        let f = parse_system("vars x; params p1, p2; poly x^2 + p1*x + p2;").unwrap();
        let p_hat = vec![c(2.8284271), c(2.0)];
        let x_hat = vec![c(-1.41421355)];
        let cond = build_hilbert_condition(&f, &x_hat, &[1, 1], &p_hat, 3).unwrap();
        (FiberProductSystem::assemble(vec![cond]).unwrap(), p_hat)
    }

    #[test]
    fn square_with_exact_start() {
        let (fp, p_hat) = double_root();
        let g = build_lagrange(&fp, &p_hat, &fp.start_point(&p_hat), 9).unwrap();
        assert_eq!(g.system.len(), g.system.arity());
        assert_eq!(g.system.len(), fp.n_unknowns() + fp.n_equations() + 1);
        assert_eq!(g.size(), fp.size());
        let h = PolyHomotopy::new(&g.homotopy).unwrap();
        assert!(norm(&h.eval(&g.start, 1.0)) <= 1e-12);
    }

    #[test]
    fn gradient_block_matches_differences() {
        let (fp, p_hat) = double_root();
        let g = build_lagrange(&fp, &p_hat, &fp.start_point(&p_hat), 9).unwrap();
        let n = g.n_unknowns;
        let m = g.n_equations;
        let mut rng = Rng::new(41);
        let point: Vec<C64> = (0..n + m + 1).map(|_| rng.complex_gaussian()).collect();
        let vals = CompiledSystem::new(&g.system).eval(&point);
        let f = CompiledSystem::new(&fp.full_system);
        let (z, lam) = point.split_at(n);
        let objective = |z: &[C64]| -> C64 { fp.param_indices().zip(&p_hat).map(|(i, ph)| (z[i] - ph).powi(2)).sum() };
        let h = 1e-6;
        for v in 0..n {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[v] += h;
            zm[v] -= h;
            let (fp_, fm) = (f.eval(&zp), f.eval(&zm));
            let mut expect = lam[0] * (objective(&zp) - objective(&zm)) / (2.0 * h);
            for j in 0..m {
                expect += lam[j + 1] * (fp_[j] - fm[j]) / (2.0 * h);
            }
            let got = vals[m + v];
            assert!((got - expect).norm() <= 1e-6 * (1.0 + expect.norm()), "row {v}: {got} vs {expect}");
        }
    }

    #[test]
    fn descends_to_the_double_root() {
        let (fp, p_hat) = double_root();
        let g = build_lagrange(&fp, &p_hat, &fp.start_point(&p_hat), 9).unwrap();
        let d = descend(&g, &TrackOptions::default()).unwrap();
        assert!(d.reached_end());
        assert!((d.p_star[0] - c(2.828427116497461)).norm() < 1e-6);
        assert!((d.p_star[1] - c(1.999999988334534)).norm() < 1e-6);
        assert!((d.z[0] - c(-1.414213558248730)).norm() < 1e-6);
    }

    #[test]
    fn redundant_rows_are_randomized_away() {
        let f = parse_system("vars x; params p1, p2; poly x^2 + p1*x + p2;").unwrap();
        let p_hat = vec![c(2.8284271), c(2.0)];
        let mut cond = build_hilbert_condition(&f, &[c(-1.41421355)], &[1, 1], &p_hat, 3).unwrap();
        let mut polys = cond.system.polys().to_vec();
        polys.push(polys[0].scale(c(2.0)));
        cond.system = cond.system.with_polys(polys).unwrap();
        let fp = FiberProductSystem::assemble(vec![cond]).unwrap();
        let m = fp.n_equations();
        let g = build_lagrange_reduced(&fp, &p_hat, &fp.start_point(&p_hat), m - 1, 9).unwrap();
        assert_eq!(g.n_equations, m - 1);
        assert_eq!(g.system.len(), g.system.arity());
        let d = descend(&g, &TrackOptions::default()).unwrap();
        assert!(d.reached_end());
        assert!((d.p_star[0] - c(2.828427116497461)).norm() < 1e-6);
        assert!((d.p_star[1] - c(1.999999988334534)).norm() < 1e-6);
        let full = CompiledSystem::new(&fp.full_system).eval(&d.z);
        assert!(norm(&full) < 1e-10);
    }
}
