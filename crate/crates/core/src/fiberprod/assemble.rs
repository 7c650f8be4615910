use super::conditions::ConditionSystem;
use crate::algebra::{CompiledSystem, PolySystem, Role};
use crate::error::{invalid, Error, Result};
use crate::numlin::{lstsq_min_norm, norm, svd};
use crate::structure::cluster_points;
use crate::C64;

/// Condition systems with disjoint copies of their blocks and shared parameters.
#[derive(Clone, Debug)]
pub struct FiberProductSystem {
    pub components: Vec<ConditionSystem>,
    pub full_system: PolySystem,
    /// Start of each component's block in the full indeterminate list.
    pub offsets: Vec<usize>,
    pub n_params: usize,
    /// Pairs of point blocks that must stay apart (diagonal exclusion).
    pub ignore_pairs: Vec<(std::ops::Range<usize>, std::ops::Range<usize>)>,
}

impl FiberProductSystem {
    pub fn assemble(components: Vec<ConditionSystem>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Invalid("empty fiber product".into()))?;
        let m = first.n_params();
        let pnames: Vec<String> = first.system.names()[first.block_len..].to_vec();
        let total_block: usize = components.iter().map(|c| c.block_len).sum();
        let arity = total_block + m;
        let mut names = Vec::with_capacity(arity);
        let mut roles = Vec::with_capacity(arity);
        let mut polys = Vec::new();
        let mut offsets = Vec::new();
        let mut off = 0;
        for (a, c) in components.iter().enumerate() {
            if c.n_params() != m || c.system.names()[c.block_len..] != pnames[..] {
                return invalid("components disagree on the shared parameters");
            }
            let map: Vec<usize> = (0..c.system.arity())
                .map(|i| if i < c.block_len { off + i } else { total_block + i - c.block_len })
                .collect();
            polys.extend(c.system.polys().iter().map(|p| p.embed(arity, &map)));
            for i in 0..c.block_len {
                names.push(format!("c{}_{}", a + 1, c.system.names()[i]));
                roles.push(c.system.roles()[i]);
            }
            offsets.push(off);
            off += c.block_len;
        }
        names.extend(pnames);
        roles.extend(std::iter::repeat(Role::Parameter).take(m));
        let full_system = PolySystem::new(names, roles, polys)?;

        let mut blocks = Vec::new();
        for (c, &o) in components.iter().zip(&offsets) {
            for r in &c.point_blocks {
                blocks.push(o + r.start..o + r.end);
            }
        }
        let mut ignore_pairs = Vec::new();
        for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                if blocks[i].len() == blocks[j].len() {
                    ignore_pairs.push((blocks[i].clone(), blocks[j].clone()));
                }
            }
        }
        Ok(FiberProductSystem { components, full_system, offsets, n_params: m, ignore_pairs })
    }

    pub fn n_equations(&self) -> usize {
        self.full_system.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.full_system.arity()
    }

    /// Equations plus unknowns, the size reported in dimension tables.
    pub fn size(&self) -> usize {
        self.n_equations() + self.n_unknowns()
    }

    pub fn param_indices(&self) -> std::ops::Range<usize> {
        self.n_unknowns() - self.n_params..self.n_unknowns()
    }

    /// Start blocks followed by `p`.
    pub fn start_point(&self, p: &[C64]) -> Vec<C64> {
        let mut z: Vec<C64> = self.components.iter().flat_map(|c| c.start_block.iter().copied()).collect();
        z.extend_from_slice(p);
        z
    }

    /// Smallest distance between point blocks that must stay apart.
    pub fn min_block_separation(&self, z: &[C64]) -> f64 {
        self.ignore_pairs
            .iter()
            .map(|(a, b)| norm(&z[a.clone()].iter().zip(&z[b.clone()]).map(|(x, y)| x - y).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when two copies of the same point block have collapsed together.
    pub fn on_diagonal(&self, z: &[C64], radius: f64) -> bool {
        self.ignore_pairs.iter().any(|(a, b)| {
            let pts = vec![z[a.clone()].to_vec(), z[b.clone()].to_vec()];
            cluster_points(&pts, radius)[1] == 0
        })
    }
}

/// Gauss-Newton with minimum-norm steps onto `V(F)`.
pub fn refine_onto(f: &CompiledSystem, start: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>> {
    let mut x = start.to_vec();
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let (v, j) = f.eval_jacobian(&x);
        let d = lstsq_min_norm(&j, &v, 1e-12)?;
        let dn = norm(&d);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi -= di;
        }
        if dn <= tol * (1.0 + norm(&x)) {
            return Ok(x);
        }
        if !dn.is_finite() {
            break;
        }
        last = dn;
    }
    let res = norm(&f.eval(&x));
    if res <= 1e-10 * (1.0 + norm(&x)) {
        Ok(x)
    } else {
        Err(Error::NotRecovered(format!("refinement onto the fiber product failed (residual {res:.2e}, last step {last:.2e})")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageDimension {
    pub dim: usize,
    pub point: Vec<C64>,
    pub jacobian_rank: usize,
    /// Rank of the Jacobian at the unrefined start point.
    pub start_rank: usize,
}

impl ImageDimension {
    /// Rank dropped between the start point and its refinement: the refined
    /// point is singular on `V(F)` and the local computation is unreliable.
    pub fn singular(&self) -> bool {
        self.jacobian_rank < self.start_rank
    }
}

/// Dimension of the projection to parameter space of the component of `V(F)`
/// through the refinement of `start`: rank of the parameter rows of a null-space
/// basis of the Jacobian.
pub fn image_dimension(fp: &FiberProductSystem, start: &[C64], tol: f64) -> Result<ImageDimension> {
    let c = CompiledSystem::new(&fp.full_system);
    let start_rank = svd(&c.jacobian(start)).rank(tol);
    let z = refine_onto(&c, start, 1e-13, 60)?;
    let j = c.jacobian(&z);
    let d = svd(&j);
    let rank = d.rank(tol);
    let null = d.null_basis(rank);
    let prow: Vec<usize> = fp.param_indices().collect();
    let pn = null.select_rows(&prow);
    // rows of an orthonormal basis: singular values are cosines in [0, 1]
    let dim = if pn.cols() == 0 { 0 } else { svd(&pn).rank_abs(100.0 * tol) };
    Ok(ImageDimension { dim, point: z, jacobian_rank: rank, start_rank })
}
