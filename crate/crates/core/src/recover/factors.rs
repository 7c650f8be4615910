use crate::algebra::{Monomial, PolySystem, Polynomial, Role, Slice};
use crate::error::{invalid, Error, Result};
use crate::fiberprod::move_to_slice;
use crate::numlin::{svd, ComplexMatrix};
use crate::rng::{derive_seed, Rng};
use crate::structure::{cluster_points, graded_monomials};
use crate::tracker::{solve_total_degree, PathStatus, TrackOptions};
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorTerm {
    pub monomial: String,
    pub exponents: Vec<u32>,
    pub coefficient: C64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Factor {
    pub degree: usize,
    /// Normalized to constant term 1 when that term is nonzero.
    pub terms: Vec<FactorTerm>,
    #[serde(skip)]
    pub polynomial: Option<Polynomial>,
    /// Smallest singular value of the interpolation matrix over the largest.
    pub interpolation_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Factorization {
    pub constant: C64,
    pub factors: Vec<Factor>,
    /// `max |f - c prod g| / max |f|` at random test points.
    pub check: f64,
}

fn monomial_name(names: &[String], e: &[u32]) -> String {
    let parts: Vec<String> = e
        .iter()
        .zip(names)
        .filter(|(&k, _)| k > 0)
        .map(|(&k, n)| if k == 1 { n.clone() } else { format!("{n}^{k}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Split a hypersurface `f(x; p) = 0` into factors whose witness points on `slice`
/// are the given groups: interpolate each group's component through points sampled
/// on fresh slices, then fit the constant.
///
/// `groups` must partition the witness set of `f(.; p)` on `slice`.
pub fn interpolate_factors(
    f: &PolySystem,
    p: &[C64],
    slice: &Slice,
    groups: &[Vec<Vec<C64>>],
    seed: u64,
    opts: &TrackOptions,
) -> Result<Factorization> {
    if f.len() != 1 {
        return invalid("factor interpolation needs a single polynomial");
    }
    let vars = f.indices_of(Role::Variable);
    let n = vars.len();
    if slice.codim() + 1 != n {
        return invalid("factor interpolation needs a curve slice of a hypersurface");
    }
    let fx = f.fix_role(Role::Parameter, p)?;
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let deg = fx.degrees()[0] as usize;
    if total != deg {
        return invalid(format!("groups hold {total} points for a degree {deg} hypersurface"));
    }
    let mut rng = Rng::new(seed);
    let mut factors = Vec::new();
    let names: Vec<String> = vars.iter().map(|&i| f.names()[i].clone()).collect();
    for (gi, group) in groups.iter().enumerate() {
        let r = group.len();
        let monos = graded_monomials(n, r as u32);
        let need = monos.len() + 2;
        let mut samples: Vec<Vec<C64>> = group.clone();
        let mut k = 0u64;
        while samples.len() < need {
            let to = Slice::random(n, slice.codim(), derive_seed(seed, 100 * gi as u64 + k))?;
            k += 1;
            let moved = move_to_slice(f, p, slice, &to, group, opts)?;
            samples.extend(moved);
            if k > 64 {
                return Err(Error::PathFailure("could not sample the factor".into()));
            }
        }
        let mut v = ComplexMatrix::zeros(samples.len(), monos.len());
        for (i, x) in samples.iter().enumerate() {
            for (j, e) in monos.iter().enumerate() {
                v[(i, j)] = x.iter().zip(e).map(|(xi, &ei)| xi.powu(ei)).product();
            }
        }
        let d = svd(&v);
        let gap = d.s.last().copied().unwrap_or(0.0) / d.s[0].max(f64::MIN_POSITIVE);
        let mut coef = d.v.column(monos.len() - 1);
        let norm_by = if coef[0].norm() > 1e-8 * coef.iter().map(|c| c.norm()).fold(0.0, f64::max) {
            coef[0]
        } else {
            *coef.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap()
        };
        for c in coef.iter_mut() {
            *c /= norm_by;
        }
        let mut poly = Polynomial::zero(n);
        let mut terms = Vec::new();
        for (e, c) in monos.iter().zip(&coef) {
            poly.add_term(Monomial::from_dense(e), *c);
            terms.push(FactorTerm { monomial: monomial_name(&names, e), exponents: e.clone(), coefficient: *c });
        }
        factors.push(Factor { degree: r, terms, polynomial: Some(poly), interpolation_gap: gap });
    }

    // constant and check at random points
    let fvars = {
        let map: Vec<usize> = (0..fx.arity()).collect();
        fx.poly(0).embed(n, &map)
    };
    let prod = |x: &[C64]| -> C64 {
        factors.iter().map(|g| g.polynomial.as_ref().unwrap().eval(x)).product()
    };
    let z0 = rng.unit_vec(n);
    let constant = fvars.eval(&z0) / prod(&z0);
    let mut worst: f64 = 0.0;
    let mut fmax: f64 = 0.0;
    for _ in 0..5 {
        let z = rng.unit_vec(n);
        let fz = fvars.eval(&z);
        worst = worst.max((fz - constant * prod(&z)).norm());
        fmax = fmax.max(fz.norm());
    }
    Ok(Factorization { constant, factors, check: worst / fmax.max(f64::MIN_POSITIVE) })
}

/// Witness points of the hypersurface `f(.; p)` on `slice`, split into the points
/// nearest `subset` and the rest.
pub(crate) fn split_witness_set(
    f: &PolySystem,
    p: &[C64],
    slice: &Slice,
    subset: &[Vec<C64>],
    seed: u64,
    opts: &TrackOptions,
) -> Result<Vec<Vec<Vec<C64>>>> {
    let vars = f.indices_of(Role::Variable);
    let mut polys = f.polys().to_vec();
    polys.extend(slice.polys(f.arity(), &vars));
    let sq = f.with_polys(polys)?;
    let res = solve_total_degree(&sq, p, seed, opts)?;
    let pts: Vec<Vec<C64>> = res.iter().filter(|r| r.status == PathStatus::Success).map(|r| r.endpoint.clone()).collect();
    let ids = cluster_points(&pts, 1e-8);
    let mut uniq: Vec<Vec<C64>> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (pt, id) in pts.iter().zip(&ids) {
        if seen.insert(*id) {
            uniq.push(pt.clone());
        }
    }
    let mut taken = vec![false; uniq.len()];
    let mut first = Vec::new();
    for s in subset {
        let (best, dist) = uniq
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, u)| (i, crate::numlin::norm(&crate::numlin::sub(u, s))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::NotRecovered("witness set smaller than the subset".into()))?;
        if dist > 1e-6 * (1.0 + crate::numlin::norm(s)) {
            return Err(Error::NotRecovered(format!("subset point not on the witness set (distance {dist:.2e})")));
        }
        taken[best] = true;
        first.push(uniq[best].clone());
    }
    let rest: Vec<Vec<C64>> = uniq.iter().zip(&taken).filter(|(_, &t)| !t).map(|(u, _)| u.clone()).collect();
    Ok(vec![first, rest])
}
