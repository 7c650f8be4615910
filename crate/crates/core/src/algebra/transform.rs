use super::polynomial::{Monomial, Polynomial};
use super::system::{PolySystem, Role};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Grouping of variables for (multi)homogenization.
///
/// `homogenizers[g]` is the index of group `g`'s homogenizing coordinate in the
/// homogenized system; `patches[g]` holds the affine patch coefficients, ordered
/// as `[homogenizer, group members...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationScheme {
    pub groups: Vec<Vec<usize>>,
    pub homogenizers: Vec<usize>,
    pub patches: Vec<Vec<C64>>,
}

impl HomogenizationScheme {
    /// Scheme for `sys` with random unit-modulus patches; homogenizers are appended
    /// after the existing indeterminates in group order.
    pub fn random(sys: &PolySystem, groups: Vec<Vec<usize>>, seed: u64) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let patches = groups.iter().map(|g| rng.unit_vec(g.len() + 1)).collect();
        Self::with_patches(sys, groups, patches)
    }

    pub fn with_patches(sys: &PolySystem, groups: Vec<Vec<usize>>, patches: Vec<Vec<C64>>) -> Result<Self> {
        let scheme = HomogenizationScheme {
            homogenizers: (0..groups.len()).map(|g| sys.arity() + g).collect(),
            groups,
            patches,
        };
        scheme.check(sys)?;
        Ok(scheme)
    }

    fn check(&self, sys: &PolySystem) -> Result<()> {
        let mut vars: Vec<usize> = self.groups.iter().flatten().copied().collect();
        vars.sort_unstable();
        let n = vars.len();
        vars.dedup();
        if vars.len() != n || vars != sys.indices_of(Role::Variable) {
            return invalid("homogenization groups must partition the variables");
        }
        if self.patches.len() != self.groups.len() {
            return Err(Error::Dimension { expected: self.groups.len(), got: self.patches.len() });
        }
        for (g, p) in self.groups.iter().zip(&self.patches) {
            if p.len() != g.len() + 1 {
                return Err(Error::Dimension { expected: g.len() + 1, got: p.len() });
            }
            if p.iter().all(|c| c.norm() == 0.0) {
                return invalid("patch needs a nonzero coefficient");
            }
        }
        Ok(())
    }

    /// Scheme for a homogenized system whose homogenizing coordinates already exist
    /// (no partition check; homogenizers are given indices).
    pub fn declared(groups: Vec<Vec<usize>>, homogenizers: Vec<usize>, patches: Vec<Vec<C64>>) -> Self {
        HomogenizationScheme { groups, homogenizers, patches }
    }

    /// Same scheme with indices translated to positions among `hom`'s variables,
    /// which is how endpoints of a parameter-substituted solve are ordered.
    pub fn in_variable_order(&self, hom: &PolySystem) -> HomogenizationScheme {
        let vars = hom.indices_of(Role::Variable);
        let pos = |i: usize| vars.iter().position(|&v| v == i).expect("scheme index is a variable");
        HomogenizationScheme {
            groups: self.groups.iter().map(|g| g.iter().map(|&i| pos(i)).collect()).collect(),
            homogenizers: self.homogenizers.iter().map(|&i| pos(i)).collect(),
            patches: self.patches.clone(),
        }
    }

    /// Indices of group `g`'s coordinates in the homogenized system, homogenizer first.
    pub fn group_coordinates(&self, g: usize) -> Vec<usize> {
        let mut v = vec![self.homogenizers[g]];
        v.extend_from_slice(&self.groups[g]);
        v
    }
}

/// Homogenize each polynomial within every group and append one affine patch per group.
pub fn homogenize(sys: &PolySystem, scheme: &HomogenizationScheme, names: &[String]) -> Result<PolySystem> {
    scheme.check(sys)?;
    if names.len() != scheme.groups.len() {
        return Err(Error::Dimension { expected: scheme.groups.len(), got: names.len() });
    }
    let ext = sys.extend_indeterminates(names, &vec![Role::Variable; names.len()])?;
    let arity = ext.arity();
    let mut polys = Vec::new();
    for p in ext.polys() {
        let degs: Vec<u32> = scheme.groups.iter().map(|g| p.degree_in(g)).collect();
        let mut q = Polynomial::zero(arity);
        for (m, c) in p.terms() {
            let mut pairs = m.factors().to_vec();
            for (g, grp) in scheme.groups.iter().enumerate() {
                pairs.push((scheme.homogenizers[g], degs[g] - m.degree_in(grp)));
            }
            q.add_term(Monomial::from_pairs(pairs), *c);
        }
        polys.push(q);
    }
    for g in 0..scheme.groups.len() {
        polys.push(Polynomial::linear(
            arity,
            &scheme.group_coordinates(g),
            &scheme.patches[g],
            C64::new(-1.0, 0.0),
        ));
    }
    ext.with_polys(polys)
}

/// Homogenize with random patches, naming homogenizers `h0, h1, ...` (made unique).
pub fn homogenize_seeded(sys: &PolySystem, groups: Vec<Vec<usize>>, seed: u64) -> Result<(PolySystem, HomogenizationScheme)> {
    let scheme = HomogenizationScheme::random(sys, groups, seed)?;
    let names = fresh_names(sys, "h", scheme.groups.len());
    Ok((homogenize(sys, &scheme, &names)?, scheme))
}

pub(crate) fn fresh_names(sys: &PolySystem, stem: &str, count: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut k = 0;
    while out.len() < count {
        let n = format!("{stem}{k}");
        if sys.index_of(&n).is_none() {
            out.push(n);
        }
        k += 1;
    }
    out
}

/// Random `[I | R]` combination: row i is `f_i + sum_{j >= k} r_ij f_j`.
pub fn randomize(sys: &PolySystem, target: usize, seed: u64) -> Result<PolySystem> {
    let n = sys.len();
    if target > n {
        return invalid(format!("cannot randomize {n} polynomials down to {target}"));
    }
    let mut rng = Rng::new(seed);
    let mut polys = Vec::with_capacity(target);
    for i in 0..target {
        let mut row = sys.poly(i).clone();
        for j in target..n {
            row = &row + &sys.poly(j).scale(rng.unit_complex());
        }
        polys.push(row);
    }
    sys.with_polys(polys)
}

/// Affine linear forms `sum_k a_k x_k + a_n`, one row per form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub coeffs: Vec<Vec<C64>>,
}

impl Slice {
    pub fn random(n_vars: usize, codim: usize, seed: u64) -> Result<Slice> {
        if codim == 0 || codim > n_vars {
            return invalid(format!("slice codimension {codim} out of range 1..={n_vars}"));
        }
        let mut rng = Rng::new(seed);
        Ok(Slice { coeffs: (0..codim).map(|_| rng.unit_vec(n_vars + 1)).collect() })
    }

    /// Shifts the constants so that every form vanishes at `x`.
    pub fn through(mut self, x: &[C64]) -> Slice {
        for r in &mut self.coeffs {
            let n = r.len() - 1;
            r[n] = -r[..n].iter().zip(x).map(|(a, b)| a * b).sum::<C64>();
        }
        self
    }

    pub fn codim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_vars(&self) -> usize {
        self.coeffs.first().map_or(0, |r| r.len() - 1)
    }

    pub fn eval(&self, x: &[C64]) -> Vec<C64> {
        self.coeffs
            .iter()
            .map(|r| {
                let n = r.len() - 1;
                r[..n].iter().zip(x).map(|(a, b)| a * b).sum::<C64>() + r[n]
            })
            .collect()
    }

    /// Forms as polynomials over `arity` indeterminates, the slice variables living at `vars`.
    pub fn polys(&self, arity: usize, vars: &[usize]) -> Vec<Polynomial> {
        self.coeffs
            .iter()
            .map(|r| {
                let n = r.len() - 1;
                Polynomial::linear(arity, vars, &r[..n], r[n])
            })
            .collect()
    }
}

/// `codim` generic affine forms in `n_vars` variables.
pub fn generic_slice(n_vars: usize, codim: usize, seed: u64) -> Result<PolySystem> {
    let s = Slice::random(n_vars, codim, seed)?;
    PolySystem::new(
        (0..n_vars).map(|i| format!("x{}", i + 1)).collect(),
        vec![Role::Variable; n_vars],
        s.polys(n_vars, &(0..n_vars).collect::<Vec<_>>()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_system;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn infinity() -> PolySystem {
        parse_system("vars x1, x2; params p1, p2, p3; poly x1^2 + p1*x1 + p2; poly (x1 + p3)*x2 + 2*x1 - 3;").unwrap()
    }

    #[test]
    fn one_group_shape() {
        let f = infinity();
        let (h, scheme) = homogenize_seeded(&f, vec![vec![0, 1]], 5).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.arity(), 6);
        let x0 = scheme.homogenizers[0];
        // x1^2 + p1 x0 x1 + p2 x0^2
        let m = Monomial::from_pairs(vec![(3, 1), (x0, 2)]);
        assert_eq!(h.poly(0).coefficient(&m), r(1.0));
        assert_eq!(h.poly(1).coefficient(&Monomial::from_pairs(vec![(x0, 2)])), r(-3.0));
        for c in &scheme.patches[0] {
            assert!((c.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_group_shape() {
        let f = infinity();
        let (h, scheme) = homogenize_seeded(&f, vec![vec![0], vec![1]], 5).unwrap();
        assert_eq!(h.len(), 4);
        let x3 = scheme.homogenizers[1];
        assert_eq!(h.poly(1).coefficient(&Monomial::from_pairs(vec![(0, 1), (x3, 1)])), r(2.0));
        assert_eq!(h.poly(1).num_terms(), 4);
    }

    #[test]
    fn bad_partition() {
        let f = infinity();
        assert!(homogenize_seeded(&f, vec![vec![0]], 1).is_err());
        assert!(homogenize_seeded(&f, vec![vec![0, 1], vec![1]], 1).is_err());
    }

    #[test]
    fn linear_form_unchanged() {
        let f = parse_system("vars x, y; poly 2*x - 3*y;").unwrap();
        let (h, _) = homogenize_seeded(&f, vec![vec![0, 1]], 2).unwrap();
        assert_eq!(h.poly(0).embed(2, &[0, 1, 2]).num_terms(), 2);
        assert_eq!(h.poly(0).degree_in(&[2]), 0);
    }

    #[test]
    fn randomize_shape() {
        let f = parse_system("vars x; poly x - 1; poly x^2 - 1; poly x^3 - 1;").unwrap();
        let g = randomize(&f, 2, 9).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(randomize(&f, 3, 9).unwrap(), f);
        assert!(randomize(&f, 4, 9).is_err());
        assert!(g.evaluate(&[r(1.0)]).unwrap().iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn slices() {
        assert!(generic_slice(2, 0, 1).is_err());
        assert!(generic_slice(2, 3, 1).is_err());
        let s = generic_slice(2, 1, 1).unwrap();
        assert_eq!(s.poly(0).num_terms(), 3);
        let fixed = Slice { coeffs: vec![vec![r(2.0), r(-3.0), r(-1.0)]] };
        assert_eq!(fixed.eval(&[r(2.0), r(1.0)]), vec![r(0.0)]);
    }
}
