use crate::C64;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Sparse monomial: sorted `(indeterminate, exponent)` pairs, exponents > 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![(i, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(usize, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_unstable();
        let mut out: Vec<(usize, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }

    pub fn from_dense(exps: &[u32]) -> Self {
        Monomial(
            exps.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| (i, e))
                .collect(),
        )
    }

    pub fn to_dense(&self, arity: usize) -> Vec<u32> {
        let mut v = vec![0; arity];
        for &(i, e) in &self.0 {
            v[i] = e;
        }
        v
    }

    pub fn factors(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        self.0
            .iter()
            .filter(|(v, _)| vars.contains(v))
            .map(|&(_, e)| e)
            .sum()
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| *v == var)
            .map_or(0, |&(_, e)| e)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            if a.0 < b.0 {
                out.push(a);
                i += 1;
            } else if b.0 < a.0 {
                out.push(b);
                j += 1;
            } else {
                out.push((a.0, a.1 + b.1));
                i += 1;
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Multiply by `var^e`.
    pub fn times_var(&self, var: usize, e: u32) -> Monomial {
        self.mul(&Monomial(vec![(var, e)]))
    }

    /// Partial derivative: `(exponent, monomial / var)` or `None` if var is absent.
    pub fn derivative(&self, var: usize) -> Option<(u32, Monomial)> {
        let pos = self.0.iter().position(|&(v, _)| v == var)?;
        let e = self.0[pos].1;
        let mut m = self.0.clone();
        if e == 1 {
            m.remove(pos);
        } else {
            m[pos].1 -= 1;
        }
        Some((e, Monomial(m)))
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for &(v, e) in &self.0 {
            acc *= powu(x[v], e);
        }
        acc
    }

    fn remap(&self, map: &[usize]) -> Monomial {
        Monomial::from_pairs(self.0.iter().map(|&(v, e)| (map[v], e)).collect())
    }
}

pub(crate) fn powu(z: C64, e: u32) -> C64 {
    match e {
        0 => C64::new(1.0, 0.0),
        1 => z,
        2 => z * z,
        3 => z * z * z,
        _ => z.powu(e),
    }
}

/// Sparse polynomial with complex coefficients in a fixed number of indeterminates.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial { arity, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: C64) -> Self {
        let mut p = Self::zero(arity);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(arity: usize, i: usize) -> Self {
        assert!(i < arity, "indeterminate {i} out of range for arity {arity}");
        let mut p = Self::zero(arity);
        p.add_term(Monomial::var(i), C64::new(1.0, 0.0));
        p
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Monomial, C64)>) -> Self {
        let mut p = Self::zero(arity);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Affine linear form `sum coeffs[k] * x[vars[k]] + constant`.
    pub fn linear(arity: usize, vars: &[usize], coeffs: &[C64], constant: C64) -> Self {
        let mut p = Self::constant(arity, constant);
        for (&v, &c) in vars.iter().zip(coeffs) {
            p.add_term(Monomial::var(v), c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: C64) {
        if let Some(v) = m.max_var() {
            assert!(v < self.arity, "monomial uses indeterminate {v} beyond arity {}", self.arity);
        }
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == C64::new(0.0, 0.0) {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        self.terms.keys().map(|m| m.degree_in(vars)).max().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Indeterminates that occur in at least one term.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|&(v, _)| v))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        debug_assert_eq!(x.len(), self.arity);
        self.terms.iter().map(|(m, c)| c * m.eval(x)).sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        assert!(var < self.arity);
        let mut out = Polynomial::zero(self.arity);
        for (m, c) in &self.terms {
            if let Some((e, dm)) = m.derivative(var) {
                out.add_term(dm, c * e as f64);
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Polynomial::from_terms(self.arity, self.terms.iter().map(|(m, c)| (m.clone(), c * s)))
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.arity, C64::new(1.0, 0.0));
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Multiply every term by `var^e`.
    pub fn times_var(&self, var: usize, e: u32) -> Polynomial {
        Polynomial::from_terms(
            self.arity,
            self.terms.iter().map(|(m, c)| (m.times_var(var, e), *c)),
        )
    }

    /// Substitute values for some indeterminates, keeping the arity.
    pub fn substitute(&self, values: &[(usize, C64)]) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        for (m, c) in &self.terms {
            let mut coef = *c;
            let mut rest = Vec::new();
            for &(v, e) in m.factors() {
                match values.iter().find(|(i, _)| *i == v) {
                    Some(&(_, val)) => coef *= powu(val, e),
                    None => rest.push((v, e)),
                }
            }
            out.add_term(Monomial(rest), coef);
        }
        out
    }

    /// Re-embed into `new_arity` indeterminates, sending old index `i` to `map[i]`.
    pub fn embed(&self, new_arity: usize, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), self.arity);
        Polynomial::from_terms(new_arity, self.terms.iter().map(|(m, c)| (m.remap(map), *c)))
    }

    /// Replace indeterminate `var` by a polynomial (same arity).
    pub fn compose_var(&self, var: usize, with: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            let rest = Monomial::from_pairs(
                m.factors().iter().filter(|(v, _)| *v != var).copied().collect(),
            );
            let base = Polynomial::from_terms(self.arity, [(rest, *c)]);
            if e == 0 {
                out = &out + &base;
            } else {
                out = &out + &(&base * &with.pow(e));
            }
        }
        out
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity);
        let mut out = Polynomial::zero(self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(C64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn canonical_cancellation() {
        let x = Polynomial::var(2, 0);
        let d = &x - &x;
        assert!(d.is_zero());
        assert_eq!(d.num_terms(), 0);
    }

    #[test]
    fn product_and_derivative() {
        // (x + y)^2 = x^2 + 2xy + y^2
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let s = (&x + &y).pow(2);
        assert_eq!(s.num_terms(), 3);
        assert_eq!(s.coefficient(&Monomial::from_pairs(vec![(0, 1), (1, 1)])), c(2.0));
        let dx = s.derivative(0);
        assert_eq!(dx, &(&x + &y).scale(c(2.0)) + &Polynomial::zero(2));
        assert_eq!(s.degree(), 2);
    }

    #[test]
    fn substitute_and_embed() {
        let x = Polynomial::var(2, 0);
        let p = Polynomial::var(2, 1);
        let f = &(&x * &x) + &(&p * &x);
        let g = f.substitute(&[(1, c(3.0))]);
        assert_eq!(g.eval(&[c(2.0), c(100.0)]), c(10.0));
        let e = f.embed(3, &[2, 0]);
        assert_eq!(e.eval(&[c(3.0), c(0.0), c(2.0)]), c(10.0));
    }

    #[test]
    fn compose() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let f = &(&x * &x) + &y;
        let sub = &y + &Polynomial::constant(2, c(1.0));
        let g = f.compose_var(0, &sub);
        assert_eq!(g.eval(&[c(0.0), c(2.0)]), c(11.0));
    }
}
