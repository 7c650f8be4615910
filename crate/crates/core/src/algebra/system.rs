use super::polynomial::Polynomial;
use crate::error::{invalid, Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Variable,
    Parameter,
    Auxiliary,
    Multiplier,
    /// Distinguished homotopy path indeterminate `t`.
    Path,
}

/// Ordered list of polynomials over named indeterminates with declared roles.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    polys: Vec<Polynomial>,
    roles: Vec<Role>,
    names: Vec<String>,
}

impl PolySystem {
    pub fn new(names: Vec<String>, roles: Vec<Role>, polys: Vec<Polynomial>) -> Result<Self> {
        if names.len() != roles.len() {
            return Err(Error::Dimension { expected: roles.len(), got: names.len() });
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return invalid(format!("duplicate indeterminate name `{n}`"));
            }
        }
        for p in &polys {
            if p.arity() != roles.len() {
                return Err(Error::Dimension { expected: roles.len(), got: p.arity() });
            }
        }
        Ok(PolySystem { polys, roles, names })
    }

    pub fn arity(&self) -> usize {
        self.roles.len()
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn poly(&self, i: usize) -> &Polynomial {
        &self.polys[i]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn indices_of(&self, role: Role) -> Vec<usize> {
        (0..self.arity()).filter(|&i| self.roles[i] == role).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(Polynomial::degree).collect()
    }

    pub fn evaluate(&self, point: &[C64]) -> Result<Vec<C64>> {
        if point.len() != self.arity() {
            return Err(Error::Dimension { expected: self.arity(), got: point.len() });
        }
        Ok(self.polys.iter().map(|p| p.eval(point)).collect())
    }

    pub fn differentiate(&self, wrt: usize) -> Result<PolySystem> {
        if wrt >= self.arity() {
            return invalid(format!("derivative index {wrt} out of range"));
        }
        Ok(PolySystem {
            polys: self.polys.iter().map(|p| p.derivative(wrt)).collect(),
            roles: self.roles.clone(),
            names: self.names.clone(),
        })
    }

    pub fn with_polys(&self, polys: Vec<Polynomial>) -> Result<PolySystem> {
        PolySystem::new(self.names.clone(), self.roles.clone(), polys)
    }

    pub fn push(&mut self, p: Polynomial) {
        assert_eq!(p.arity(), self.arity());
        self.polys.push(p);
    }

    /// Substitute values for the given indeterminates and drop them.
    pub fn fix(&self, indices: &[usize], values: &[C64]) -> Result<PolySystem> {
        if indices.len() != values.len() {
            return Err(Error::Dimension { expected: indices.len(), got: values.len() });
        }
        let subs: Vec<(usize, C64)> = indices.iter().copied().zip(values.iter().copied()).collect();
        let keep: Vec<usize> = (0..self.arity()).filter(|i| !indices.contains(i)).collect();
        let mut map = vec![0; self.arity()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let polys = self
            .polys
            .iter()
            .map(|p| p.substitute(&subs).embed(keep.len(), &map))
            .collect();
        PolySystem::new(
            keep.iter().map(|&i| self.names[i].clone()).collect(),
            keep.iter().map(|&i| self.roles[i]).collect(),
            polys,
        )
    }

    /// Substitute the parameter block by values, leaving a system in the remaining indeterminates.
    pub fn fix_role(&self, role: Role, values: &[C64]) -> Result<PolySystem> {
        self.fix(&self.indices_of(role), values)
    }

    /// Append new indeterminates (existing polynomials are re-embedded).
    pub fn extend_indeterminates(&self, names: &[String], roles: &[Role]) -> Result<PolySystem> {
        let arity = self.arity() + names.len();
        let map: Vec<usize> = (0..self.arity()).collect();
        let mut all_names = self.names.clone();
        all_names.extend_from_slice(names);
        let mut all_roles = self.roles.clone();
        all_roles.extend_from_slice(roles);
        PolySystem::new(
            all_names,
            all_roles,
            self.polys.iter().map(|p| p.embed(arity, &map)).collect(),
        )
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.polys.iter().map(Polynomial::max_abs_coefficient).fold(0.0, f64::max)
    }
}
