use super::polynomial::powu;
use super::system::PolySystem;
use crate::numlin::ComplexMatrix;
use crate::C64;

#[derive(Clone, Debug)]
struct Term {
    coef: C64,
    factors: Vec<(usize, u32)>,
}

impl Term {
    #[inline]
    fn eval(&self, x: &[C64]) -> C64 {
        let mut acc = self.coef;
        for &(v, e) in &self.factors {
            acc *= powu(x[v], e);
        }
        acc
    }
}

/// Flattened system and Jacobian for repeated numeric evaluation.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    arity: usize,
    polys: Vec<Vec<Term>>,
    /// Per polynomial: (column, derivative terms).
    jac: Vec<Vec<(usize, Vec<Term>)>>,
}

fn flatten(p: &super::Polynomial) -> Vec<Term> {
    p.terms()
        .map(|(m, c)| Term { coef: *c, factors: m.factors().to_vec() })
        .collect()
}

impl CompiledSystem {
    pub fn new(sys: &PolySystem) -> Self {
        let polys = sys.polys().iter().map(flatten).collect();
        let jac = sys
            .polys()
            .iter()
            .map(|p| {
                p.support()
                    .into_iter()
                    .map(|v| (v, flatten(&p.derivative(v))))
                    .collect()
            })
            .collect();
        CompiledSystem { arity: sys.arity(), polys, jac }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn eval(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.arity);
        self.polys
            .iter()
            .map(|ts| ts.iter().map(|t| t.eval(x)).sum())
            .collect()
    }

    /// Full Jacobian, `len() x arity()`.
    pub fn jacobian(&self, x: &[C64]) -> ComplexMatrix {
        assert_eq!(x.len(), self.arity);
        let mut j = ComplexMatrix::zeros(self.polys.len(), self.arity);
        for (i, row) in self.jac.iter().enumerate() {
            for (col, ts) in row {
                j[(i, *col)] = ts.iter().map(|t| t.eval(x)).sum();
            }
        }
        j
    }

    pub fn eval_jacobian(&self, x: &[C64]) -> (Vec<C64>, ComplexMatrix) {
        (self.eval(x), self.jacobian(x))
    }
}
