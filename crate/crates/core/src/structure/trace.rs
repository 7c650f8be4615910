use crate::algebra::{CompiledSystem, PolySystem, Slice};
use crate::error::{invalid, Error, Result};
use crate::numlin::{ComplexMatrix, Lu};
use crate::rng::Rng;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetTrace {
    pub subset: Vec<usize>,
    pub trace: C64,
    /// `|trace| / max_j |alpha . wdd_j|`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceData {
    pub w: Vec<Vec<C64>>,
    pub wd: Vec<Vec<C64>>,
    pub wdd: Vec<Vec<C64>>,
    pub alpha: Vec<C64>,
    pub subsets: Vec<SubsetTrace>,
}

impl TraceData {
    /// `alpha . sum_j wdd_j` over all points.
    pub fn full_trace(&self) -> C64 {
        self.wdd.iter().map(|v| dot(&self.alpha, v)).sum()
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Second-order data of witness points of a curve moving with a slice.
///
/// `f` is square after adding the slice rows: `f.len() + slice.codim() == n`,
/// with `f` over variables only. The slice row `move_index` gets RHS 1.
pub(crate) fn second_order(
    f: &PolySystem,
    jac: &CompiledSystem,
    hess: &[Vec<CompiledSystem>],
    slice: &Slice,
    w: &[C64],
    move_index: usize,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = f.arity();
    let k = f.len();
    let j = jac.jacobian(w);
    let mut a = ComplexMatrix::zeros(k + slice.codim(), n);
    for r in 0..k {
        for c in 0..n {
            a[(r, c)] = j[(r, c)];
        }
    }
    for (s, row) in slice.coeffs.iter().enumerate() {
        for c in 0..n {
            a[(k + s, c)] = row[c];
        }
    }
    if a.rows() != n {
        return Err(Error::Dimension { expected: n, got: a.rows() });
    }
    let lu = Lu::factor(&a)?;
    let mut rhs = vec![C64::default(); n];
    rhs[k + move_index] = C64::new(1.0, 0.0);
    let wd = lu.solve(&rhs);
    let mut rhs2 = vec![C64::default(); n];
    for (i, hi) in hess.iter().enumerate() {
        // hi[a] evaluates the gradient of d f_i / d x_a
        let mut q = C64::default();
        for (av, ha) in hi.iter().enumerate() {
            let g = ha.eval(w);
            q += wd[av] * dot(&g, &wd);
        }
        rhs2[i] = -q;
    }
    let wdd = lu.solve(&rhs2);
    Ok((wd, wdd))
}

/// Symbolic Hessian rows: `hess[i][a]` evaluates `(d/dx_b d f_i / dx_a)_b`.
pub(crate) fn hessian_systems(f: &PolySystem) -> Vec<Vec<CompiledSystem>> {
    let n = f.arity();
    f.polys()
        .iter()
        .map(|p| {
            (0..n)
                .map(|a| {
                    let da = p.derivative(a);
                    let rows = (0..n).map(|b| da.derivative(b)).collect();
                    CompiledSystem::new(&f.with_polys(rows).expect("same arity"))
                })
                .collect()
        })
        .collect()
}

/// Trace data for witness points `witness` of `{f, slice}`.
pub fn trace_data(
    f: &PolySystem,
    slice: &Slice,
    witness: &[Vec<C64>],
    move_index: usize,
    alpha_seed: u64,
    size_cap: usize,
) -> Result<TraceData> {
    if move_index >= slice.codim() {
        return invalid("move index outside the slice");
    }
    let jac = CompiledSystem::new(f);
    let hess = hessian_systems(f);
    let mut wd = Vec::new();
    let mut wdd = Vec::new();
    for (idx, w) in witness.iter().enumerate() {
        let (a, b) = second_order(f, &jac, &hess, slice, w, move_index).map_err(|e| match e {
            Error::Singular => Error::Invalid(format!("bordered matrix singular at witness point {idx}")),
            other => other,
        })?;
        wd.push(a);
        wdd.push(b);
    }
    let alpha = Rng::new(alpha_seed).unit_vec(f.arity());
    let taus: Vec<C64> = wdd.iter().map(|v| dot(&alpha, v)).collect();
    let scale = taus.iter().map(|t| t.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let count = witness.len();
    let max_size = size_cap.min(count / 2).max(1).min(count);
    let mut subsets = Vec::new();
    for size in 1..=max_size {
        for s in combinations(count, size) {
            let trace: C64 = s.iter().map(|&i| taus[i]).sum();
            subsets.push(SubsetTrace { normalized: trace.norm() / scale, subset: s, trace });
        }
    }
    Ok(TraceData { w: witness.to_vec(), wd, wdd, alpha, subsets })
}

/// Subset of the requested size with the smallest normalized trace.
pub fn best_subset(td: &TraceData, size: usize) -> Option<&SubsetTrace> {
    td.subsets
        .iter()
        .filter(|s| s.subset.len() == size)
        .min_by(|a, b| a.normalized.total_cmp(&b.normalized))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combos() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}
