use crate::algebra::{CompiledSystem, HomogenizationScheme, PolySystem, Polynomial, Role, Slice};
use crate::error::{invalid, Error, Result};
use crate::numlin::{lstsq_min_norm, norm, ComplexMatrix};
use crate::rng::{derive_seed, Rng};
use crate::structure::{cluster_points, graded_monomials, infinity_magnitudes, taylor_coefficient};
use crate::tracker::{track_all, ParameterHomotopy, TrackOptions};
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionKind {
    Infinity { group: usize },
    Witness { dim: usize, degree: usize },
    Trace { dim: usize, subset_size: usize },
    Hilbert { prefix: Vec<usize> },
}

/// Random constants realized in a condition system.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub slice: Option<Slice>,
    pub alpha: Option<Vec<C64>>,
    /// Row-major unitary mixing matrices, one per Hilbert level.
    pub unitaries: Vec<Vec<Vec<C64>>>,
    /// Complement bases, one per Hilbert level.
    pub complements: Vec<Vec<Vec<C64>>>,
}

/// Condition `F_c(block; p)`: indeterminates are the block followed by the
/// shared parameters.
#[derive(Clone, Debug)]
pub struct ConditionSystem {
    pub kind: ConditionKind,
    pub system: PolySystem,
    pub block_len: usize,
    pub constants: Constants,
    pub start_block: Vec<C64>,
    /// Index ranges of the copies of `x` inside the block.
    pub point_blocks: Vec<std::ops::Range<usize>>,
}

impl ConditionSystem {
    pub fn n_params(&self) -> usize {
        self.system.arity() - self.block_len
    }

    /// Residual at `(start_block, p)`.
    pub fn start_residual(&self, p: &[C64]) -> f64 {
        let mut z = self.start_block.clone();
        z.extend_from_slice(p);
        norm(&CompiledSystem::new(&self.system).eval(&z))
    }
}

/// Variables and parameters of `f` as index lists.
fn layout(f: &PolySystem) -> Result<(Vec<usize>, Vec<usize>)> {
    let vars = f.indices_of(Role::Variable);
    let params = f.indices_of(Role::Parameter);
    if vars.len() + params.len() != f.arity() {
        return invalid("condition systems expect only variables and parameters");
    }
    Ok((vars, params))
}

/// Embedding of `f`'s indeterminates: variable k goes to `var_at[k]`, parameter i to `param_at + i`.
fn embed_map(f: &PolySystem, vars: &[usize], params: &[usize], var_at: &[usize], param_at: usize) -> Vec<usize> {
    let mut map = vec![0; f.arity()];
    for (k, &v) in vars.iter().enumerate() {
        map[v] = var_at[k];
    }
    for (i, &p) in params.iter().enumerate() {
        map[p] = param_at + i;
    }
    map
}

/// `sum_a d g/d x_a * v_a` for index lists `x` and `v`.
fn directional(g: &Polynomial, x: &[usize], v: &[usize]) -> Polynomial {
    let mut out = Polynomial::zero(g.arity());
    for (&a, &va) in x.iter().zip(v) {
        let d = g.derivative(a);
        if !d.is_zero() {
            out = &out + &d.times_var(va, 1);
        }
    }
    out
}

fn param_names(f: &PolySystem, params: &[usize]) -> Vec<String> {
    params.iter().map(|&i| f.names()[i].clone()).collect()
}

fn finish(
    kind: ConditionKind,
    mut names: Vec<String>,
    mut roles: Vec<Role>,
    pnames: Vec<String>,
    polys: Vec<Polynomial>,
    constants: Constants,
    start_block: Vec<C64>,
    point_blocks: Vec<std::ops::Range<usize>>,
) -> Result<ConditionSystem> {
    let block_len = names.len();
    roles.extend(std::iter::repeat(Role::Parameter).take(pnames.len()));
    names.extend(pnames);
    let system = PolySystem::new(names, roles, polys)?;
    if start_block.len() != block_len {
        return Err(Error::Dimension { expected: block_len, got: start_block.len() });
    }
    Ok(ConditionSystem { kind, system, block_len, constants, start_block, point_blocks })
}

/// `{f^h, x_h}` for the homogenizing coordinate of `group`.
///
/// `hom` is the homogenized system over its variables (homogenizers included)
/// and parameters; `suspect` holds the homogenized variable values in `hom`'s
/// variable order.
pub fn build_infinity_condition(
    hom: &PolySystem,
    scheme: &HomogenizationScheme,
    group: usize,
    suspect: &[C64],
    threshold: f64,
) -> Result<ConditionSystem> {
    let (vars, params) = layout(hom)?;
    if group >= scheme.groups.len() {
        return invalid(format!("no homogenization group {group}"));
    }
    let mag = infinity_magnitudes(suspect, &scheme.in_variable_order(hom))[group];
    if !(mag < threshold) {
        return invalid(format!("suspect is not near infinity in group {group} (magnitude {mag:.3e})"));
    }
    let n = vars.len();
    let arity = n + params.len();
    let var_at: Vec<usize> = (0..n).collect();
    let map = embed_map(hom, &vars, &params, &var_at, n);
    let mut polys: Vec<Polynomial> = hom.polys().iter().map(|p| p.embed(arity, &map)).collect();
    polys.push(Polynomial::var(arity, map[scheme.homogenizers[group]]));
    finish(
        ConditionKind::Infinity { group },
        vars.iter().map(|&v| hom.names()[v].clone()).collect(),
        vec![Role::Variable; n],
        param_names(hom, &params),
        polys,
        Constants::default(),
        suspect.to_vec(),
        vec![0..n],
    )
}

/// Track solutions of `{R f(x; p), L_old(x)}` to `{R f(x; p), L_new(x)}` by a
/// straight-line homotopy in the slice coefficients.
pub fn move_to_slice(
    randomized: &PolySystem,
    p: &[C64],
    from: &Slice,
    to: &Slice,
    points: &[Vec<C64>],
    opts: &TrackOptions,
) -> Result<Vec<Vec<C64>>> {
    if from == to {
        return Ok(points.to_vec());
    }
    let g = randomized.fix_role(Role::Parameter, p)?;
    let n = g.arity();
    let codim = from.codim();
    let names: Vec<String> = (0..codim * (n + 1)).map(|i| format!("slice_coef_{i}")).collect();
    let ext = g.extend_indeterminates(&names, &vec![Role::Parameter; names.len()])?;
    let arity = ext.arity();
    let mut polys = ext.polys().to_vec();
    for r in 0..codim {
        let mut row = Polynomial::var(arity, n + r * (n + 1) + n);
        for k in 0..n {
            let coef = Polynomial::var(arity, n + r * (n + 1) + k);
            row = &row + &(&coef * &Polynomial::var(arity, k));
        }
        polys.push(row);
    }
    let sys = ext.with_polys(polys)?;
    let params: Vec<usize> = (n..arity).collect();
    let p1: Vec<C64> = from.coeffs.iter().flatten().copied().collect();
    let p0: Vec<C64> = to.coeffs.iter().flatten().copied().collect();
    let h = ParameterHomotopy::new(&sys, &params, &p1, &p0)?;
    let results = track_all(&h, points, opts);
    let mut out = Vec::with_capacity(points.len());
    for (i, r) in results.into_iter().enumerate() {
        if !r.is_success() {
            return Err(Error::PathFailure(format!("slice-moving path {i} ended with {:?}", r.status)));
        }
        out.push(r.endpoint);
    }
    let ids = cluster_points(&out, 1e-6);
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(Error::PathFailure("slice-moving paths collapsed onto a diagonal".into()));
    }
    Ok(out)
}

/// `d` copies of `f` each cut by a shared fresh slice.
#[allow(clippy::too_many_arguments)]
pub fn build_witness_condition(
    f: &PolySystem,
    dim: usize,
    points: &[Vec<C64>],
    randomized: &PolySystem,
    detection_slice: &Slice,
    new_slice: Option<Slice>,
    p_hat: &[C64],
    seed: u64,
    opts: &TrackOptions,
) -> Result<ConditionSystem> {
    let (vars, params) = layout(f)?;
    let d = points.len();
    if d == 0 {
        return invalid("witness condition needs at least one point");
    }
    let n = vars.len();
    let slice = match new_slice {
        Some(s) => s,
        None => Slice::random(n, dim, seed)?,
    };
    let moved = move_to_slice(randomized, p_hat, detection_slice, &slice, points, opts)?;
    let block = d * n;
    let arity = block + params.len();
    let mut polys = Vec::new();
    let mut names = Vec::new();
    let mut ranges = Vec::new();
    for j in 0..d {
        let var_at: Vec<usize> = (j * n..(j + 1) * n).collect();
        let map = embed_map(f, &vars, &params, &var_at, block);
        polys.extend(f.polys().iter().map(|p| p.embed(arity, &map)));
        polys.extend(slice.polys(arity, &var_at));
        names.extend(vars.iter().map(|&v| format!("{}_{}", f.names()[v], j + 1)));
        ranges.push(j * n..(j + 1) * n);
    }
    finish(
        ConditionKind::Witness { dim, degree: d },
        names,
        vec![Role::Variable; block],
        param_names(f, &params),
        polys,
        Constants { slice: Some(slice), ..Default::default() },
        moved.concat(),
        ranges,
    )
}

/// Bordered first- and second-order data by least squares (the bordered matrix
/// may be tall when `f` has more equations than its codimension).
fn bordered_start(f: &PolySystem, p: &[C64], slice: &Slice, w: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let g = f.fix_role(Role::Parameter, p)?;
    let n = g.arity();
    let k = g.len();
    let jac = CompiledSystem::new(&g).jacobian(w);
    let mut a = ComplexMatrix::zeros(k + slice.codim(), n);
    for r in 0..k {
        for c in 0..n {
            a[(r, c)] = jac[(r, c)];
        }
    }
    for (s, row) in slice.coeffs.iter().enumerate() {
        for c in 0..n {
            a[(k + s, c)] = row[c];
        }
    }
    let mut rhs = vec![C64::default(); k + slice.codim()];
    rhs[k] = C64::new(1.0, 0.0);
    let wd = lstsq_min_norm(&a, &rhs, 1e-12)?;
    let mut rhs2 = vec![C64::default(); k + slice.codim()];
    for (i, poly) in g.polys().iter().enumerate() {
        let mut q = C64::default();
        for a_ in 0..n {
            let da = poly.derivative(a_);
            for b in 0..n {
                q += wd[a_] * wd[b] * da.derivative(b).eval(w);
            }
        }
        rhs2[i] = -q;
    }
    let wdd = lstsq_min_norm(&a, &rhs2, 1e-12)?;
    Ok((wd, wdd))
}

/// `r` copies of `{f, L, Jf xd, A xd - 1, Jf xdd + xd' H xd, A xdd}` plus the
/// trace equation `alpha . sum xdd_j`. Curves only (`dim = 1`).
#[allow(clippy::too_many_arguments)]
pub fn build_trace_condition(
    f: &PolySystem,
    dim: usize,
    subset: &[Vec<C64>],
    randomized: &PolySystem,
    detection_slice: &Slice,
    new_slice: Option<Slice>,
    p_hat: &[C64],
    seed: u64,
    opts: &TrackOptions,
) -> Result<ConditionSystem> {
    if dim != 1 {
        return invalid("trace conditions are implemented for curves only");
    }
    let (vars, params) = layout(f)?;
    let r = subset.len();
    if r == 0 {
        return invalid("trace condition needs a nonempty subset");
    }
    let n = vars.len();
    let mut rng = Rng::new(seed);
    let slice = match new_slice {
        Some(s) => s,
        None => Slice::random(n, 1, derive_seed(seed, 1))?,
    };
    let alpha = rng.unit_vec(n);
    let moved = move_to_slice(randomized, p_hat, detection_slice, &slice, subset, opts)?;
    let block = 3 * n * r;
    let arity = block + params.len();
    let lin = &slice.coeffs[0][..n];
    let mut polys = Vec::new();
    let mut names = Vec::new();
    let mut start = Vec::with_capacity(block);
    let mut ranges = Vec::new();
    let mut trace = Polynomial::zero(arity);
    for j in 0..r {
        let base = 3 * n * j;
        let x: Vec<usize> = (base..base + n).collect();
        let xd: Vec<usize> = (base + n..base + 2 * n).collect();
        let xdd: Vec<usize> = (base + 2 * n..base + 3 * n).collect();
        let map = embed_map(f, &vars, &params, &x, block);
        let fj: Vec<Polynomial> = f.polys().iter().map(|p| p.embed(arity, &map)).collect();
        polys.extend(fj.iter().cloned());
        polys.extend(slice.polys(arity, &x));
        for g in &fj {
            polys.push(directional(g, &x, &xd));
        }
        polys.push(Polynomial::linear(arity, &xd, lin, C64::new(-1.0, 0.0)));
        for g in &fj {
            let first = directional(g, &x, &xd);
            let second = directional(&first, &x, &xd);
            polys.push(&directional(g, &x, &xdd) + &second);
        }
        polys.push(Polynomial::linear(arity, &xdd, lin, C64::default()));
        trace = &trace + &Polynomial::linear(arity, &xdd, &alpha, C64::default());

        for (stem, _) in [("", 0), ("d", 1), ("dd", 2)] {
            names.extend(vars.iter().map(|&v| format!("{stem}{}_{}", f.names()[v], j + 1)));
        }
        let (wd, wdd) = bordered_start(f, p_hat, &slice, &moved[j])?;
        start.extend_from_slice(&moved[j]);
        start.extend(wd);
        start.extend(wdd);
        ranges.push(base..base + n);
    }
    polys.push(trace);
    finish(
        ConditionKind::Trace { dim, subset_size: r },
        names,
        vec![Role::Auxiliary; block],
        param_names(f, &params),
        polys,
        Constants { slice: Some(slice), alpha: Some(alpha), ..Default::default() },
        start,
        ranges,
    )
}

/// Haar-like random unitary by Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= d * ci;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    ComplexMatrix::from_columns(n, &cols)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Local Hilbert prefix condition on a square sliced system.
///
/// For each level `j >= 1` the unknowns are `tau_j` (coefficients in a random
/// complement of the previous null space) and `Lambda_j` (a chart of the
/// Grassmannian of degree-`j` null directions), and the equations are
/// `M_j(x; p) [K_j tau_j; R_j [Lambda_j; I]] = 0`.
pub fn build_hilbert_condition(
    f_sliced: &PolySystem,
    point: &[C64],
    prefix: &[usize],
    p_hat: &[C64],
    seed: u64,
) -> Result<ConditionSystem> {
    let (vars, params) = layout(f_sliced)?;
    let n = vars.len();
    let k = f_sliced.len();
    if prefix.first() != Some(&1) {
        return invalid("Hilbert prefix must start with h(0) = 1");
    }
    let levels = prefix.len() - 1;
    let mut rng = Rng::new(seed);
    // block layout
    let mut offset = n;
    let mut names: Vec<String> = vars.iter().map(|&v| f_sliced.names()[v].clone()).collect();
    struct Level {
        tau_at: usize,
        tau_rows: usize,
        lam_at: usize,
        lam_rows: usize,
        h: usize,
        k_mat: ComplexMatrix,
        r_mat: ComplexMatrix,
    }
    let mut lv = Vec::new();
    let mut mu = 1usize;
    for j in 1..=levels {
        let h = prefix[j];
        let m_j = binomial(n + j - 1, j);
        if h > m_j {
            return invalid(format!("h({j}) = {h} exceeds the {m_j} monomials of degree {j}"));
        }
        if h == 0 {
            return invalid("Hilbert prefix entries after h(0) must be positive");
        }
        let c_prev = binomial(n + j - 1, j - 1);
        let tau_rows = c_prev.saturating_sub(mu);
        let lam_rows = m_j - h;
        let k_mat = ComplexMatrix::from_row_major(
            c_prev,
            tau_rows,
            (0..c_prev * tau_rows).map(|_| rng.unit_complex()).collect(),
        )?;
        let r_mat = random_unitary(m_j, &mut rng);
        let tau_at = offset;
        offset += tau_rows * h;
        let lam_at = offset;
        offset += lam_rows * h;
        for a in 0..tau_rows {
            for c in 0..h {
                names.push(format!("tau{j}_{a}_{c}"));
            }
        }
        for a in 0..lam_rows {
            for c in 0..h {
                names.push(format!("lam{j}_{a}_{c}"));
            }
        }
        lv.push(Level { tau_at, tau_rows, lam_at, lam_rows, h, k_mat, r_mat });
        mu += h;
    }
    let block = offset;
    let arity = block + params.len();
    let var_at: Vec<usize> = (0..n).collect();
    let map = embed_map(f_sliced, &vars, &params, &var_at, block);
    let mut polys: Vec<Polynomial> = f_sliced.polys().iter().map(|p| p.embed(arity, &map)).collect();

    let mut full = vec![C64::default(); f_sliced.arity()];
    for (kk, &vv) in vars.iter().enumerate() {
        full[vv] = point[kk];
    }
    for (kk, &pp) in params.iter().enumerate() {
        full[pp] = p_hat[kk];
    }
    let mut start: Vec<C64> = point.to_vec();
    start.resize(block, C64::default());
    let mut constants = Constants::default();

    for (li, l) in lv.iter().enumerate() {
        let j = (li + 1) as u32;
        let cols = graded_monomials(n, j);
        let rows = graded_monomials(n, j - 1);
        let c_prev = binomial(n + j as usize - 1, j as usize - 1);
        let m_j = cols.len() - c_prev;
        // V = [K tau; R [Lambda; I]] as linear polynomials, c_j x h
        let mut v = vec![vec![Polynomial::zero(arity); l.h]; cols.len()];
        for (a, row) in v.iter_mut().enumerate().take(c_prev) {
            for (c, entry) in row.iter_mut().enumerate() {
                let idx: Vec<usize> = (0..l.tau_rows).map(|t| l.tau_at + t * l.h + c).collect();
                let coefs: Vec<C64> = (0..l.tau_rows).map(|t| l.k_mat[(a, t)]).collect();
                *entry = Polynomial::linear(arity, &idx, &coefs, C64::default());
            }
        }
        for a in 0..m_j {
            for c in 0..l.h {
                let idx: Vec<usize> = (0..l.lam_rows).map(|t| l.lam_at + t * l.h + c).collect();
                let coefs: Vec<C64> = (0..l.lam_rows).map(|t| l.r_mat[(a, t)]).collect();
                v[c_prev + a][c] = Polynomial::linear(arity, &idx, &coefs, l.r_mat[(a, l.lam_rows + c)]);
            }
        }
        // symbolic Macaulay entries and equations
        let mut mnum = ComplexMatrix::zeros(rows.len() * k, cols.len());
        for (bi, beta) in rows.iter().enumerate() {
            for (fi, fpoly) in f_sliced.polys().iter().enumerate() {
                let mut eqs = vec![Polynomial::zero(arity); l.h];
                for (ai, alpha) in cols.iter().enumerate() {
                    if !beta.iter().zip(alpha).all(|(b, a)| b <= a) {
                        continue;
                    }
                    let diff: Vec<u32> = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
                    let t = taylor_coefficient(fpoly, &vars, &diff);
                    if t.is_zero() {
                        continue;
                    }
                    mnum[(bi * k + fi, ai)] = t.eval(&full);
                    let te = t.embed(arity, &map);
                    for (c, eq) in eqs.iter_mut().enumerate() {
                        *eq = &*eq + &(&te * &v[ai][c]);
                    }
                }
                polys.extend(eqs);
            }
        }
        // least-squares start values: [M_old K, M_new R_left] u = -M_new R_right e_c
        let old_idx: Vec<usize> = (0..c_prev).collect();
        let new_idx: Vec<usize> = (c_prev..cols.len()).collect();
        let m_old = mnum.select_cols(&old_idx);
        let m_new = mnum.select_cols(&new_idx);
        let left: Vec<usize> = (0..l.lam_rows).collect();
        let a_mat = {
            let mk = m_old.matmul(&l.k_mat);
            let mr = m_new.matmul(&l.r_mat.select_cols(&left));
            let mut a = ComplexMatrix::zeros(mnum.rows(), l.tau_rows + l.lam_rows);
            for rr in 0..mnum.rows() {
                for cc in 0..l.tau_rows {
                    a[(rr, cc)] = mk[(rr, cc)];
                }
                for cc in 0..l.lam_rows {
                    a[(rr, l.tau_rows + cc)] = mr[(rr, cc)];
                }
            }
            a
        };
        for c in 0..l.h {
            let rc = m_new.matvec(&l.r_mat.column(l.lam_rows + c));
            let rhs: Vec<C64> = rc.iter().map(|z| -z).collect();
            let u = if a_mat.cols() == 0 { Vec::new() } else { lstsq_min_norm(&a_mat, &rhs, 1e-12)? };
            for t in 0..l.tau_rows {
                start[l.tau_at + t * l.h + c] = u[t];
            }
            for t in 0..l.lam_rows {
                start[l.lam_at + t * l.h + c] = u[l.tau_rows + t];
            }
        }
        let rows_of = |m: &ComplexMatrix| (0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>();
        constants.unitaries.push(rows_of(&l.r_mat));
        constants.complements.push(rows_of(&l.k_mat));
    }
    let mut roles = vec![Role::Variable; n];
    roles.resize(block, Role::Auxiliary);
    finish(
        ConditionKind::Hilbert { prefix: prefix.to_vec() },
        names,
        roles,
        param_names(f_sliced, &params),
        polys,
        constants,
        start,
        vec![0..n],
    )
}
