use super::factories::{HilbertFactory, InfinityFactory, TraceFactory, WitnessContext, WitnessFactory};
use super::factors::{interpolate_factors, split_witness_set, Factorization};
use super::lagrange::{build_lagrange_reduced, descend, Descent};
use super::study::{sample_study, StudyOptions, StudySummary};
use crate::algebra::{homogenize, randomize, CompiledSystem, HomogenizationScheme, PolySystem, Role, Slice};
use crate::error::{invalid, Error, Result};
use crate::fiberprod::{dimension_profile, stabilize, ConditionFactory, FiberProductSystem, StabilizeOptions, Trial};
use crate::numlin::{norm, svd};
use crate::problem::{to_complex, InfinityRequest, ProblemFile, ProblemOptions, StructureRequest};
use crate::rng::derive_seed;
use crate::structure::{
    best_subset, classify_infinity, full_point, local_hilbert, sliced, trace_data, witness_superset, ClassifiedPoint, Label,
    MacaulayProfile, SubsetTrace, Thresholds, TraceData, WitnessOptions,
};
use crate::tracker::{solve_total_degree, PathStatus, TrackOptions};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest relative imaginary part of p* accepted when p̂ is real.
const NONREAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionStep {
    pub components: usize,
    pub dimension: usize,
    pub size: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DetectionSummary {
    /// Endpoints that did not diverge.
    pub endpoints: usize,
    pub diverged: usize,
    pub label_counts: BTreeMap<String, usize>,
    pub candidates: usize,
    /// Candidates were taken by smallest residual because too few points were
    /// near-solutions.
    pub ranked_fallback: bool,
    /// Near-singularity score of each multiplicity candidate, in candidate order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_subset: Option<SubsetTrace>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DescentSummary {
    pub status: PathStatus,
    pub steps: usize,
    pub final_t: f64,
    pub start_residual: f64,
    pub residual_g: f64,
    pub residual_f: f64,
    pub condition: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Validation {
    pub passed: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hilbert: Option<MacaulayProfile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub detection: u64,
    pub stabilize: u64,
    pub lagrange: u64,
    pub validation: u64,
}

impl Seeds {
    pub fn new(master: u64) -> Seeds {
        Seeds {
            master,
            detection: derive_seed(master, 10),
            stabilize: derive_seed(master, 11),
            lagrange: derive_seed(master, 12),
            validation: derive_seed(master, 13),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    /// `recovered`, `not-validated` or `failed`.
    pub status: String,
    pub structure: String,
    pub request: StructureRequest,
    pub p_hat: Vec<C64>,
    pub p_star: Option<Vec<C64>>,
    pub distance: Option<f64>,
    /// `p* - p_hat`.
    pub deltas: Option<Vec<C64>>,
    pub components: usize,
    /// Equations plus unknowns of the fiber product, the size of the square critical-point system.
    pub system_size: usize,
    pub image_dimension: Option<usize>,
    pub guessed: bool,
    pub dimension_sequence: Vec<DimensionStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<DimensionStep>>,
    pub trials: Vec<Trial>,
    pub detection: DetectionSummary,
    pub descent: Option<DescentSummary>,
    /// Solution blocks of each component at `p*`.
    pub blocks: Vec<Vec<C64>>,
    /// Real unit tangent of the exceptional set at `p*` when it is a curve.
    pub tangent: Option<Vec<f64>>,
    pub validation: Option<Validation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<Factorization>,
    pub error: Option<String>,
    pub last_t: Option<f64>,
    /// 1-based index of the attempt this report comes from.
    pub attempt: usize,
    pub seeds: Seeds,
    pub options: ProblemOptions,
}

impl Report {
    pub fn recovered(&self) -> bool {
        self.status == "recovered"
    }

    /// Run stopped after detection as requested.
    pub fn detected_only(&self) -> bool {
        self.status == "detected"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Report plus the classified points behind it.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    /// `(phase, point)` with phase `p_hat` or `p_star`.
    pub points: Vec<(String, ClassifiedPoint)>,
}

/// Points as CSV: phase, index, status, labels, residuals, homogenizing magnitudes,
/// then real and imaginary parts of each coordinate.
pub fn points_csv(points: &[(String, ClassifiedPoint)]) -> String {
    let nmag = points.iter().map(|(_, p)| p.homogenizing_magnitudes.len()).max().unwrap_or(0);
    let ncoord = points.iter().map(|(_, p)| p.point.len()).max().unwrap_or(0);
    let mut h = vec!["phase", "index", "status", "labels", "residual", "scaled_residual"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    h.extend((0..nmag).map(|g| format!("magnitude{g}")));
    for k in 0..ncoord {
        h.push(format!("re{}", k + 1));
        h.push(format!("im{}", k + 1));
    }
    let mut out = h.join(",");
    out.push('\n');
    let mut idx: BTreeMap<&str, usize> = BTreeMap::new();
    for (phase, p) in points {
        let i = idx.entry(phase.as_str()).or_insert(0);
        let labels: Vec<String> = p.labels.iter().map(label_name).collect();
        let status = serde_json::to_value(p.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let mut row = vec![
            phase.clone(),
            i.to_string(),
            status,
            labels.join("|"),
            format!("{:e}", p.residual_full_system),
            format!("{:e}", p.scaled_residual),
        ];
        row.extend((0..nmag).map(|g| p.homogenizing_magnitudes.get(g).map(|m| format!("{m:e}")).unwrap_or_default()));
        for k in 0..ncoord {
            match p.point.get(k) {
                Some(c) => {
                    row.push(format!("{:e}", c.re));
                    row.push(format!("{:e}", c.im));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
        *i += 1;
    }
    out
}

fn label_name(l: &Label) -> String {
    match l {
        Label::NonSolution => "nonsolution".into(),
        Label::NearSolution => "near_solution".into(),
        Label::Ambiguous => "ambiguous".into(),
        Label::NearInfinity(g) => format!("near_infinity{g}"),
        Label::AtInfinity(g) => format!("at_infinity{g}"),
        Label::Finite => "finite".into(),
    }
}

fn count_labels(points: &[ClassifiedPoint]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for p in points {
        for l in &p.labels {
            *m.entry(label_name(l)).or_insert(0) += 1;
        }
    }
    m
}

/// What detection hands to stabilization and validation.
enum Detected {
    Infinity { factory: InfinityFactory, baseline: BTreeMap<usize, usize> },
    Witness { factory: WitnessFactory, degree: usize },
    Trace { factory: TraceFactory, size: usize },
    Hilbert { factory: HilbertFactory },
}

impl Detected {
    fn factory(&self) -> &dyn ConditionFactory {
        match self {
            Detected::Infinity { factory, .. } => factory,
            Detected::Witness { factory, .. } => factory,
            Detected::Trace { factory, .. } => factory,
            Detected::Hilbert { factory } => factory,
        }
    }
}

struct Ctx<'a> {
    problem: &'a ProblemFile,
    f: PolySystem,
    p_hat: Vec<C64>,
    opts: &'a ProblemOptions,
    seeds: Seeds,
    th: Thresholds,
}

/// Detection, stabilization, descent and validation for one problem.
///
/// Errors only for invalid input; every later failure is recorded in the report.
pub fn run_problem(problem: &ProblemFile) -> Result<RunOutput> {
    let f = problem.parse()?;
    let master = problem.options.seed;
    let mut out = run_attempt(problem, &f, master, 1);
    for k in 2..=problem.options.attempts {
        if out.report.recovered() || out.report.detected_only() {
            break;
        }
        out = run_attempt(problem, &f, derive_seed(master, 100 + k as u64), k);
    }
    Ok(out)
}

fn run_attempt(problem: &ProblemFile, f: &PolySystem, seed: u64, attempt: usize) -> RunOutput {
    let f = f.clone();
    let opts = &problem.options;
    let seeds = Seeds::new(seed);
    let p_hat = problem.p_hat();
    let mut out = RunOutput {
        report: Report {
            name: problem.name.clone(),
            status: "failed".into(),
            structure: problem.structure.kind().into(),
            request: problem.structure.clone(),
            p_hat: p_hat.clone(),
            p_star: None,
            distance: None,
            deltas: None,
            components: 0,
            system_size: 0,
            image_dimension: None,
            guessed: false,
            dimension_sequence: Vec::new(),
            profile: None,
            trials: Vec::new(),
            detection: DetectionSummary::default(),
            descent: None,
            blocks: Vec::new(),
            tangent: None,
            validation: None,
            factors: None,
            error: None,
            last_t: None,
            attempt,
            seeds: seeds.clone(),
            options: opts.clone(),
        },
        points: Vec::new(),
    };
    let ctx = Ctx { problem, f, p_hat, opts, th: opts.thresholds(), seeds };
    if let Err(e) = pipeline(&ctx, &mut out) {
        out.report.status = "failed".into();
        out.report.error = Some(e.to_string());
    }
    out
}

fn pipeline(ctx: &Ctx, out: &mut RunOutput) -> Result<()> {
    log::info!("{}: attempt {}, seed {}", ctx.problem.name, out.report.attempt, ctx.seeds.master);
    let detected = detect(ctx, out)?;
    let det = &out.report.detection;
    log::info!("detection: {} endpoints, {} diverged, labels {:?}", det.endpoints, det.diverged, det.label_counts);
    if ctx.opts.detect_only {
        out.report.status = "detected".into();
        return Ok(());
    }
    let factory = detected.factory();
    let sopts = StabilizeOptions {
        rank_tol: ctx.opts.tol_rank,
        max_components: ctx.opts.max_components,
        seed: ctx.seeds.stabilize,
    };
    if let Some(k) = ctx.opts.profile {
        let prof = dimension_profile(factory, 0, k, &ctx.p_hat, &sopts)?;
        out.report.profile = Some(
            prof.into_iter()
                .enumerate()
                .map(|(i, (dimension, size))| DimensionStep { components: i + 1, dimension, size })
                .collect(),
        );
    }
    let st = stabilize(factory, &ctx.p_hat, &sopts)?;
    log::info!("stabilized: {} components, image dimension {}, size {}", st.fiber.components.len(), st.dim, st.fiber.size());
    let r = &mut out.report;
    r.trials = st.trials.clone();
    r.guessed = st.guessed;
    r.image_dimension = (!st.guessed).then_some(st.dim);
    r.components = st.fiber.components.len();
    r.system_size = st.fiber.size();
    r.dimension_sequence = st
        .dimension_sequence()
        .into_iter()
        .enumerate()
        .map(|(i, (dimension, size))| DimensionStep { components: i + 1, dimension, size })
        .collect();

    let fp = &st.fiber;
    let z_hat = fp.start_point(&ctx.p_hat);
    // a deficiency seen only at the refined point belongs to a singular point, not to the component
    let m = fp.n_equations();
    let rank = if st.start_rank <= st.jacobian_rank { st.jacobian_rank.min(m) } else { m };
    if rank < m {
        log::info!("descent: Jacobian rank {rank} of {} equations, randomizing", m);
    }
    let g = build_lagrange_reduced(fp, &ctx.p_hat, &z_hat, rank, ctx.seeds.lagrange)?;
    let topts = ctx.opts.descent.clone().unwrap_or_else(|| ctx.opts.track.clone());
    log::info!("descent: tracking a system of {} equations", g.system.len());
    let d = descend(&g, &topts)?;
    log::info!("descent: {:?} after {} steps, residual {:.2e}", d.track.status, d.track.steps, d.residual_g);
    r.descent = Some(DescentSummary {
        status: d.track.status,
        steps: d.track.steps,
        final_t: d.track.final_t,
        start_residual: d.start_residual,
        residual_g: d.residual_g,
        residual_f: d.residual_f,
        condition: d.track.condition,
    });
    if !d.reached_end() {
        r.last_t = Some(d.track.final_t);
        return Err(Error::PathFailure(format!(
            "descent ended {:?} at t = {:.3e}; the perturbation may be too large for this formulation",
            d.track.status, d.track.final_t
        )));
    }
    let p_star = d.p_star.clone();
    r.distance = Some(norm(&crate::numlin::sub(&p_star, &ctx.p_hat)));
    r.deltas = Some(p_star.iter().zip(&ctx.p_hat).map(|(a, b)| a - b).collect());
    r.p_star = Some(p_star.clone());
    r.blocks = fp
        .offsets
        .iter()
        .zip(&fp.components)
        .map(|(&o, c)| d.z[o..o + c.block_len].to_vec())
        .collect();
    r.tangent = exceptional_tangent(fp, &d.z, ctx.opts.tol_rank);

    let validation = validate(ctx, &detected, fp, &d, out)?;
    log::info!("validation {}: {}", if validation.passed { "passed" } else { "failed" }, validation.summary);
    let r = &mut out.report;
    r.status = if validation.passed { "recovered" } else { "not-validated" }.into();
    if !validation.passed {
        r.error = Some(format!("structure not recovered: {}", validation.summary));
    }
    r.validation = Some(validation);
    Ok(())
}

/// Real unit direction spanning the image tangent space when it is one-dimensional.
fn exceptional_tangent(fp: &FiberProductSystem, z: &[C64], tol: f64) -> Option<Vec<f64>> {
    let c = CompiledSystem::new(&fp.full_system);
    let j = c.jacobian(z);
    let dec = svd(&j);
    let rank = dec.rank(tol);
    let null = dec.null_basis(rank);
    let prow: Vec<usize> = fp.param_indices().collect();
    let pn = null.select_rows(&prow);
    if pn.cols() == 0 {
        return None;
    }
    let pd = svd(&pn.adjoint());
    if pd.rank(tol.max(1e-10)) != 1 {
        return None;
    }
    let v: Vec<C64> = pd.v.column(0);
    let k = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?.0;
    let phase = v[k].conj() / v[k].norm();
    let re: Vec<f64> = v.iter().map(|x| (x * phase).re).collect();
    let n = re.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut t: Vec<f64> = re.iter().map(|x| x / n).collect();
    if t[k] < 0.0 {
        t.iter_mut().for_each(|x| *x = -*x);
    }
    Some(t)
}

fn indices(f: &PolySystem, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| f.index_of(n).ok_or_else(|| Error::Invalid(format!("`{n}` is not declared"))))
        .collect()
}

fn infinity_setup(f: &PolySystem, req: &InfinityRequest, seed: u64) -> Result<(PolySystem, HomogenizationScheme)> {
    let groups: Vec<Vec<usize>> = req.groups.iter().map(|g| indices(f, g)).collect::<Result<_>>()?;
    let patches = req.patches.as_ref().map(|ps| ps.iter().map(|p| to_complex(p)).collect::<Vec<_>>());
    if req.declared {
        let hz = indices(f, &req.homogenizers)?;
        let patches = patches.unwrap_or_else(|| vec![Vec::new(); groups.len()]);
        return Ok((f.clone(), HomogenizationScheme::declared(groups, hz, patches)));
    }
    let scheme = match patches {
        Some(p) => HomogenizationScheme::with_patches(f, groups, p)?,
        None => HomogenizationScheme::random(f, groups, seed)?,
    };
    let names = if req.homogenizers.is_empty() {
        crate::algebra::fresh_names(f, "h", scheme.groups.len())
    } else {
        req.homogenizers.clone()
    };
    Ok((homogenize(f, &scheme, &names)?, scheme))
}

fn classify_hom(
    hom: &PolySystem,
    scheme: &HomogenizationScheme,
    p: &[C64],
    seed: u64,
    th: &Thresholds,
    track: &TrackOptions,
) -> Result<(Vec<ClassifiedPoint>, usize)> {
    let results = solve_total_degree(hom, p, seed, track)?;
    let diverged = results.iter().filter(|r| r.status == PathStatus::Diverged).count();
    let fixed = hom.fix_role(Role::Parameter, p)?;
    let pts = classify_infinity(&results, &scheme.in_variable_order(hom), &CompiledSystem::new(&fixed), th);
    Ok((pts, diverged))
}

fn count_below(points: &[ClassifiedPoint], group: usize, threshold: f64) -> usize {
    points.iter().filter(|p| p.homogenizing_magnitudes[group] < threshold).count()
}

fn witness_context(ctx: &Ctx, dim: usize, out: &mut RunOutput) -> Result<(WitnessContext, Vec<ClassifiedPoint>)> {
    let wopts = WitnessOptions { thresholds: ctx.th, track: ctx.opts.track.clone(), slice: ctx.problem.fixed_slice() };
    let ws = witness_superset(&ctx.f, &ctx.p_hat, dim, ctx.seeds.detection, &wopts)?;
    let d = &mut out.report.detection;
    d.endpoints = ws.points.len();
    d.diverged = ws.diverged;
    d.label_counts = count_labels(&ws.points);
    out.points.extend(ws.points.iter().map(|p| ("p_hat".to_string(), p.clone())));
    let slice = ws.slice.clone().ok_or_else(|| Error::Invalid("witness sets need dim > 0".into()))?;
    let wc = WitnessContext {
        f: ctx.f.clone(),
        dim,
        randomized: ws.randomized.clone(),
        slice,
        p_hat: ctx.p_hat.clone(),
        track: ctx.opts.track.clone(),
    };
    Ok((wc, ws.points))
}

/// The `count` points of smallest scaled residual, and whether any of them had to
/// come from outside the near-solution band.
fn smallest_residuals(points: &[ClassifiedPoint], count: usize) -> (Vec<&ClassifiedPoint>, bool) {
    let mut all: Vec<&ClassifiedPoint> = points.iter().collect();
    all.sort_by(|a, b| a.scaled_residual.total_cmp(&b.scaled_residual));
    all.truncate(count);
    let ranked = all.iter().any(|p| !p.is_near_solution());
    (all, ranked)
}

/// Smallest `h`-th singular value of `J_x` over the size of `[J_x | J_p]`.
fn singularity_score(sys: &PolySystem, x: &[C64], p: &[C64], h: usize) -> f64 {
    let z = full_point(sys, x, p);
    let c = CompiledSystem::new(sys);
    let j = c.jacobian(&z);
    let vars = sys.indices_of(Role::Variable);
    let jx = j.select_cols(&vars);
    let n = vars.len();
    let dec = svd(&jx);
    let idx = n.saturating_sub(h);
    let s = dec.s.get(idx).copied().unwrap_or(0.0);
    s / j.frobenius().max(f64::MIN_POSITIVE)
}

fn detect(ctx: &Ctx, out: &mut RunOutput) -> Result<Detected> {
    let seed = ctx.seeds.detection;
    match &ctx.problem.structure {
        StructureRequest::Infinity(req) => {
            let (hom, scheme) = infinity_setup(&ctx.f, req, derive_seed(seed, 1))?;
            let (pts, diverged) = classify_hom(&hom, &scheme, &ctx.p_hat, derive_seed(seed, 2), &ctx.th, &ctx.opts.track)?;
            let d = &mut out.report.detection;
            d.endpoints = pts.len();
            d.diverged = diverged;
            d.label_counts = count_labels(&pts);
            let mut suspects = Vec::new();
            let mut baseline = BTreeMap::new();
            let tight = ctx.th.tightened(ctx.opts.validation_factor).near_infinity;
            for &t in &req.targets {
                let mut cand: Vec<&ClassifiedPoint> = pts
                    .iter()
                    .filter(|p| p.has(Label::NearInfinity(t)) && !p.has(Label::AtInfinity(t)) && p.status == PathStatus::Success)
                    .collect();
                cand.sort_by(|a, b| a.homogenizing_magnitudes[t].total_cmp(&b.homogenizing_magnitudes[t]));
                if let Some(c) = req.count {
                    cand.truncate(c);
                }
                suspects.extend(cand.into_iter().map(|p| (t, p.point.clone())));
                baseline.insert(t, count_below(&pts, t, tight));
            }
            out.report.detection.candidates = suspects.len();
            out.points.extend(pts.into_iter().map(|p| ("p_hat".to_string(), p)));
            if suspects.is_empty() {
                return Err(Error::NotRecovered("no nonsingular solutions near the targeted hyperplanes at infinity".into()));
            }
            Ok(Detected::Infinity {
                factory: InfinityFactory { hom, scheme, suspects, threshold: ctx.opts.tol_infinity },
                baseline,
            })
        }
        StructureRequest::PositiveDim { dim, degree } => {
            let (wc, pts) = witness_context(ctx, *dim, out)?;
            let (near, ranked) = smallest_residuals(&pts, *degree);
            if near.len() < *degree {
                return Err(Error::NotRecovered(format!("{} endpoints for a degree {degree} component", near.len())));
            }
            let points: Vec<Vec<C64>> = near.iter().map(|p| p.point.clone()).collect();
            out.report.detection.candidates = points.len();
            out.report.detection.ranked_fallback = ranked;
            Ok(Detected::Witness { factory: WitnessFactory { ctx: wc, points }, degree: *degree })
        }
        StructureRequest::Factor { dim, subset_size } => {
            let (wc, pts) = witness_context(ctx, *dim, out)?;
            let near: Vec<Vec<C64>> = pts.iter().filter(|p| p.is_near_solution()).map(|p| p.point.clone()).collect();
            if near.len() <= *subset_size {
                return Err(Error::NotRecovered(format!("{} witness points cannot split off {subset_size}", near.len())));
            }
            let fv = wc.randomized.fix_role(Role::Parameter, &ctx.p_hat)?;
            let td = trace_data(&fv, &wc.slice, &near, 0, derive_seed(seed, 4), ctx.opts.trace_size_cap.max(*subset_size))?;
            let best = best_subset(&td, *subset_size)
                .cloned()
                .ok_or_else(|| Error::NotRecovered("no subset of the requested size".into()))?;
            let d = &mut out.report.detection;
            d.candidates = near.len();
            d.trace = Some(td);
            d.best_subset = Some(best.clone());
            if best.normalized > ctx.opts.tol_trace {
                return Err(Error::NotRecovered(format!(
                    "smallest normalized trace {:.3e} is above {:.1e}",
                    best.normalized, ctx.opts.tol_trace
                )));
            }
            let factory = TraceFactory { ctx: wc, near, subset: best.subset.clone(), size_cap: ctx.opts.trace_size_cap };
            Ok(Detected::Trace { factory, size: *subset_size })
        }
        StructureRequest::Multiplicity { dim, hilbert } => {
            let h1 = hilbert[1];
            let (system, slice, pts) = if *dim == 0 {
                let n = ctx.f.indices_of(Role::Variable).len();
                let square = if ctx.f.len() == n { ctx.f.clone() } else { randomize(&ctx.f, n, derive_seed(seed, 1))? };
                let results = solve_total_degree(&square, &ctx.p_hat, derive_seed(seed, 3), &ctx.opts.track)?;
                let pts: Vec<Vec<C64>> =
                    results.iter().filter(|r| r.status != PathStatus::Diverged).map(|r| r.endpoint.clone()).collect();
                out.report.detection.endpoints = pts.len();
                out.report.detection.diverged = results.len() - pts.len();
                (ctx.f.clone(), None, pts)
            } else {
                let (wc, pts) = witness_context(ctx, *dim, out)?;
                (wc.randomized, Some(wc.slice), pts.into_iter().map(|p| p.point).collect())
            };
            let probe = sliced(&system, slice.as_ref())?;
            let mut scored: Vec<(f64, Vec<C64>)> =
                pts.into_iter().map(|x| (singularity_score(&probe, &x, &ctx.p_hat, h1), x)).collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            // the best candidate always, others only when clearly near-singular
            let cut = ctx.opts.tol_residual.sqrt();
            let keep = if *dim == 0 { scored.iter().skip(1).take_while(|s| s.0 < cut).count() + 1 } else { 1 };
            scored.truncate(keep.min(scored.len()));
            if scored.is_empty() {
                return Err(Error::NotRecovered("no candidate points".into()));
            }
            out.report.detection.scores = scored.iter().map(|s| s.0).collect();
            out.report.detection.candidates = scored.len();
            Ok(Detected::Hilbert {
                factory: HilbertFactory {
                    system,
                    slice,
                    candidates: scored.into_iter().map(|s| s.1).collect(),
                    prefix: hilbert.clone(),
                    p_hat: ctx.p_hat.clone(),
                },
            })
        }
    }
}

fn validate(ctx: &Ctx, detected: &Detected, fp: &FiberProductSystem, d: &Descent, out: &mut RunOutput) -> Result<Validation> {
    let p_star = &d.p_star;
    let factor = ctx.opts.validation_factor;
    let tight = ctx.th.tightened(factor);
    let seed = ctx.seeds.validation;
    let mut v = Validation::default();
    v.metrics.insert("residual_f".into(), d.residual_f);
    v.metrics.insert("residual_g".into(), d.residual_g);
    match detected {
        Detected::Infinity { factory, baseline } => {
            let (pts, _) = classify_hom(&factory.hom, &factory.scheme, p_star, seed, &tight, &ctx.opts.track)?;
            let mut ok = true;
            let mut parts = Vec::new();
            for (&t, &before) in baseline {
                let after = count_below(&pts, t, tight.near_infinity);
                v.metrics.insert(format!("below_threshold_group{t}_p_hat"), before as f64);
                v.metrics.insert(format!("below_threshold_group{t}_p_star"), after as f64);
                ok &= after > before;
                parts.push(format!("group {t}: {before} -> {after} solutions below {:.0e}", tight.near_infinity));
            }
            v.passed = ok;
            v.summary = parts.join("; ");
            out.points.extend(pts.into_iter().map(|p| ("p_star".to_string(), p)));
        }
        Detected::Witness { factory, degree } => {
            let wopts = WitnessOptions { thresholds: tight, track: ctx.opts.track.clone(), slice: None };
            let ws = witness_superset(&ctx.f, p_star, factory.ctx.dim, seed, &wopts)?;
            let near = ws.near_solutions().len();
            let best = ws.points.iter().map(|p| p.scaled_residual).fold(f64::INFINITY, f64::min);
            v.metrics.insert("near_solutions".into(), near as f64);
            v.metrics.insert("smallest_scaled_residual".into(), best);
            v.passed = near >= *degree;
            v.summary = format!("{near} witness points with scaled residual below {:.0e} (need {degree})", tight.near_solution);
            out.points.extend(ws.points.into_iter().map(|p| ("p_star".to_string(), p)));
        }
        Detected::Trace { factory, size } => {
            let dim = factory.ctx.dim;
            let wopts = WitnessOptions { thresholds: tight, track: ctx.opts.track.clone(), slice: None };
            let ws = witness_superset(&ctx.f, p_star, dim, seed, &wopts)?;
            let near: Vec<Vec<C64>> = ws.near_solutions().iter().map(|p| p.point.clone()).collect();
            let slice = ws.slice.clone().expect("curve slice");
            let fv = ws.randomized.fix_role(Role::Parameter, p_star)?;
            let td = trace_data(&fv, &slice, &near, 0, derive_seed(seed, 4), ctx.opts.trace_size_cap.max(*size))?;
            let best = best_subset(&td, *size).map(|b| b.normalized).unwrap_or(f64::INFINITY);
            let limit = ctx.opts.tol_trace / factor;
            v.metrics.insert("witness_points".into(), near.len() as f64);
            v.metrics.insert("best_normalized_trace".into(), best);
            v.passed = best < limit;
            v.summary = format!("best subset of {size} has normalized trace {best:.2e} (limit {limit:.0e})");
            out.points.extend(ws.points.into_iter().map(|p| ("p_star".to_string(), p)));
            if ctx.f.len() == 1 && factory.ctx.f.indices_of(Role::Variable).len() == dim + 1 {
                out.report.factors = recovered_factors(ctx, fp, d).ok();
            }
        }
        Detected::Hilbert { factory } => {
            let comp = &fp.components[0];
            let n = comp.point_blocks[0].len();
            let x_star = &d.z[fp.offsets[0]..fp.offsets[0] + n];
            let fx = factory.sliced_system()?.fix_role(Role::Parameter, p_star)?;
            let d_max = factory.prefix.len() as u32;
            let prof = local_hilbert(&fx, x_star, d_max, ctx.opts.tol_rank / factor)?;
            let matches = |h: &[usize]| h.len() >= factory.prefix.len() && h[..factory.prefix.len()] == factory.prefix[..];
            if let Some(m) = prof.multiplicity {
                v.metrics.insert("multiplicity".into(), m as f64);
            }
            v.passed = matches(&prof.hilbert);
            v.summary = format!("local Hilbert function {:?} at the recovered point (requested prefix {:?})", prof.hilbert, factory.prefix);
            if let Some(s) = &factory.slice {
                // the detection slice may itself be tangent at x*; recheck the
                // unrandomized system against a fresh slice through the point
                let fresh = Slice::random(n, s.codim(), derive_seed(seed, 6))?.through(x_star);
                let fx2 = sliced(&ctx.f, Some(&fresh))?.fix_role(Role::Parameter, p_star)?;
                match local_hilbert(&fx2, x_star, d_max, ctx.opts.tol_rank / factor) {
                    Ok(recheck) => {
                        v.passed &= matches(&recheck.hilbert);
                        v.summary.push_str(&format!("; {:?} with a fresh slice", recheck.hilbert));
                    }
                    Err(e) => {
                        v.passed = false;
                        v.summary.push_str(&format!("; fresh slice: {e}"));
                    }
                }
            }
            v.hilbert = Some(prof);
        }
    }
    // the holomorphic distance also has nonreal critical points; for real data
    // they are not answers
    if ctx.p_hat.iter().all(|c| c.im == 0.0) {
        let scale = p_star.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let im = p_star.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / scale;
        v.metrics.insert("imaginary_part".into(), im);
        if im > NONREAL_TOL {
            v.passed = false;
            v.summary.push_str(&format!("; p* is not real (relative imaginary part {im:.1e})"));
        }
    }
    Ok(v)
}

fn recovered_factors(ctx: &Ctx, fp: &FiberProductSystem, d: &Descent) -> Result<Factorization> {
    let comp = &fp.components[0];
    let slice: Slice = comp.constants.slice.clone().ok_or_else(|| Error::Invalid("trace condition without slice".into()))?;
    let subset: Vec<Vec<C64>> = comp
        .point_blocks
        .iter()
        .map(|r| d.z[fp.offsets[0] + r.start..fp.offsets[0] + r.end].to_vec())
        .collect();
    let seed = derive_seed(ctx.seeds.validation, 5);
    let groups = split_witness_set(&ctx.f, &d.p_star, &slice, &subset, seed, &ctx.opts.track)?;
    if groups.iter().any(|g| g.is_empty()) {
        return invalid("empty factor group");
    }
    interpolate_factors(&ctx.f, &d.p_star, &slice, &groups, derive_seed(seed, 1), &ctx.opts.track)
}

/// Sampling study around `p_nominal`: each sample runs the full pipeline from a
/// perturbed copy of the problem.
pub fn run_study(problem: &ProblemFile, samples: usize, sigma: f64, seed: u64) -> Result<StudySummary> {
    problem.parse()?;
    let nominal = problem
        .p_nominal
        .clone()
        .ok_or_else(|| Error::Invalid("studies need p_nominal".into()))?;
    let mut at_nominal = problem.clone();
    at_nominal.p_hat = nominal.iter().map(|&v| crate::problem::Cx(C64::new(v, 0.0))).collect();
    let base = run_problem(&at_nominal)?;
    let tangent = base.report.tangent.clone();
    let codim = base
        .report
        .image_dimension
        .map(|d| nominal.len() - d)
        .unwrap_or(1);
    let opts = StudyOptions { samples, sigma, seed, tangent, codim };
    Ok(sample_study(&nominal, &opts, |p, s| {
        let mut prob = problem.clone();
        prob.p_hat = p.iter().map(|&c| crate::problem::Cx(c)).collect();
        prob.options.seed = s;
        let out = run_problem(&prob).map_err(|e| e.to_string())?;
        if out.report.recovered() {
            Ok(out.report.p_star.expect("recovered runs carry p*"))
        } else {
            Err(out.report.error.unwrap_or_else(|| out.report.status.clone()))
        }
    }))
}
