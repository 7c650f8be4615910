use crate::algebra::{HomogenizationScheme, PolySystem, Slice};
use crate::error::{invalid, Result};
use crate::fiberprod::{
    build_hilbert_condition, build_infinity_condition, build_trace_condition, build_witness_condition,
    move_to_slice, ConditionFactory, ConditionSystem,
};
use crate::algebra::Role;
use crate::rng::derive_seed;
use crate::structure::{best_subset, sliced, trace_data};
use crate::tracker::TrackOptions;
use crate::C64;

/// One infinity condition per suspect; each suspect is used once.
pub(crate) struct InfinityFactory {
    pub hom: PolySystem,
    /// Indices into `hom`.
    pub scheme: HomogenizationScheme,
    /// `(group, point in hom's variable order)`.
    pub suspects: Vec<(usize, Vec<C64>)>,
    pub threshold: f64,
}

impl ConditionFactory for InfinityFactory {
    fn n_candidates(&self) -> usize {
        self.suspects.len()
    }

    fn reusable(&self) -> bool {
        false
    }

    fn build(&self, candidate: usize, _copy: usize, _seed: u64) -> Result<ConditionSystem> {
        let (g, pt) = &self.suspects[candidate];
        build_infinity_condition(&self.hom, &self.scheme, *g, pt, self.threshold)
    }
}

/// Shared pieces of the witness-set based conditions.
pub(crate) struct WitnessContext {
    pub f: PolySystem,
    pub dim: usize,
    pub randomized: PolySystem,
    pub slice: Slice,
    pub p_hat: Vec<C64>,
    pub track: TrackOptions,
}

impl WitnessContext {
    /// The first copy keeps the detection slice.
    fn slice_for(&self, copy: usize) -> Option<Slice> {
        (copy == 0).then(|| self.slice.clone())
    }
}

/// `d` points on a fresh slice per copy.
pub(crate) struct WitnessFactory {
    pub ctx: WitnessContext,
    pub points: Vec<Vec<C64>>,
}

impl ConditionFactory for WitnessFactory {
    fn n_candidates(&self) -> usize {
        1
    }

    fn reusable(&self) -> bool {
        true
    }

    fn build(&self, _candidate: usize, copy: usize, seed: u64) -> Result<ConditionSystem> {
        let c = &self.ctx;
        build_witness_condition(&c.f, c.dim, &self.points, &c.randomized, &c.slice, c.slice_for(copy), &c.p_hat, seed, &c.track)
    }
}

/// Vanishing second-derivative trace of a subset, on a fresh slice per copy.
pub(crate) struct TraceFactory {
    pub ctx: WitnessContext,
    /// All near-solutions on the detection slice.
    pub near: Vec<Vec<C64>>,
    /// Indices into `near` of the subset with small trace.
    pub subset: Vec<usize>,
    pub size_cap: usize,
}

impl TraceFactory {
    const SLICE_TRIES: u64 = 8;

    /// The tracked subset on a fresh slice. Tracking alone can cross over to the
    /// other factor while `f` is still irreducible, so the slice is only taken
    /// when the tracked subset also has the smallest trace there.
    fn subset_on_fresh_slice(&self, seed: u64) -> Result<(Slice, Vec<Vec<C64>>)> {
        let c = &self.ctx;
        let fv = c.randomized.fix_role(Role::Parameter, &c.p_hat)?;
        let r = self.subset.len();
        for k in 0..Self::SLICE_TRIES {
            let s = derive_seed(seed, k);
            let slice = Slice::random(c.slice.n_vars(), c.slice.codim(), s)?;
            let Ok(moved) = move_to_slice(&c.randomized, &c.p_hat, &c.slice, &slice, &self.near, &c.track) else {
                continue;
            };
            let Ok(td) = trace_data(&fv, &slice, &moved, 0, derive_seed(s, 1), self.size_cap.max(r)) else {
                continue;
            };
            if best_subset(&td, r).is_some_and(|b| b.subset == self.subset) {
                let subset = self.subset.iter().map(|&i| moved[i].clone()).collect();
                return Ok((slice, subset));
            }
        }
        invalid("no fresh slice keeps the small-trace subset apart")
    }
}

impl ConditionFactory for TraceFactory {
    fn n_candidates(&self) -> usize {
        1
    }

    fn reusable(&self) -> bool {
        true
    }

    fn build(&self, _candidate: usize, copy: usize, seed: u64) -> Result<ConditionSystem> {
        let c = &self.ctx;
        if copy == 0 {
            let subset: Vec<Vec<C64>> = self.subset.iter().map(|&i| self.near[i].clone()).collect();
            return build_trace_condition(&c.f, c.dim, &subset, &c.randomized, &c.slice, Some(c.slice.clone()), &c.p_hat, seed, &c.track);
        }
        let (slice, subset) = self.subset_on_fresh_slice(derive_seed(seed, 1))?;
        build_trace_condition(&c.f, c.dim, &subset, &c.randomized, &slice, Some(slice.clone()), &c.p_hat, seed, &c.track)
    }
}

/// Local Hilbert conditions, one per candidate point. On a positive-dimensional
/// component the condition holds at every generic point once it holds at one, so
/// candidates are never re-imposed.
pub(crate) struct HilbertFactory {
    /// `f` over variables and parameters.
    pub system: PolySystem,
    pub slice: Option<Slice>,
    pub candidates: Vec<Vec<C64>>,
    pub prefix: Vec<usize>,
    pub p_hat: Vec<C64>,
}

impl HilbertFactory {
    /// `{system, slice}`, the square system the condition is imposed on.
    pub fn sliced_system(&self) -> Result<PolySystem> {
        sliced(&self.system, self.slice.as_ref())
    }
}

impl ConditionFactory for HilbertFactory {
    fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    fn reusable(&self) -> bool {
        false
    }

    fn build(&self, candidate: usize, _copy: usize, seed: u64) -> Result<ConditionSystem> {
        if candidate >= self.candidates.len() {
            return invalid("no such candidate");
        }
        build_hilbert_condition(&self.sliced_system()?, &self.candidates[candidate], &self.prefix, &self.p_hat, seed)
    }
}
