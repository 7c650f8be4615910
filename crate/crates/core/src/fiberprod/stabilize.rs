use super::assemble::{image_dimension, FiberProductSystem};
use super::conditions::ConditionSystem;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Source of condition systems for the stabilization loop.
pub trait ConditionFactory: Sync {
    fn n_candidates(&self) -> usize;

    /// Whether one candidate may be imposed repeatedly with fresh constants.
    fn reusable(&self) -> bool;

    /// Build the `copy`-th condition from `candidate` (copies differ only in constants).
    fn build(&self, candidate: usize, copy: usize, seed: u64) -> Result<ConditionSystem>;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilizeOptions {
    pub rank_tol: f64,
    pub max_components: usize,
    pub seed: u64,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        StabilizeOptions { rank_tol: 1e-8, max_components: 64, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub candidate: usize,
    pub copy: usize,
    pub dim: Option<usize>,
    pub size: usize,
    pub accepted: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Stabilized {
    pub fiber: FiberProductSystem,
    pub trials: Vec<Trial>,
    /// Image dimension of the accepted system.
    pub dim: usize,
    /// Accepted without a verified dimension drop (singular start point).
    pub guessed: bool,
    /// Refined point on `V(F)` for the accepted system.
    pub refined: Vec<C64>,
    /// Numerical rank of the Jacobian at `refined`.
    pub jacobian_rank: usize,
    /// Numerical rank of the Jacobian at the unrefined start point.
    pub start_rank: usize,
}

impl Stabilized {
    /// `(dimension, size)` of every trial with a computed dimension, in order.
    pub fn dimension_sequence(&self) -> Vec<(usize, usize)> {
        self.trials.iter().filter_map(|t| t.dim.map(|d| (d, t.size))).collect()
    }
}

fn component_seed(master: u64, candidate: usize, copy: usize) -> u64 {
    derive_seed(derive_seed(master, candidate as u64), copy as u64)
}

/// Greedily append condition systems while the image dimension keeps dropping.
pub fn stabilize(factory: &dyn ConditionFactory, p_hat: &[C64], opts: &StabilizeOptions) -> Result<Stabilized> {
    let m = p_hat.len();
    let mut accepted: Vec<ConditionSystem> = Vec::new();
    let mut trials = Vec::new();
    let mut current = m;
    let mut refined = Vec::new();
    let mut jacobian_rank = 0;
    let mut start_rank = 0;
    let mut first_singular: Option<(ConditionSystem, Vec<C64>, usize, usize)> = None;
    'outer: for cand in 0..factory.n_candidates() {
        let mut copy = 0;
        loop {
            if accepted.len() >= opts.max_components || current == 0 {
                break 'outer;
            }
            let comp = match factory.build(cand, copy, component_seed(opts.seed, cand, copy)) {
                Ok(c) => c,
                Err(e) => {
                    trials.push(Trial { candidate: cand, copy, dim: None, size: 0, accepted: false, note: Some(e.to_string()) });
                    break;
                }
            };
            let mut comps = accepted.clone();
            comps.push(comp.clone());
            let fp = FiberProductSystem::assemble(comps)?;
            let size = fp.size();
            match image_dimension(&fp, &fp.start_point(p_hat), opts.rank_tol) {
                Ok(id) => {
                    let drops = id.dim < current;
                    log::debug!("candidate {cand} copy {copy}: image dimension {} at size {size}", id.dim);
                    trials.push(Trial { candidate: cand, copy, dim: Some(id.dim), size, accepted: drops, note: None });
                    if drops {
                        current = id.dim;
                        refined = id.point;
                        jacobian_rank = id.jacobian_rank;
                        start_rank = id.start_rank;
                        accepted.push(comp);
                        copy += 1;
                        if !factory.reusable() {
                            break;
                        }
                    } else {
                        if id.singular() && accepted.is_empty() && first_singular.is_none() {
                            first_singular = Some((comp, id.point, id.jacobian_rank, id.start_rank));
                        }
                        break;
                    }
                }
                Err(e) => {
                    trials.push(Trial { candidate: cand, copy, dim: None, size, accepted: false, note: Some(e.to_string()) });
                    break;
                }
            }
        }
    }
    let mut guessed = false;
    if accepted.is_empty() {
        match first_singular {
            Some((comp, point, rank, at_start)) => {
                // guess and check: impose the condition and let validation decide
                guessed = true;
                refined = point;
                jacobian_rank = rank;
                start_rank = at_start;
                accepted.push(comp);
            }
            None => return Err(Error::NotRecovered("no candidate condition lowers the image dimension".into())),
        }
    }
    let fiber = FiberProductSystem::assemble(accepted)?;
    Ok(Stabilized { fiber, trials, dim: current, guessed, refined, jacobian_rank, start_rank })
}

/// Image dimensions and sizes of fiber products with `1..=count` copies of one candidate.
pub fn dimension_profile(
    factory: &dyn ConditionFactory,
    candidate: usize,
    count: usize,
    p_hat: &[C64],
    opts: &StabilizeOptions,
) -> Result<Vec<(usize, usize)>> {
    let mut comps = Vec::new();
    let mut out = Vec::new();
    for copy in 0..count {
        comps.push(factory.build(candidate, copy, component_seed(opts.seed, candidate, copy))?);
        let fp = FiberProductSystem::assemble(comps.clone())?;
        let id = image_dimension(&fp, &fp.start_point(p_hat), opts.rank_tol)?;
        log::debug!("profile copy {copy}: image dimension {} at size {}", id.dim, fp.size());
        out.push((id.dim, fp.size()));
    }
    Ok(out)
}
