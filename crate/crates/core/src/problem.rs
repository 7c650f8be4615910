//! JSON problem files: a system in the text grammar, a parameter point, and one
//! structure request.

use crate::algebra::{parse_system, PolySystem, Role, Slice};
use crate::error::{invalid, Result};
use crate::structure::Thresholds;
use crate::tracker::TrackOptions;
use crate::C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::Path;

/// Complex number written as a plain number when real, else `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx(pub C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.im == 0.0 {
            s.serialize_f64(self.0.re)
        } else {
            [self.0.re, self.0.im].serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Real(r) => Cx(C64::new(r, 0.0)),
            Repr::Pair([re, im]) => Cx(C64::new(re, im)),
        })
    }
}

pub fn to_complex(v: &[Cx]) -> Vec<C64> {
    v.iter().map(|c| c.0).collect()
}

pub fn from_complex(v: &[C64]) -> Vec<Cx> {
    v.iter().map(|&c| Cx(c)).collect()
}

/// Push near-infinite solutions onto hyperplanes at infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfinityRequest {
    /// Variable groups, one homogenizing coordinate each.
    pub groups: Vec<Vec<String>>,
    /// Names of the homogenizing coordinates. With `declared`, these are existing
    /// variables of an already homogenized (and dehomogenized-by-patch) system.
    #[serde(default)]
    pub homogenizers: Vec<String>,
    #[serde(default)]
    pub declared: bool,
    /// Patch coefficients `[h, group...]` per group; random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patches: Option<Vec<Vec<Cx>>>,
    /// Groups whose near-infinite solutions are pushed.
    pub targets: Vec<usize>,
    /// Cap on the number of suspects per target group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureRequest {
    Infinity(InfinityRequest),
    /// A component of dimension `dim` and degree `degree`.
    PositiveDim { dim: usize, degree: usize },
    /// A component of dimension `dim` (curves only) splitting off a factor whose
    /// witness set has `subset_size` points.
    Factor { dim: usize, subset_size: usize },
    /// A point (or component of dimension `dim`) with local Hilbert function
    /// starting with `hilbert`.
    Multiplicity { dim: usize, hilbert: Vec<usize> },
}

impl StructureRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            StructureRequest::Infinity(_) => "infinity",
            StructureRequest::PositiveDim { .. } => "positive_dim",
            StructureRequest::Factor { .. } => "factor",
            StructureRequest::Multiplicity { .. } => "multiplicity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemOptions {
    pub seed: u64,
    /// Relative rank tolerance for image dimensions and Macaulay matrices.
    pub tol_rank: f64,
    /// Scaled residual below which a point counts as a near-solution.
    pub tol_residual: f64,
    pub tol_nonsolution: f64,
    /// Relative homogenizing magnitude below which a point is near infinity.
    pub tol_infinity: f64,
    pub tol_at_infinity: f64,
    /// Normalized trace below which a subset is taken as a factor candidate.
    pub tol_trace: f64,
    /// Validation thresholds are detection thresholds divided by this.
    pub validation_factor: f64,
    pub max_components: usize,
    pub trace_size_cap: usize,
    /// Runs with derived seeds until one validates, at most this many.
    pub attempts: usize,
    /// Stop after detection and report what was found.
    pub detect_only: bool,
    /// Fixed detection slice, one row `[c_1..c_n, c_0]` per linear form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice: Option<Vec<Vec<Cx>>>,
    /// Also report image dimensions for `1..=k` copies of the first candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<usize>,
    pub track: TrackOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<TrackOptions>,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        let th = Thresholds::default();
        ProblemOptions {
            seed: 1,
            tol_rank: 1e-8,
            tol_residual: th.near_solution,
            tol_nonsolution: th.non_solution,
            tol_infinity: th.near_infinity,
            tol_at_infinity: th.at_infinity,
            tol_trace: 1e-2,
            validation_factor: 100.0,
            max_components: 64,
            trace_size_cap: 4,
            attempts: 10,
            detect_only: false,
            slice: None,
            profile: None,
            track: TrackOptions::default(),
            descent: None,
        }
    }
}

impl ProblemOptions {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            near_solution: self.tol_residual,
            non_solution: self.tol_nonsolution,
            near_infinity: self.tol_infinity,
            at_infinity: self.tol_at_infinity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Source in the polynomial grammar.
    pub system: String,
    pub p_hat: Vec<Cx>,
    /// Real nominal point for sampling studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_nominal: Option<Vec<f64>>,
    pub structure: StructureRequest,
    #[serde(default)]
    pub options: ProblemOptions,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ProblemFile> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn p_hat(&self) -> Vec<C64> {
        to_complex(&self.p_hat)
    }

    /// Parse the system and check the request against it.
    pub fn parse(&self) -> Result<PolySystem> {
        let sys = parse_system(&self.system)?;
        let params = sys.indices_of(Role::Parameter);
        let n_aux = sys.roles().iter().filter(|r| !matches!(r, Role::Variable | Role::Parameter)).count();
        if n_aux > 0 {
            return invalid("problem systems may only declare variables and parameters");
        }
        if params.len() != self.p_hat.len() {
            return invalid(format!("p_hat has {} entries for {} parameters", self.p_hat.len(), params.len()));
        }
        if let Some(nom) = &self.p_nominal {
            if nom.len() != params.len() {
                return invalid(format!("p_nominal has {} entries for {} parameters", nom.len(), params.len()));
            }
        }
        let n = sys.indices_of(Role::Variable).len();
        match &self.structure {
            StructureRequest::Infinity(r) => {
                for name in r.groups.iter().flatten().chain(&r.homogenizers) {
                    match sys.index_of(name) {
                        Some(i) if sys.roles()[i] == Role::Variable => {}
                        Some(_) if !r.declared && r.homogenizers.contains(name) => {
                            return invalid(format!("homogenizer name `{name}` is already in use"))
                        }
                        None if !r.declared && r.homogenizers.contains(name) => {}
                        _ => return invalid(format!("`{name}` is not a declared variable")),
                    }
                }
                if !r.homogenizers.is_empty() && r.homogenizers.len() != r.groups.len() {
                    return invalid("one homogenizer per group");
                }
                if r.declared && r.homogenizers.len() != r.groups.len() {
                    return invalid("declared schemes must name their homogenizers");
                }
                if r.targets.is_empty() || r.targets.iter().any(|&t| t >= r.groups.len()) {
                    return invalid("infinity targets must name existing groups");
                }
            }
            StructureRequest::PositiveDim { dim, degree } => {
                if *dim == 0 || *dim >= n || *degree == 0 {
                    return invalid("positive_dim needs 0 < dim < #variables and degree >= 1");
                }
            }
            StructureRequest::Factor { dim, subset_size } => {
                if *dim != 1 || *subset_size == 0 {
                    return invalid("factor requests support curves (dim 1) and a nonempty subset");
                }
            }
            StructureRequest::Multiplicity { dim, hilbert } => {
                if *dim >= n || hilbert.first() != Some(&1) || hilbert.len() < 2 {
                    return invalid("multiplicity needs dim < #variables and a Hilbert prefix (1, h1, ...)");
                }
            }
        }
        if let Some(s) = &self.options.slice {
            if s.iter().any(|row| row.len() != n + 1) {
                return invalid(format!("slice rows need {} coefficients", n + 1));
            }
        }
        Ok(sys)
    }

    pub fn fixed_slice(&self) -> Option<Slice> {
        self.options.slice.as_ref().map(|rows| Slice { coeffs: rows.iter().map(|r| to_complex(r)).collect() })
    }
}
