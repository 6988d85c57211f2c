//! Task classification, CP selection, the deviation objective, monitoring and
//! repair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp::ast::Value;
use crate::cp::{parse_cp, validate_cp, CpRuntime, Failure, Program, SignalTrace};
use crate::wm::Decision;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecutiveError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("task file: {0}")]
    Parse(String),
    #[error("no CP for task `{0}`")]
    NoCp(String),
    #[error("library program `{name}`: {message}")]
    Library { name: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Looks {
    One,
    Two,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Discrimination,
    Recognition,
    Detection,
    Categorization,
    Identification,
    Classification,
    Localization,
    GazeShift,
    VisualSearch,
    SameDifferent,
    Compare,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub problem: Problem,
    pub looks: Looks,
    pub eye_movements: bool,
    /// Discernible images, classification only.
    pub k: Option<u32>,
    /// Categories, classification only.
    pub m: Option<u32>,
}

impl TaxonomyNode {
    pub fn validate(&self) -> Result<(), ExecutiveError> {
        if self.eye_movements && self.looks != Looks::N {
            return Err(ExecutiveError::InvalidTask("eye movements make a task n-look".into()));
        }
        if self.problem == Problem::Classification {
            match (self.k, self.m) {
                (Some(k), Some(m)) if k >= m && m >= 1 => {}
                _ => return Err(ExecutiveError::InvalidTask("classification needs K >= M >= 1".into())),
            }
        }
        Ok(())
    }
}

fn default_theta() -> f64 {
    0.95
}

fn default_tau() -> f64 {
    0.1
}

/// Target description: the template to find and the alternative to reject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub feature: String,
    #[serde(default)]
    pub other: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CueValidity {
    Valid,
    Invalid,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusParams {
    #[serde(default = "one")]
    pub set_size: usize,
    /// Probability that the target is in the display.
    #[serde(default = "certain")]
    pub target_present: f64,
    #[serde(default)]
    pub clutter: f64,
    #[serde(default = "default_intensity")]
    pub intensity: [f64; 2],
    /// Same-different pairs: probability the two items match.
    #[serde(default = "half")]
    pub same_probability: f64,
    #[serde(default)]
    pub cue: Option<CueValidity>,
    /// Keep every item inside the fovea around the start gaze.
    #[serde(default)]
    pub foveal: bool,
}

fn one() -> usize {
    1
}
fn certain() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_intensity() -> [f64; 2] {
    [0.8, 1.0]
}

impl Default for StimulusParams {
    fn default() -> Self {
        toml::from_str("").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    pub problem: Problem,
    pub looks: Looks,
    #[serde(default)]
    pub eye_movements: bool,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub m: Option<u32>,
    pub deadline_ms: f64,
    #[serde(default)]
    pub start_ms: f64,
    pub target: TargetSpec,
    #[serde(default)]
    pub stimulus: StimulusParams,
    /// Library program to use instead of the default for the problem.
    #[serde(default)]
    pub cp: Option<String>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

impl TaskSpec {
    pub fn from_toml(text: &str) -> Result<Self, ExecutiveError> {
        let spec: TaskSpec = toml::from_str(text).map_err(|e| ExecutiveError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn node(&self) -> TaxonomyNode {
        TaxonomyNode {
            problem: self.problem,
            looks: self.looks,
            eye_movements: self.eye_movements,
            k: self.k,
            m: self.m,
        }
    }

    pub fn validate(&self) -> Result<(), ExecutiveError> {
        self.node().validate()?;
        if !(self.start_ms >= 0.0 && self.deadline_ms > self.start_ms) {
            return Err(ExecutiveError::InvalidTask("need deadline_ms > start_ms >= 0".into()));
        }
        if self.stimulus.set_size == 0 {
            return Err(ExecutiveError::InvalidTask("set size must be at least 1".into()));
        }
        let [lo, hi] = self.stimulus.intensity;
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            return Err(ExecutiveError::InvalidTask("intensity range must satisfy 0 < lo <= hi <= 1".into()));
        }
        for p in [self.stimulus.target_present, self.stimulus.same_probability, self.stimulus.clutter] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ExecutiveError::InvalidTask("probabilities must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// `(t_i, t_c)` in cycles.
    pub fn window(&self, cycle_ms: f64) -> (u64, u64) {
        let t_i = (self.start_ms / cycle_ms).ceil() as u64;
        let t_c = (self.deadline_ms / cycle_ms).floor() as u64;
        (t_i, t_c.max(t_i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Euclidean distance between spatial references.
    L2,
    /// Absolute difference between scalars.
    Abs,
    /// `1 - cos` between feature vectors.
    Cosine,
}

/// One Type I control variable's distance from its reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub index: usize,
    pub t: u64,
    pub signal: String,
    pub reference: String,
    pub observed: String,
    pub measure: Measure,
    pub value: f64,
}

pub fn l2(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn objective_value(deviations: &[Deviation]) -> f64 {
    deviations.iter().map(|d| d.value).sum()
}

/// Index of the candidate with the smallest objective; ties go to the
/// earliest candidate.
pub fn choose_control(candidates: &[Vec<Deviation>]) -> usize {
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let v = objective_value(c);
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Passes {
    OneFeedforward,
    FeedforwardPartial,
    FeedforwardFull,
    /// Three or more passes in either direction.
    MultiPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub passes: Passes,
    pub saccades: bool,
}

pub fn classify_task(spec: &TaskSpec) -> Profile {
    classify_node(&spec.node())
}

pub fn classify_node(node: &TaxonomyNode) -> Profile {
    use Problem::*;
    let passes = match node.problem {
        Discrimination | Categorization | Recognition | Detection => Passes::OneFeedforward,
        Identification | Classification => Passes::FeedforwardPartial,
        Localization | GazeShift => Passes::FeedforwardFull,
        VisualSearch | Compare | Measure | SameDifferent => Passes::MultiPass,
    };
    Profile {
        passes,
        saccades: node.eye_movements,
    }
}

/// Pass and saccade counts in a slice of trace signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PassCounts {
    pub feedforward: usize,
    pub localize_full: usize,
    pub localize_partial: usize,
    pub saccades: usize,
}

pub fn pass_counts(signals: &[crate::cp::ControlSignal]) -> PassCounts {
    let mut c = PassCounts {
        feedforward: 0,
        localize_full: 0,
        localize_partial: 0,
        saccades: 0,
    };
    for s in signals {
        match s.name.as_str() {
            "feedforward" => c.feedforward += 1,
            "saccade" => c.saccades += 1,
            "localize" if s.params.iter().any(|p| p == "mode=partial") => c.localize_partial += 1,
            "localize" => c.localize_full += 1,
            _ => {}
        }
    }
    c
}

pub fn profile_matches(profile: Profile, c: PassCounts) -> bool {
    let passes = match profile.passes {
        Passes::OneFeedforward => c.feedforward == 1 && c.localize_full + c.localize_partial == 0,
        Passes::FeedforwardPartial => c.feedforward == 1 && c.localize_partial == 1 && c.localize_full == 0,
        Passes::FeedforwardFull => c.feedforward == 1 && c.localize_full == 1 && c.localize_partial == 0,
        Passes::MultiPass => c.feedforward + c.localize_full + c.localize_partial >= 3,
    };
    passes && (c.saccades > 0) == profile.saccades
}

pub const FIXTURES: [(&str, &str); 10] = [
    ("cued_detection", include_str!("../fixtures/cp/cued_detection.cp")),
    ("discrimination", include_str!("../fixtures/cp/discrimination.cp")),
    ("gazeshift", include_str!("../fixtures/cp/gazeshift.cp")),
    ("identification", include_str!("../fixtures/cp/identification.cp")),
    ("localization", include_str!("../fixtures/cp/localization.cp")),
    ("recognition", include_str!("../fixtures/cp/recognition.cp")),
    ("runner", include_str!("../fixtures/cp/runner.cp")),
    ("same_different", include_str!("../fixtures/cp/same_different.cp")),
    ("search_1look", include_str!("../fixtures/cp/search_1look.cp")),
    ("search_nlook", include_str!("../fixtures/cp/search_nlook.cp")),
];

/// Immutable set of validated programs, keyed by name.
#[derive(Debug, Clone)]
pub struct Library {
    pub programs: BTreeMap<String, Program>,
}

impl Library {
    pub fn builtin() -> Self {
        Library::from_sources(FIXTURES.iter().map(|(n, s)| (n.to_string(), s.to_string())))
            .expect("fixture programs are valid")
    }

    pub fn from_sources(
        sources: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ExecutiveError> {
        let mut programs = BTreeMap::new();
        for (name, src) in sources {
            let p = parse_cp(&src).map_err(|e| ExecutiveError::Library {
                name: name.clone(),
                message: e.to_string(),
            })?;
            validate_cp(&p).map_err(|errs| ExecutiveError::Library {
                name: name.clone(),
                message: errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
            })?;
            programs.insert(name, p);
        }
        Ok(Library { programs })
    }

    pub fn insert(&mut self, name: &str, program: Program) {
        self.programs.insert(name.to_string(), program);
    }
}

pub fn default_cp_name(node: &TaxonomyNode) -> Option<&'static str> {
    use Problem::*;
    Some(match node.problem {
        Discrimination => "discrimination",
        Recognition | Categorization => "recognition",
        Detection => "cued_detection",
        Identification | Classification => "identification",
        Localization => "localization",
        GazeShift => "gazeshift",
        VisualSearch if node.looks == Looks::N => "search_nlook",
        VisualSearch => "search_1look",
        SameDifferent | Compare => "same_different",
        Measure => return None,
    })
}

/// A library program with its formals bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCp {
    pub name: String,
    pub program: Program,
    pub args: Vec<Value>,
}

/// Value for a formal parameter, by the parameter's name.
fn bind(formal: &str, spec: &TaskSpec, theta: f64) -> Option<Value> {
    let other = spec.target.other.clone().unwrap_or_else(|| "none".into());
    Some(match formal {
        "target" | "first" => Value::Str(spec.target.feature.clone()),
        "other" | "second" => Value::Str(other),
        "cue" => Value::Str(match spec.stimulus.cue.unwrap_or(CueValidity::Neutral) {
            CueValidity::Valid => spec.target.feature.clone(),
            CueValidity::Invalid => other,
            CueValidity::Neutral => "none".into(),
        }),
        "theta" => Value::Real(theta),
        "tau" => Value::Real(spec.tau),
        "yes" | "no" | "present" | "absent" | "same" | "different" | "unknown" => {
            Value::Str(formal.to_string())
        }
        _ => return None,
    })
}

pub fn select_cp(library: &Library, spec: &TaskSpec) -> Result<BoundCp, ExecutiveError> {
    select_cp_with(library, spec, spec.theta)
}

pub fn select_cp_with(library: &Library, spec: &TaskSpec, theta: f64) -> Result<BoundCp, ExecutiveError> {
    let name = match &spec.cp {
        Some(n) => n.clone(),
        None => default_cp_name(&spec.node())
            .ok_or_else(|| ExecutiveError::NoCp(spec.name.clone()))?
            .to_string(),
    };
    let program = library
        .programs
        .get(&name)
        .ok_or_else(|| ExecutiveError::NoCp(spec.name.clone()))?
        .clone();
    let args = program
        .params
        .iter()
        .map(|f| {
            bind(f, spec, theta).ok_or_else(|| ExecutiveError::Library {
                name: name.clone(),
                message: format!("cannot bind parameter `{f}`"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundCp { name, program, args })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    Continue,
    Success(String),
    Failure(Failure),
}

/// Judges a run. `outcome` is `None` while the program is still executing.
///
/// A response naming something held in working memory claims a match, so it
/// only counts when the last comparison came out `same`.
pub fn monitor(rt: &CpRuntime<'_>, outcome: Option<&crate::cp::CpOutcome>) -> Verdict {
    let t_c = rt.trace.t_c;
    if rt.clock > t_c {
        return Verdict::Failure(Failure::Deadline { clock: rt.clock, t_c });
    }
    let Some(outcome) = outcome else {
        return Verdict::Continue;
    };
    if let Some(f) = &outcome.failure {
        return Verdict::Failure(f.clone());
    }
    match &rt.response {
        None => Verdict::Failure(Failure::Exhausted),
        Some(r) => {
            let claims_match = rt.wm.recall(r).is_some();
            if claims_match && rt.last_match.is_none_or(|m| m.decision != Decision::Same) {
                Verdict::Failure(Failure::Degenerate {
                    reason: format!("response `{r}` without a matching comparison"),
                })
            } else {
                Verdict::Success(r.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Repair {
    Retry {
        cp: BoundCp,
        theta: f64,
        /// Clear IOR and visited places before re-running.
        rescan: bool,
    },
    GiveUp,
}

pub const MAX_REPAIRS: u32 = 3;

/// Deterministic escalation: relax theta, then rescan with memory of visited
/// places cleared, then give up. `attempt` counts from 1.
pub fn repair(library: &Library, spec: &TaskSpec, failure: &Failure, attempt: u32) -> Repair {
    if attempt > MAX_REPAIRS || matches!(failure, Failure::Deadline { .. } | Failure::BadArgument { .. }) {
        return Repair::GiveUp;
    }
    let (drop, rescan) = match failure {
        Failure::Exhausted => (0.0, true),
        _ => match attempt {
            1 => (0.1, false),
            2 => (0.2, true),
            _ => (0.3, true),
        },
    };
    let theta = (spec.theta - drop).max(0.5);
    match select_cp_with(library, spec, theta) {
        Ok(cp) => Repair::Retry { cp, theta, rescan },
        Err(_) => Repair::GiveUp,
    }
}

/// Sum of deviations up to each signal time, in order.
pub fn objective_trajectory(deviations: &[Deviation]) -> Vec<(u64, f64)> {
    let mut acc = 0.0;
    deviations
        .iter()
        .map(|d| {
            acc += d.value;
            (d.t, acc)
        })
        .collect()
}

/// Type I signals must stay inside the task window.
pub fn type_one_bracketed(trace: &SignalTrace) -> bool {
    trace
        .signals
        .iter()
        .filter(|s| s.kind == crate::cp::registry::SignalKind::TypeI)
        .all(|s| s.t_on >= trace.t_i && s.t_off <= trace.t_c)
}
