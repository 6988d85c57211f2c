//! Executes a validated program against a runtime over simulated time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::ast::{Block, Call, Cond, Program, Stmt, Value};
use super::registry::{lookup, SignalKind};
use super::trace::{ControlSignal, SignalTrace};
use crate::executive::{l2, Deviation, Measure};
use crate::fixation::{
    foveate, plan_saccade, select_next_fixation, FixationParams, GazeState, IorMap,
};
use crate::hierarchy::{GainField, Hierarchy, LayerState, Unit};
use crate::selective_tuning::{
    self, AttentionError, DescentMode, Engagement, FocusOfAttention, WtaParams,
};
use crate::stimulus::Stimulus;
use crate::wm::{compare, Decision, MatchResult, WmStore};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Failure {
    Deadline { clock: u64, t_c: u64 },
    NoCandidate,
    Localization { restarts: u32 },
    Degenerate { reason: String },
    /// A search ran out of places to look without answering.
    Exhausted,
    BadArgument { message: String },
}

impl Failure {
    /// Failures that read as "false" when a primitive is used as a condition.
    pub fn is_soft(&self) -> bool {
        matches!(
            self,
            Failure::NoCandidate | Failure::Localization { .. } | Failure::Degenerate { .. }
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            Failure::Deadline { .. } => "deadline",
            Failure::NoCandidate => "no_candidate",
            Failure::Localization { .. } => "localization",
            Failure::Degenerate { .. } => "degenerate",
            Failure::Exhausted => "exhausted",
            Failure::BadArgument { .. } => "bad_argument",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Deadline { clock, t_c } => write!(f, "deadline: clock {clock} would pass t_c {t_c}"),
            Failure::NoCandidate => f.write_str("no candidate"),
            Failure::Localization { restarts } => write!(f, "localization failed after {restarts} restarts"),
            Failure::Degenerate { reason } => write!(f, "degenerate percept: {reason}"),
            Failure::Exhausted => f.write_str("search exhausted"),
            Failure::BadArgument { message } => f.write_str(message),
        }
    }
}

/// `ceil(k / rho)`; `None` for a silent unit.
pub fn decision_cycles(rho: f64, k: f64) -> Option<u64> {
    if rho > 0.0 && rho.is_finite() {
        // guard against 1/0.25 landing a hair above 4
        let q = k / rho;
        let r = q.round();
        Some(if (q - r).abs() < 1e-9 { r } else { q.ceil() }.max(1.0) as u64)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeConfig {
    pub wta: WtaParams,
    pub fixation: FixationParams,
    /// Attenuation of a path irrelevant at every layer; each layer takes
    /// the `L`-th root.
    pub g_low: f64,
    pub match_tolerance: f64,
    pub decision_k: f64,
    pub wm_capacity: usize,
    pub detect_threshold: f64,
    /// Off for environments too small to need a retina.
    pub foveate: bool,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            wta: WtaParams::default(),
            fixation: FixationParams::default(),
            g_low: 0.2,
            match_tolerance: 0.1,
            decision_k: 1.0,
            wm_capacity: 7,
            detect_threshold: 0.02,
            foveate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Fixation {
    pub t: u64,
    pub x: usize,
    pub y: usize,
}

/// Everything a program can read or change during one trial.
#[derive(Debug, Clone)]
pub struct CpRuntime<'h> {
    pub hierarchy: &'h Hierarchy,
    pub config: RuntimeConfig,
    pub stimulus: Stimulus,
    pub templates: BTreeMap<String, Vec<f64>>,
    pub priming: GainField,
    pub suppression: GainField,
    pub engagement: Option<Engagement>,
    pub focus: Option<GazeState>,
    pub state: Option<LayerState>,
    pub retina: Option<Stimulus>,
    foveated_at: Option<GazeState>,
    pub gaze: GazeState,
    pub visited: Vec<GazeState>,
    pub ior: IorMap,
    ior_t: u64,
    pub inhibited: BTreeSet<Unit>,
    pub cfoa: Option<Unit>,
    pub foa: Option<FocusOfAttention>,
    pub percept: Option<Vec<f64>>,
    last_filter: Option<Vec<usize>>,
    next_target: Option<GazeState>,
    pub wm: WmStore,
    pub last_match: Option<MatchResult>,
    pub clock: u64,
    pub trace: SignalTrace,
    pub onset: Option<u64>,
    pub response: Option<String>,
    pub responded_at: Option<u64>,
    pub motor: BTreeMap<String, bool>,
    pub fixations: Vec<Fixation>,
    pub deviations: Vec<Deviation>,
    pub restarts: u32,
    pub localization_failures: u32,
}

impl<'h> CpRuntime<'h> {
    /// Gaze starts at the field centre; the trial runs over `[t_i, t_c]`.
    pub fn new(
        hierarchy: &'h Hierarchy,
        stimulus: Stimulus,
        config: RuntimeConfig,
        t_i: u64,
        t_c: u64,
    ) -> Self {
        let (w, h) = (stimulus.width(), stimulus.height());
        let top = hierarchy.top();
        let names = hierarchy.feature_names(top);
        let templates = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut v = vec![0.0; names.len()];
                v[i] = 1.0;
                (n.clone(), v)
            })
            .collect();
        CpRuntime {
            hierarchy,
            stimulus,
            templates,
            priming: hierarchy.unit_gain_ones(),
            suppression: hierarchy.unit_gain_ones(),
            engagement: None,
            focus: None,
            state: None,
            retina: None,
            foveated_at: None,
            gaze: GazeState { x: w / 2, y: h / 2 },
            visited: Vec::new(),
            ior: IorMap::new(w, h, config.fixation.ior_decay),
            ior_t: t_i,
            inhibited: BTreeSet::new(),
            cfoa: None,
            foa: None,
            percept: None,
            last_filter: None,
            next_target: None,
            wm: WmStore::new(config.wm_capacity),
            last_match: None,
            clock: t_i,
            trace: SignalTrace {
                signals: Vec::new(),
                t_i,
                t_c,
            },
            onset: None,
            response: None,
            responded_at: None,
            motor: BTreeMap::new(),
            fixations: Vec::new(),
            deviations: Vec::new(),
            restarts: 0,
            localization_failures: 0,
            config,
        }
    }

    /// Cycles from stimulus onset to the response, if both happened.
    pub fn response_cycles(&self) -> Option<u64> {
        Some(self.responded_at? - self.onset?)
    }

    /// Forgets where the program has looked: IOR, visited gazes, inhibited
    /// units. Used by the rescan repair.
    pub fn clear_search_memory(&mut self) {
        self.ior.clear();
        self.visited.clear();
        self.inhibited.clear();
    }

    /// Drops attentional state between repair attempts. The clock, trace and
    /// working memory carry over.
    pub fn reset_for_retry(&mut self) {
        self.priming = self.hierarchy.unit_gain_ones();
        self.suppression = self.hierarchy.unit_gain_ones();
        self.engagement = None;
        self.focus = None;
        self.cfoa = None;
        self.foa = None;
        self.percept = None;
        self.last_filter = None;
        self.next_target = None;
        self.last_match = None;
        self.response = None;
        self.responded_at = None;
    }

    fn top_vector(&self, state: &LayerState, u: Unit) -> Vec<f64> {
        let top = self.hierarchy.top();
        (0..self.hierarchy.shape(top).features)
            .map(|f| self.hierarchy.response(state, Unit::new(top, f, u.y, u.x)))
            .collect()
    }

    fn template_features(&self, name: &str) -> Result<Vec<usize>, Failure> {
        let t = self.templates.get(name).ok_or_else(|| Failure::BadArgument {
            message: format!("unknown template `{name}`"),
        })?;
        Ok(t.iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect())
    }

    fn sync_ior(&mut self) {
        if self.clock > self.ior_t {
            self.ior.decay_by(self.clock - self.ior_t);
            self.ior_t = self.clock;
        }
    }

    /// Priming with inhibition of return folded into the input layer.
    fn base_gains(&mut self) -> GainField {
        self.sync_ior();
        let mut g = self.priming.clone();
        let s = *self.hierarchy.shape(1);
        for f in 0..s.features {
            for y in 0..s.height {
                for x in 0..s.width {
                    let u = Unit::new(1, f, y, x);
                    let v = g.get(u, &s) * (1.0 - self.ior.get(x, y));
                    g.set(u, &s, v);
                }
            }
        }
        g
    }

    fn charge(
        &mut self,
        name: &str,
        kind: SignalKind,
        cost: u64,
        params: Vec<String>,
    ) -> Result<(), Failure> {
        let t_c = self.trace.t_c;
        if self.clock + cost > t_c {
            return Err(Failure::Deadline {
                clock: self.clock + cost,
                t_c,
            });
        }
        self.trace.signals.push(ControlSignal {
            name: name.to_string(),
            kind,
            t_on: self.clock,
            t_off: self.clock + cost,
            params,
        });
        self.clock += cost;
        Ok(())
    }

    fn deviation(&mut self, signal: &str, reference: String, observed: String, measure: Measure, value: f64) {
        let index = self.deviations.len();
        self.deviations.push(Deviation {
            index,
            t: self.clock,
            signal: signal.to_string(),
            reference,
            observed,
            measure,
            value,
        });
    }
}

fn bad(message: impl Into<String>) -> Failure {
    Failure::BadArgument {
        message: message.into(),
    }
}

fn text(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Real(r) => r.to_string(),
        Value::Str(s) | Value::Ident(s) => s.clone(),
    }
}

fn number(v: &Value) -> Result<f64, Failure> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Real(r) => Ok(*r),
        Value::Str(s) | Value::Ident(s) => s
            .parse()
            .map_err(|_| bad(format!("expected a number, got `{s}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpOutcome {
    pub failure: Option<Failure>,
    pub response: Option<String>,
    pub clock: u64,
    /// Onset to response.
    pub cycles: Option<u64>,
}

/// Runs `program` with `args` bound to its formals. Primitive failures come
/// back in the outcome; nothing panics on bad stimuli.
pub fn execute_cp(program: &Program, runtime: &mut CpRuntime<'_>, args: &[Value]) -> CpOutcome {
    let failure = if args.len() != program.params.len() {
        Some(bad(format!(
            "`{}` takes {} argument(s), got {}",
            program.name,
            program.params.len(),
            args.len()
        )))
    } else {
        let bindings: BTreeMap<String, Value> = program
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        Interp { rt: runtime, bindings }.block(&program.body).err()
    };
    CpOutcome {
        failure,
        response: runtime.response.clone(),
        clock: runtime.clock,
        cycles: runtime.response_cycles(),
    }
}

struct Interp<'a, 'h> {
    rt: &'a mut CpRuntime<'h>,
    bindings: BTreeMap<String, Value>,
}

impl Interp<'_, '_> {
    fn resolve(&self, v: &Value) -> Value {
        match v {
            Value::Ident(id) => self.bindings.get(id).cloned().unwrap_or_else(|| v.clone()),
            v => v.clone(),
        }
    }

    fn block(&mut self, b: &Block) -> Result<(), Failure> {
        for s in b {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), Failure> {
        match s {
            Stmt::Call(c) => self.call(c).map(|_| ()),
            Stmt::Wait(n) => self
                .rt
                .charge("wait", SignalKind::TypeII, *n, vec![format!("n={n}")]),
            Stmt::If { cond, then, otherwise } => {
                if self.cond(cond)? {
                    self.block(then)
                } else if let Some(o) = otherwise {
                    self.block(o)
                } else {
                    Ok(())
                }
            }
            Stmt::While { cond, body, .. } => {
                while self.cond(cond)? {
                    self.block(body)?;
                }
                Ok(())
            }
            Stmt::Par(a, b) => {
                let t0 = self.rt.clock;
                self.block(a)?;
                let ta = self.rt.clock;
                self.rt.clock = t0;
                self.block(b)?;
                self.rt.clock = self.rt.clock.max(ta);
                Ok(())
            }
        }
    }

    fn cond(&mut self, c: &Cond) -> Result<bool, Failure> {
        match c {
            Cond::Lit(b) => Ok(*b),
            Cond::Not(inner) => Ok(!self.cond(inner)?),
            Cond::And(ops) => {
                for op in ops {
                    if !self.cond(op)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Cond::Call(call) => match self.call(call) {
                Err(f) if f.is_soft() => Ok(false),
                r => r,
            },
        }
    }

    fn call(&mut self, c: &Call) -> Result<bool, Failure> {
        let prim = lookup(&c.name).ok_or_else(|| bad(format!("unknown primitive `{}`", c.name)))?;
        let args: Vec<Value> = c.args.iter().map(|a| self.resolve(a)).collect();
        if args.len() != prim.arity {
            return Err(bad(format!("`{}` arity mismatch", c.name)));
        }
        let rt = &mut *self.rt;
        let h = rt.hierarchy;
        let l = h.layer_count() as u64;
        match prim.name {
            "prime" => {
                let what = text(&args[0]);
                let target = match what.as_str() {
                    "none" => rt.priming.clone(),
                    "all" => h.unit_gain_ones(),
                    name => {
                        let feats = rt.template_features(name)?;
                        let names: Vec<&str> = feats
                            .iter()
                            .map(|&f| h.feature_names(h.top())[f].as_str())
                            .collect();
                        let mut rel = h.relevance_for_features(&names).map_err(|e| bad(e.to_string()))?;
                        if let Some(g) = rt.focus {
                            let s = h.shape(1);
                            let r = rt.config.fixation.parafovea_radius;
                            let mut mask = vec![false; s.width * s.height];
                            for y in 0..s.height {
                                for x in 0..s.width {
                                    mask[y * s.width + x] = l2((x as f64, y as f64), (g.x as f64, g.y as f64)) <= r;
                                }
                            }
                            rel.region = Some(mask);
                        }
                        h.apply_priming(&h.unit_gain_ones(), &rel, rt.config.g_low.powf(1.0 / l as f64))
                    }
                };
                let (mut diff, mut n) = (0.0, 0usize);
                for (a, b) in target.gains.iter().flatten().zip(rt.priming.gains.iter().flatten()) {
                    diff += (a - b).abs();
                    n += 1;
                }
                rt.charge("prime", prim.kind, l, vec![format!("ref={what}")])?;
                rt.deviation("prime", what, "gains".into(), Measure::Abs, diff / n.max(1) as f64);
                rt.priming = target;
                Ok(true)
            }
            "disengage" => {
                rt.charge("disengage", prim.kind, 1, vec![])?;
                rt.suppression = selective_tuning::disengage(&rt.suppression, rt.engagement.as_ref());
                rt.engagement = None;
                Ok(true)
            }
            "engage" => {
                let loc = text(&args[0]);
                let g = match loc.as_str() {
                    "gaze" => Some(rt.gaze),
                    "none" => None,
                    "foa" => {
                        let (x, y) = focus_point(rt).ok_or(Failure::NoCandidate)?;
                        Some(GazeState { x: x.round() as usize, y: y.round() as usize })
                    }
                    other => return Err(bad(format!("cannot engage `{other}`"))),
                };
                rt.charge("engage", prim.kind, 1, vec![format!("loc={loc}")])?;
                rt.focus = g;
                Ok(true)
            }
            "feedforward" => {
                if rt.onset.is_none() {
                    rt.charge("stimulus_onset", SignalKind::TypeII, 0, vec![])?;
                    rt.onset = Some(rt.clock);
                }
                let refoveate = rt.foveated_at != Some(rt.gaze);
                let params = vec![format!("gaze={}:{}", rt.gaze.x, rt.gaze.y)];
                let t0 = rt.clock;
                rt.charge("feedforward", prim.kind, l, params)?;
                if refoveate {
                    rt.retina = Some(if rt.config.foveate {
                        foveate(&rt.stimulus, rt.gaze, &rt.config.fixation)
                    } else {
                        rt.stimulus.clone()
                    });
                    rt.foveated_at = Some(rt.gaze);
                    rt.fixations.push(Fixation { t: t0, x: rt.gaze.x, y: rt.gaze.y });
                }
                let gains = rt.base_gains().product(&rt.suppression);
                let retina = rt.retina.as_ref().expect("set above");
                let state = h.feedforward_at(retina, &gains, t0).map_err(|e| bad(e.to_string()))?;
                // the attended location survives a new pass; its percept is refreshed
                if let Some(u) = rt.cfoa {
                    rt.percept = Some(rt.top_vector(&state, u));
                }
                rt.state = Some(state);
                Ok(true)
            }
            "select_cfoa" => {
                let what = text(&args[0]);
                let filter = if what == "any" { None } else { Some(rt.template_features(&what)?) };
                rt.charge("select_cfoa", prim.kind, 1, vec![format!("filter={what}")])?;
                let state = rt.state.as_ref().ok_or(Failure::NoCandidate)?;
                let mut excluded = rt.inhibited.clone();
                if let Some(g) = rt.focus {
                    // an engaged location narrows selection to units near it
                    let r = rt.config.fixation.fovea_radius;
                    for u in h.layer_units(h.top()) {
                        let (y0, y1, x0, x1) = h.footprint(u);
                        let dx = (x0 as f64 - g.x as f64).max(g.x as f64 - x1 as f64).max(0.0);
                        let dy = (y0 as f64 - g.y as f64).max(g.y as f64 - y1 as f64).max(0.0);
                        if dx.hypot(dy) > r {
                            excluded.insert(u);
                        }
                    }
                }
                let u = selective_tuning::select_cfoa(h, state, filter.as_deref(), &excluded)
                    .map_err(|_| Failure::NoCandidate)?;
                if h.response(state, u) < rt.config.detect_threshold {
                    return Err(Failure::NoCandidate);
                }
                rt.percept = Some(rt.top_vector(state, u));
                rt.cfoa = Some(u);
                rt.foa = None;
                rt.last_filter = filter;
                Ok(true)
            }
            "localize" => {
                let mode = match text(&args[0]).as_str() {
                    "full" => DescentMode::Full,
                    "partial" => DescentMode::Partial,
                    m => return Err(bad(format!("unknown localize mode `{m}`"))),
                };
                let (Some(state), Some(cfoa)) = (rt.state.clone(), rt.cfoa) else {
                    rt.charge("localize", prim.kind, mode.steps(h.layer_count()), vec![])?;
                    return Err(Failure::NoCandidate);
                };
                let base = rt.base_gains();
                let mut inhibited = rt.inhibited.clone();
                let result = selective_tuning::localize(
                    h,
                    &state,
                    &base,
                    &rt.suppression,
                    cfoa,
                    rt.last_filter.as_deref(),
                    &mut inhibited,
                    &rt.config.wta,
                    mode,
                );
                let mode_name = format!("mode={}", text(&args[0]));
                match result {
                    Ok(loc) => {
                        let restarts = loc.restarts();
                        rt.charge(
                            "localize",
                            prim.kind,
                            loc.cycles,
                            vec![mode_name, format!("restarts={restarts}")],
                        )?;
                        rt.inhibited = inhibited;
                        rt.restarts += restarts;
                        rt.engagement = Some(Engagement {
                            pre_suppression: rt.suppression.clone(),
                            foa: loc.foa.clone(),
                        });
                        rt.cfoa = Some(loc.foa.top_unit);
                        rt.percept = Some(rt.top_vector(&state, loc.foa.top_unit));
                        rt.suppression = loc.suppression;
                        rt.state = Some(loc.state);
                        rt.foa = Some(loc.foa);
                        Ok(true)
                    }
                    Err(AttentionError::LocalizationFailed { restarts, cycles, .. }) => {
                        rt.charge("localize", prim.kind, cycles, vec![mode_name, "failed".into()])?;
                        rt.inhibited = inhibited;
                        rt.restarts += restarts;
                        rt.localization_failures += 1;
                        Err(Failure::Localization { restarts })
                    }
                    Err(AttentionError::NoCandidate) => {
                        rt.charge("localize", prim.kind, mode.steps(h.layer_count()), vec![mode_name])?;
                        rt.inhibited = inhibited;
                        Err(Failure::NoCandidate)
                    }
                }
            }
            "match" => {
                let key = text(&args[0]);
                let rho = match (&rt.state, rt.cfoa) {
                    (Some(s), Some(u)) => h.response(s, u),
                    _ => 0.0,
                };
                let cost = decision_cycles(rho, rt.config.decision_k).unwrap_or(1);
                let stored = rt.wm.recall(&key).map(<[f64]>::to_vec);
                let result = match (&rt.percept, &stored) {
                    (Some(p), Some(s)) => Some(compare(p, s, rt.config.match_tolerance)),
                    _ => None,
                };
                let score = match &result {
                    Some(Ok(m)) => format!("{:.6}", m.score),
                    _ => "none".into(),
                };
                rt.charge("match", prim.kind, cost, vec![format!("ref={key}"), format!("cur={score}")])?;
                if rho <= 0.0 {
                    return Err(Failure::Degenerate { reason: "no attended unit".into() });
                }
                match result {
                    None => Ok(false),
                    Some(Err(e)) => Err(Failure::Degenerate { reason: e.to_string() }),
                    Some(Ok(m)) => {
                        rt.deviation("match", key, score, Measure::Cosine, 1.0 - m.score);
                        rt.last_match = Some(m);
                        Ok(m.decision == Decision::Same)
                    }
                }
            }
            "store" => {
                let key = text(&args[0]);
                rt.charge("store", prim.kind, 1, vec![format!("key={key}")])?;
                let repr = match rt.templates.get(&key) {
                    Some(t) => t.clone(),
                    None => rt.percept.clone().ok_or_else(|| Failure::Degenerate {
                        reason: format!("nothing to store under `{key}`"),
                    })?,
                };
                rt.wm
                    .store(&key, repr, rt.clock)
                    .map_err(|e| Failure::Degenerate { reason: e.to_string() })?;
                Ok(true)
            }
            "recall" => {
                let key = text(&args[0]);
                rt.charge("recall", prim.kind, 1, vec![format!("key={key}")])?;
                Ok(rt.wm.recall(&key).is_some())
            }
            "saccade" => {
                let what = text(&args[0]);
                let (w, hgt) = (rt.stimulus.width(), rt.stimulus.height());
                let target = match what.as_str() {
                    "foa" => focus_point(rt).ok_or(Failure::NoCandidate)?,
                    "next" => rt.next_target.map(|g| (g.x as f64, g.y as f64)).ok_or(Failure::NoCandidate)?,
                    "center" => ((w / 2) as f64, (hgt / 2) as f64),
                    other => return Err(bad(format!("unknown saccade target `{other}`"))),
                };
                let cmd = plan_saccade(rt.gaze, target, w, hgt, &rt.config.fixation)
                    .map_err(|e| bad(e.to_string()))?;
                let here = (rt.gaze.x as f64, rt.gaze.y as f64);
                let landing = crate::fixation::execute_saccade(rt.gaze, &cmd);
                let stay = vec![dev(l2(target, here))];
                let go = vec![dev(l2(target, (landing.x as f64, landing.y as f64)))];
                let moving = crate::executive::choose_control(&[stay, go]) == 1;
                let cost = if moving { cmd.duration } else { 0 };
                let reference = format!("{:.2}:{:.2}", target.0, target.1);
                let observed = format!("{}:{}", rt.gaze.x, rt.gaze.y);
                rt.charge(
                    "saccade",
                    prim.kind,
                    cost,
                    vec![format!("ref={reference}"), format!("cur={observed}")],
                )?;
                rt.deviation("saccade", reference, observed, Measure::L2, l2(target, here));
                if moving {
                    rt.visited.push(rt.gaze);
                    rt.gaze = landing;
                    // an eye movement ends covert engagement
                    rt.suppression = h.unit_gain_ones();
                    rt.engagement = None;
                    rt.focus = None;
                    rt.inhibited.clear();
                    rt.cfoa = None;
                    rt.foa = None;
                    rt.percept = None;
                    rt.last_filter = None;
                }
                Ok(true)
            }
            "mark_ior" => {
                let region = text(&args[0]);
                rt.charge("mark_ior", prim.kind, 0, vec![format!("region={region}")])?;
                rt.sync_ior();
                match region.as_str() {
                    "cfoa" => {
                        let u = rt.cfoa.ok_or(Failure::NoCandidate)?;
                        let (y0, y1, x0, x1) = h.footprint(u);
                        rt.ior.mark((y0..=y1).flat_map(|y| (x0..=x1).map(move |x| (y, x))));
                        rt.inhibited.insert(u);
                    }
                    "foa" => {
                        let foa = rt.foa.as_ref().ok_or(Failure::NoCandidate)?;
                        let cells: Vec<_> = foa.input_region.iter().copied().collect();
                        rt.ior.mark(cells);
                    }
                    "gaze" => {
                        let (g, r) = (rt.gaze, rt.config.fixation.fovea_radius);
                        rt.ior.mark_disc(g, r);
                        if !rt.visited.contains(&g) {
                            rt.visited.push(g);
                        }
                    }
                    other => return Err(bad(format!("unknown IOR region `{other}`"))),
                }
                Ok(true)
            }
            "next_fixation" => {
                rt.charge("next_fixation", prim.kind, 1, vec![])?;
                rt.sync_ior();
                let retina = rt.retina.as_ref().unwrap_or(&rt.stimulus);
                let (w, hgt) = (retina.width(), retina.height());
                let r = rt.config.fixation.fovea_radius;
                let mut consp = retina.channel_sum();
                for y in 0..hgt {
                    for x in 0..w {
                        let p = (x as f64, y as f64);
                        let seen = rt.visited.iter().chain([&rt.gaze]).any(|g| l2(p, (g.x as f64, g.y as f64)) <= r);
                        if seen {
                            consp[y * w + x] = 0.0;
                        }
                    }
                }
                match select_next_fixation(&consp, &rt.ior) {
                    Ok(g) => {
                        rt.next_target = Some(g);
                        Ok(true)
                    }
                    Err(_) => {
                        rt.next_target = None;
                        Ok(false)
                    }
                }
            }
            "emit" => {
                let mut r = text(&args[0]);
                if r == "@foa" {
                    let (x, y) = focus_point(rt).ok_or(Failure::NoCandidate)?;
                    r = format!("{}:{}", x.round(), y.round());
                } else if r == "@gaze" {
                    r = format!("{}:{}", rt.gaze.x, rt.gaze.y);
                }
                rt.charge("emit", prim.kind, 1, vec![format!("response={r}")])?;
                if rt.response.is_none() {
                    rt.response = Some(r);
                    rt.responded_at = Some(rt.clock);
                }
                Ok(true)
            }
            "press" | "release" => {
                let key = text(&args[0]);
                rt.charge(prim.name, prim.kind, 1, vec![format!("key={key}")])?;
                rt.motor.insert(key, prim.name == "press");
                Ok(true)
            }
            "detect" => {
                let class = text(&args[0]);
                let feats = rt.template_features(&class)?;
                rt.charge("detect", prim.kind, 1, vec![format!("class={class}")])?;
                Ok(!active_cells(rt, &feats).is_empty())
            }
            "relation" => {
                let (a, b, rel) = (text(&args[0]), text(&args[1]), text(&args[2]));
                let fa = rt.template_features(&a)?;
                let fb = rt.template_features(&b)?;
                rt.charge("relation", prim.kind, 1, vec![format!("a={a}"), format!("b={b}"), format!("rel={rel}")])?;
                let (ca, cb) = (active_cells(rt, &fa), active_cells(rt, &fb));
                let holds = |&(ya, xa): &(usize, usize), &(yb, xb): &(usize, usize)| -> Result<bool, Failure> {
                    let (dy, dx) = (ya as i64 - yb as i64, xa as i64 - xb as i64);
                    Ok(match rel.as_str() {
                        "adjacent" => dy.abs() <= 1 && dx.abs() <= 1,
                        "left_of" => dx < 0 && dy == 0,
                        "right_of" => dx > 0 && dy == 0,
                        "above" => dy < 0 && dx == 0,
                        "below" => dy > 0 && dx == 0,
                        "same" => dy == 0 && dx == 0,
                        other => return Err(bad(format!("unknown relation `{other}`"))),
                    })
                };
                for pa in &ca {
                    for pb in &cb {
                        if holds(pa, pb)? {
                            return Ok(true);
                        }
                    }
                }
                Ok(false)
            }
            "set_param" => {
                let name = text(&args[0]);
                let v = number(&args[1])?;
                let cfg = &mut rt.config;
                let slot: &mut f64 = match name.as_str() {
                    "theta" => &mut cfg.wta.theta,
                    "epsilon" => &mut cfg.wta.epsilon,
                    "tau" => &mut cfg.match_tolerance,
                    "g_low" => &mut cfg.g_low,
                    "k" => &mut cfg.decision_k,
                    "detect" => &mut cfg.detect_threshold,
                    other => return Err(bad(format!("unknown parameter `{other}`"))),
                };
                if !v.is_finite() || v < 0.0 {
                    return Err(bad(format!("parameter `{name}` must be a non-negative number")));
                }
                let old = *slot;
                *slot = v;
                rt.charge("set_param", prim.kind, 0, vec![format!("name={name}"), format!("ref={v}"), format!("cur={old}")])?;
                rt.deviation("set_param", v.to_string(), old.to_string(), Measure::Abs, (v - old).abs());
                Ok(true)
            }
            other => Err(bad(format!("primitive `{other}` has no implementation"))),
        }
    }
}

fn dev(value: f64) -> Deviation {
    Deviation {
        index: 0,
        t: 0,
        signal: "saccade".into(),
        reference: String::new(),
        observed: String::new(),
        measure: Measure::L2,
        value,
    }
}

/// Centre of the localized region, else of the attended unit's footprint.
fn focus_point(rt: &CpRuntime<'_>) -> Option<(f64, f64)> {
    if let Some(c) = rt.foa.as_ref().and_then(|f| f.centroid()) {
        return Some(c);
    }
    let (y0, y1, x0, x1) = rt.hierarchy.footprint(rt.cfoa?);
    Some(((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0))
}

/// Top-layer cells where any of `features` clears the detection threshold.
fn active_cells(rt: &CpRuntime<'_>, features: &[usize]) -> Vec<(usize, usize)> {
    let Some(state) = &rt.state else { return vec![] };
    let h = rt.hierarchy;
    let s = h.shape(h.top());
    let mut out = Vec::new();
    for y in 0..s.height {
        for x in 0..s.width {
            if features
                .iter()
                .any(|&f| h.response(state, Unit::new(h.top(), f, y, x)) >= rt.config.detect_threshold)
            {
                out.push((y, x));
            }
        }
    }
    out
}
