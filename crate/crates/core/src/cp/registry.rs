//! The fixed primitive set: arity, nominal cost, signal type, and the runtime
//! state each primitive touches.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignalKind {
    /// Drives a controlled variable toward a reference value.
    TypeI,
    /// Starts or stops a process.
    TypeII,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::TypeI => "I",
            SignalKind::TypeII => "II",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cost {
    Fixed(u64),
    /// One cycle per hierarchy layer.
    Layers,
    /// `L` for `full`, `ceil(L/2)` for `partial`.
    Localize,
    /// `ceil(k / rho)` at the attended unit.
    Decision,
    Saccade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Resource {
    PrimingGains,
    SuppressionGains,
    Responses,
    Attention,
    Focus,
    Gaze,
    Ior,
    Memory,
    Response,
    Motor,
    Params,
}

#[derive(Debug, Clone, Copy)]
pub struct Primitive {
    pub name: &'static str,
    pub arity: usize,
    pub cost: Cost,
    pub kind: SignalKind,
    /// Usable as a condition.
    pub boolean: bool,
    pub touches: &'static [Resource],
}

use Resource::*;

const fn p(
    name: &'static str,
    arity: usize,
    cost: Cost,
    kind: SignalKind,
    boolean: bool,
    touches: &'static [Resource],
) -> Primitive {
    Primitive {
        name,
        arity,
        cost,
        kind,
        boolean,
        touches,
    }
}

pub const PRIMITIVES: &[Primitive] = &[
    p("prime", 1, Cost::Layers, SignalKind::TypeI, false, &[PrimingGains]),
    p("disengage", 0, Cost::Fixed(1), SignalKind::TypeII, false, &[SuppressionGains]),
    p("engage", 1, Cost::Fixed(1), SignalKind::TypeII, false, &[Focus]),
    p("feedforward", 0, Cost::Layers, SignalKind::TypeII, false, &[Responses, Ior]),
    p("select_cfoa", 1, Cost::Fixed(1), SignalKind::TypeII, true, &[Attention, Responses]),
    p(
        "localize",
        1,
        Cost::Localize,
        SignalKind::TypeII,
        true,
        &[Attention, Responses, SuppressionGains],
    ),
    p("match", 1, Cost::Decision, SignalKind::TypeI, true, &[Memory, Attention]),
    p("store", 1, Cost::Fixed(1), SignalKind::TypeII, false, &[Memory, Attention]),
    p("recall", 1, Cost::Fixed(1), SignalKind::TypeII, true, &[Memory]),
    p("saccade", 1, Cost::Saccade, SignalKind::TypeI, false, &[Gaze, Attention]),
    p("mark_ior", 1, Cost::Fixed(0), SignalKind::TypeII, false, &[Ior, Attention]),
    p("next_fixation", 0, Cost::Fixed(1), SignalKind::TypeII, true, &[Attention, Ior]),
    p("emit", 1, Cost::Fixed(1), SignalKind::TypeII, false, &[Response]),
    p("press", 1, Cost::Fixed(1), SignalKind::TypeII, false, &[Motor]),
    p("release", 1, Cost::Fixed(1), SignalKind::TypeII, false, &[Motor]),
    p("detect", 1, Cost::Fixed(1), SignalKind::TypeII, true, &[Responses]),
    p("relation", 3, Cost::Fixed(1), SignalKind::TypeII, true, &[Responses]),
    p("set_param", 2, Cost::Fixed(0), SignalKind::TypeI, false, &[Params]),
];

pub fn lookup(name: &str) -> Option<&'static Primitive> {
    PRIMITIVES.iter().find(|p| p.name == name)
}

impl Primitive {
    /// Smallest number of cycles one call can take, for any hierarchy with at
    /// least two layers.
    pub fn min_cost(&self) -> u64 {
        match self.cost {
            Cost::Fixed(n) => n,
            Cost::Layers | Cost::Localize | Cost::Decision => 1,
            Cost::Saccade => 0,
        }
    }
}
