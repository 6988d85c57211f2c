//! Top-down branch-and-bound localization of the attended item.
//!
//! A central focus of attention (cFOA) is picked at the top layer. The descent
//! then walks `L -> 1`: at each layer it keeps the inputs of the current pass
//! zone that respond within `theta` of their parent's strongest input, zeroes
//! the gains of the losers and of the winners' normalization neighbourhood,
//! and re-samples the pass-zone responses. A pass-zone response that drops by
//! more than `epsilon` means the hypothesis was wrong: the cFOA is inhibited
//! and the search restarts on the next candidate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{GainField, Hierarchy, LayerState, Unit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttentionError {
    #[error("no candidate for selection")]
    NoCandidate,
    #[error("localization failed after {restarts} restarts")]
    LocalizationFailed {
        restarts: u32,
        violations: Vec<Violation>,
        cycles: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WtaParams {
    pub theta: f64,
    pub epsilon: f64,
    pub max_restarts: u32,
    /// Noise constant `N` of `S / (I + N)`.
    pub noise: f64,
}

impl Default for WtaParams {
    fn default() -> Self {
        WtaParams {
            theta: 0.95,
            epsilon: 1e-9,
            max_restarts: 3,
            noise: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescentMode {
    Full,
    /// Stops at layer `ceil(L / 2)`.
    Partial,
}

impl DescentMode {
    pub fn stop_layer(self, layer_count: usize) -> usize {
        match self {
            DescentMode::Full => 1,
            DescentMode::Partial => layer_count.div_ceil(2),
        }
    }

    /// Descent steps (one cycle each): the top step plus one per layer below.
    pub fn steps(self, layer_count: usize) -> u64 {
        (layer_count - self.stop_layer(layer_count) + 1) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocusOfAttention {
    pub top_unit: Unit,
    /// Indexed by `layer - 1`; empty below the layer the descent stopped at.
    pub pass_zone: Vec<BTreeSet<Unit>>,
    /// `(y, x)` stimulus cells.
    pub input_region: BTreeSet<(usize, usize)>,
}

impl FocusOfAttention {
    /// Mean `(x, y)` of the input region.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        if self.input_region.is_empty() {
            return None;
        }
        let n = self.input_region.len() as f64;
        let (sx, sy) = self
            .input_region
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(y, x)| (sx + x as f64, sy + y as f64));
        Some((sx / n, sy / n))
    }
}

/// Pass-zone response samples `(cycle, rho)` per layer (index `layer - 1`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonotoneHistory {
    pub layers: Vec<Vec<(u64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub layer: usize,
    /// Index of the offending sample within that layer's sequence.
    pub step: usize,
}

/// Checks `rho(t + 1) >= rho(t) - epsilon` for every layer. Reports the first
/// violation in `(layer descending, step ascending)` order.
pub fn check_monotone(history: &MonotoneHistory, epsilon: f64) -> Result<(), Violation> {
    for (i, samples) in history.layers.iter().enumerate().rev() {
        for (step, w) in samples.windows(2).enumerate() {
            if w[1].1 < w[0].1 - epsilon {
                return Err(Violation {
                    layer: i + 1,
                    step: step + 1,
                });
            }
        }
    }
    Ok(())
}

/// One descent attempt as recorded in a [`Localization`].
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub cfoa: Unit,
    pub violation: Option<Violation>,
}

#[derive(Debug, Clone)]
pub struct Localization {
    pub foa: FocusOfAttention,
    pub history: MonotoneHistory,
    pub attempts: Vec<Attempt>,
    /// Suppression gains after the successful descent.
    pub suppression: GainField,
    /// Responses under `base x suppression` after the descent.
    pub state: LayerState,
    /// Descent steps plus re-selections.
    pub cycles: u64,
}

impl Localization {
    pub fn restarts(&self) -> u32 {
        self.attempts.len() as u32 - 1
    }
}

/// Pre-localization suppression snapshot; [`disengage`] restores it.
#[derive(Debug, Clone, PartialEq)]
pub struct Engagement {
    pub pre_suppression: GainField,
    pub foa: FocusOfAttention,
}

/// Strongest top-layer unit among the allowed features, skipping inhibited
/// units and silent ones. Ties go to the canonically smallest unit.
pub fn select_cfoa(
    hierarchy: &Hierarchy,
    state: &LayerState,
    filter: Option<&[usize]>,
    inhibited: &BTreeSet<Unit>,
) -> Result<Unit, AttentionError> {
    let mut best: Option<(Unit, f64)> = None;
    for u in hierarchy.layer_units(hierarchy.top()) {
        if filter.is_some_and(|f| !f.contains(&u.feature)) || inhibited.contains(&u) {
            continue;
        }
        let r = hierarchy.response(state, u);
        if r <= 0.0 {
            continue;
        }
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((u, r));
        }
    }
    best.map(|(u, _)| u).ok_or(AttentionError::NoCandidate)
}

fn pass_sum(hierarchy: &Hierarchy, state: &LayerState, zone: &BTreeSet<Unit>) -> f64 {
    zone.iter().map(|&u| hierarchy.response(state, u)).sum()
}

struct Descent {
    pass_zone: Vec<BTreeSet<Unit>>,
    history: MonotoneHistory,
    suppression: GainField,
    state: LayerState,
    steps: u64,
    violation: Option<Violation>,
}

fn descend(
    hierarchy: &Hierarchy,
    state: &LayerState,
    base: &GainField,
    suppression: &GainField,
    cfoa: Unit,
    params: &WtaParams,
    mode: DescentMode,
) -> Descent {
    let l = hierarchy.layer_count();
    let stop = mode.stop_layer(l);
    let t0 = state.t;
    let mut supp = suppression.clone();
    let mut st = state.clone();
    hierarchy.recompute_from(&mut st, &base.product(&supp), 1);

    let mut pass_zone = vec![BTreeSet::new(); l];
    pass_zone[l - 1].insert(cfoa);
    let mut history = MonotoneHistory {
        layers: vec![Vec::new(); l],
    };
    history.layers[l - 1].push((t0, pass_sum(hierarchy, &st, &pass_zone[l - 1])));

    let mut steps = 0u64;
    let mut layer = l;
    loop {
        // Suppress at `layer`: the top step handles the cFOA's own surround,
        // lower steps prune the current pass zone's inputs first.
        if layer < l {
            let mut winners = BTreeSet::new();
            let mut candidates = BTreeSet::new();
            for &p in &pass_zone[layer] {
                let inputs = hierarchy.inputs_of(p);
                let m = inputs
                    .iter()
                    .map(|&(v, _)| hierarchy.response(&st, v))
                    .fold(0.0, f64::max);
                for (v, _) in inputs {
                    candidates.insert(v);
                    if hierarchy.response(&st, v) >= params.theta * m {
                        winners.insert(v);
                    }
                }
            }
            let shape = *hierarchy.shape(layer);
            for v in candidates.difference(&winners) {
                supp.set(*v, &shape, 0.0);
            }
            pass_zone[layer - 1] = winners;
        }
        let shape = *hierarchy.shape(layer);
        let zone = pass_zone[layer - 1].clone();
        for &w in &zone {
            for v in hierarchy.pool_of(w) {
                if !zone.contains(&v) {
                    supp.set(v, &shape, 0.0);
                }
            }
        }
        hierarchy.recompute_from(&mut st, &base.product(&supp), layer);
        steps += 1;
        for lam in layer..=l {
            let s = pass_sum(hierarchy, &st, &pass_zone[lam - 1]);
            history.layers[lam - 1].push((t0 + steps, s));
        }
        if let Err(v) = check_monotone(&history, params.epsilon) {
            return Descent {
                pass_zone,
                history,
                suppression: supp,
                state: st,
                steps,
                violation: Some(v),
            };
        }
        if layer == stop {
            break;
        }
        layer -= 1;
    }
    st.t = t0 + steps;
    Descent {
        pass_zone,
        history,
        suppression: supp,
        state: st,
        steps,
        violation: None,
    }
}

fn input_region(
    hierarchy: &Hierarchy,
    pass_zone: &[BTreeSet<Unit>],
    stop: usize,
) -> BTreeSet<(usize, usize)> {
    let mut region = BTreeSet::new();
    for &u in &pass_zone[stop - 1] {
        let (y0, y1, x0, x1) = hierarchy.footprint(u);
        for y in y0..=y1 {
            for x in x0..=x1 {
                region.insert((y, x));
            }
        }
    }
    region
}

/// Runs the descent from `cfoa`, restarting on monotonicity violations.
///
/// `base` holds gains the descent must not touch (priming, IOR); the returned
/// suppression field is combined with it multiplicatively. Failed cFOAs are
/// added to `inhibited` and stay there for the caller's trial.
#[allow(clippy::too_many_arguments)]
pub fn localize(
    hierarchy: &Hierarchy,
    state: &LayerState,
    base: &GainField,
    suppression: &GainField,
    cfoa: Unit,
    filter: Option<&[usize]>,
    inhibited: &mut BTreeSet<Unit>,
    params: &WtaParams,
    mode: DescentMode,
) -> Result<Localization, AttentionError> {
    let mut attempts = Vec::new();
    let mut violations = Vec::new();
    let mut cycles = 0u64;
    let mut current = cfoa;
    let mut st = state.clone();
    loop {
        let d = descend(hierarchy, &st, base, suppression, current, params, mode);
        cycles += d.steps;
        attempts.push(Attempt {
            cfoa: current,
            violation: d.violation,
        });
        match d.violation {
            None => {
                let stop = mode.stop_layer(hierarchy.layer_count());
                let foa = FocusOfAttention {
                    top_unit: current,
                    input_region: input_region(hierarchy, &d.pass_zone, stop),
                    pass_zone: d.pass_zone,
                };
                return Ok(Localization {
                    foa,
                    history: d.history,
                    attempts,
                    suppression: d.suppression,
                    state: d.state,
                    cycles,
                });
            }
            Some(v) => {
                violations.push(v);
                inhibited.insert(current);
                if violations.len() as u32 > params.max_restarts {
                    return Err(AttentionError::LocalizationFailed {
                        restarts: params.max_restarts,
                        violations,
                        cycles,
                    });
                }
                st.t += d.steps;
                current = select_cfoa(hierarchy, &st, filter, inhibited)?;
                st.t += 1;
                cycles += 1;
            }
        }
    }
}

/// `S / (I + N)` at `layer`, with `S` the pass zone's summed response and `I`
/// everything else at that layer.
pub fn compute_sinr(
    hierarchy: &Hierarchy,
    state: &LayerState,
    foa: &FocusOfAttention,
    layer: usize,
    noise: f64,
) -> f64 {
    let zone = &foa.pass_zone[layer - 1];
    let (mut s, mut i) = (0.0, 0.0);
    for u in hierarchy.layer_units(layer) {
        let r = hierarchy.response(state, u);
        if zone.contains(&u) {
            s += r;
        } else {
            i += r;
        }
    }
    s / (i + noise)
}

/// Lifts the suppression applied by the last localization. No-op without one.
pub fn disengage(suppression: &GainField, engagement: Option<&Engagement>) -> GainField {
    match engagement {
        Some(e) => e.pre_suppression.clone(),
        None => suppression.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{HierarchyConfig, LayerSpec};
    use crate::stimulus::Stimulus;

    fn two_layer(beta: f64) -> Hierarchy {
        Hierarchy::new(HierarchyConfig {
            input_width: 4,
            input_height: 4,
            channels: vec!["a".into()],
            layers: vec![LayerSpec::identity(vec!["a".into()], 2, 2, 1.0)],
            beta,
            pool_radius: 1,
            cycle_ms: 10.0,
        })
        .unwrap()
    }

    fn stim(cells: &[(usize, usize, f64)]) -> Stimulus {
        let mut s = Stimulus::zeros(4, 4, 1).unwrap();
        for &(y, x, v) in cells {
            s.set(0, y, x, v);
        }
        s
    }

    fn run(
        h: &Hierarchy,
        s: &Stimulus,
        params: &WtaParams,
    ) -> (LayerState, Result<Localization, AttentionError>) {
        let ones = h.unit_gain_ones();
        let st = h.feedforward(s, &ones).unwrap();
        let mut inhibited = BTreeSet::new();
        let cfoa = select_cfoa(h, &st, None, &inhibited).unwrap();
        let loc = localize(
            h,
            &st,
            &ones,
            &ones,
            cfoa,
            None,
            &mut inhibited,
            params,
            DescentMode::Full,
        );
        (st, loc)
    }

    #[test]
    fn select_max_and_tie_break() {
        let h = two_layer(0.0);
        let st = h
            .feedforward(&stim(&[(0, 0, 0.9), (2, 2, 0.3)]), &h.unit_gain_ones())
            .unwrap();
        let none = BTreeSet::new();
        assert_eq!(select_cfoa(&h, &st, None, &none), Ok(Unit::new(2, 0, 0, 0)));

        let st = h
            .feedforward(&stim(&[(0, 2, 0.9), (2, 0, 0.9)]), &h.unit_gain_ones())
            .unwrap();
        assert_eq!(select_cfoa(&h, &st, None, &none), Ok(Unit::new(2, 0, 0, 1)));

        let mut inh = BTreeSet::new();
        inh.insert(Unit::new(2, 0, 0, 1));
        assert_eq!(select_cfoa(&h, &st, None, &inh), Ok(Unit::new(2, 0, 1, 0)));
        assert_eq!(select_cfoa(&h, &st, Some(&[1]), &none), Err(AttentionError::NoCandidate));
    }

    #[test]
    fn check_monotone_examples() {
        let h = |v: &[f64]| MonotoneHistory {
            layers: vec![v.iter().enumerate().map(|(i, &r)| (i as u64, r)).collect()],
        };
        assert_eq!(check_monotone(&h(&[0.5, 0.6, 0.6]), 0.0), Ok(()));
        assert_eq!(
            check_monotone(&h(&[0.5, 0.3]), 0.0),
            Err(Violation { layer: 1, step: 1 })
        );
        assert_eq!(check_monotone(&h(&[0.5, 0.499]), 0.01), Ok(()));
    }

    #[test]
    fn single_target_pass_zone_is_projection_cone() {
        let h = two_layer(0.1);
        let (_, loc) = run(&h, &stim(&[(1, 2, 1.0)]), &WtaParams::default());
        let loc = loc.unwrap();
        assert_eq!(loc.restarts(), 0);
        assert_eq!(loc.foa.top_unit, Unit::new(2, 0, 0, 1));
        // Silent inputs tie with nothing at 0.95 * 1.0, so only the lit cell stays.
        assert_eq!(
            loc.foa.pass_zone[0].iter().copied().collect::<Vec<_>>(),
            vec![Unit::new(1, 0, 1, 2)]
        );
        assert_eq!(loc.foa.input_region.iter().copied().collect::<Vec<_>>(), vec![(1, 2)]);
        assert_eq!(loc.cycles, 2);
    }

    #[test]
    fn distant_distractor_leaves_pass_zone_and_cfoa_rises() {
        // Hand computation: top units (0,0) drive 1.0 and (1,1) drive 0.8 share
        // a pool, so before = 1 / (1 + 0.1 * 0.8); after suppressing the top
        // surround the cFOA is un-normalized, 1.0.
        let h = two_layer(0.1);
        let (st, loc) = run(&h, &stim(&[(0, 0, 1.0), (3, 3, 0.8)]), &WtaParams::default());
        let loc = loc.unwrap();
        let cfoa = Unit::new(2, 0, 0, 0);
        assert_eq!(loc.foa.top_unit, cfoa);
        let before = h.response(&st, cfoa);
        let after = h.response(&loc.state, cfoa);
        assert!((before - 1.0 / 1.08).abs() < 1e-12);
        assert!((after - 1.0).abs() < 1e-12);
        assert!(!loc
            .foa
            .pass_zone
            .iter()
            .flatten()
            .any(|u| *u == Unit::new(1, 0, 3, 3) || *u == Unit::new(2, 0, 1, 1)));
        let sb = compute_sinr(&h, &st, &loc.foa, 2, 1.0);
        let sa = compute_sinr(&h, &loc.state, &loc.foa, 2, 1.0);
        assert!(sa >= sb);
    }

    #[test]
    fn context_coalition_forces_restart() {
        // Top (0,0) is driven by a coalition 1.0 + 3 * 0.6 = 2.8 and wins;
        // pruning the 0.6 inputs drops it to 1.0, a violation. The restart
        // picks the lone 1.0 target under top (1,1).
        let h = two_layer(0.1);
        let s = stim(&[(0, 0, 1.0), (0, 1, 0.6), (1, 0, 0.6), (1, 1, 0.6), (3, 3, 1.0)]);
        let (_, loc) = run(&h, &s, &WtaParams::default());
        let loc = loc.unwrap();
        assert_eq!(loc.restarts(), 1);
        assert_eq!(loc.attempts[0].cfoa, Unit::new(2, 0, 0, 0));
        assert_eq!(loc.attempts[0].violation, Some(Violation { layer: 2, step: 2 }));
        assert_eq!(loc.foa.top_unit, Unit::new(2, 0, 1, 1));
        // 2 steps + 1 re-selection + 2 steps
        assert_eq!(loc.cycles, 5);
    }

    #[test]
    fn exhausted_restarts_fail() {
        let h = two_layer(0.1);
        let s = stim(&[(0, 0, 1.0), (0, 1, 0.6), (1, 0, 0.6), (1, 1, 0.6)]);
        let params = WtaParams {
            max_restarts: 0,
            ..WtaParams::default()
        };
        let (_, loc) = run(&h, &s, &params);
        assert!(matches!(loc, Err(AttentionError::LocalizationFailed { restarts: 0, .. })));
    }

    #[test]
    fn partial_descent_stops_half_way() {
        let h = Hierarchy::new(HierarchyConfig::default()).unwrap();
        assert_eq!(DescentMode::Partial.stop_layer(5), 3);
        assert_eq!(DescentMode::Partial.steps(5), 3);
        assert_eq!(DescentMode::Full.steps(5), 5);
        let mut s = Stimulus::zeros(16, 16, 2).unwrap();
        s.set(0, 4, 4, 1.0);
        s.set(0, 5, 5, 1.0);
        let ones = h.unit_gain_ones();
        let st = h.feedforward(&s, &ones).unwrap();
        let mut inh = BTreeSet::new();
        let c = select_cfoa(&h, &st, None, &inh).unwrap();
        let loc = localize(
            &h,
            &st,
            &ones,
            &ones,
            c,
            None,
            &mut inh,
            &WtaParams::default(),
            DescentMode::Partial,
        )
        .unwrap();
        assert!(loc.foa.pass_zone[0].is_empty() && loc.foa.pass_zone[1].is_empty());
        assert!(!loc.foa.pass_zone[2].is_empty());
        assert_eq!(loc.cycles, 3);
        assert!(loc.foa.input_region.contains(&(4, 4)));
    }

    #[test]
    fn sinr_examples() {
        let h = two_layer(0.0);
        let st = h.feedforward(&stim(&[(0, 0, 1.0), (0, 1, 1.0)]), &h.unit_gain_ones()).unwrap();
        let mut pz = vec![BTreeSet::new(), BTreeSet::new()];
        pz[1].insert(Unit::new(2, 0, 0, 0));
        let foa = FocusOfAttention {
            top_unit: Unit::new(2, 0, 0, 0),
            pass_zone: pz,
            input_region: BTreeSet::new(),
        };
        assert_eq!(compute_sinr(&h, &st, &foa, 2, 1.0), 2.0);
        let zero = h.feedforward(&stim(&[]), &h.unit_gain_ones()).unwrap();
        assert_eq!(compute_sinr(&h, &zero, &foa, 2, 1.0), 0.0);
    }

    #[test]
    fn disengage_restores_and_is_idempotent() {
        let h = two_layer(0.1);
        let ones = h.unit_gain_ones();
        let (_, loc) = run(&h, &stim(&[(0, 0, 1.0), (3, 3, 0.5)]), &WtaParams::default());
        let loc = loc.unwrap();
        assert!(!loc.suppression.is_all_ones());
        let e = Engagement {
            pre_suppression: ones.clone(),
            foa: loc.foa.clone(),
        };
        let once = disengage(&loc.suppression, Some(&e));
        assert_eq!(once, ones);
        assert_eq!(disengage(&once, Some(&e)), ones);
        assert_eq!(disengage(&ones, None), ones);
    }
}
