//! One trial end to end: generate, select a program, execute, monitor, repair.

use std::ops::Range;

use serde::Serialize;

use super::generate::{gen_trial, GroundTruth};
use super::HarnessError;
use crate::cp::{execute_cp, ControlSignal, CpRuntime, Failure, Fixation, RuntimeConfig, SignalTrace};
use crate::executive::{
    monitor, objective_trajectory, repair, select_cp, Library, Problem, Repair, TaskSpec, Verdict,
};
use crate::hierarchy::Hierarchy;
use crate::oracle::csv_field;
use crate::stimulus::Stimulus;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub task: String,
    pub cp: String,
    pub seed: u64,
    pub trial: u64,
    pub success: bool,
    pub failure: Option<Failure>,
    pub response: Option<String>,
    pub correct: bool,
    /// Stimulus onset to response, or to the end of the run without one.
    pub cycles: u64,
    pub total_cycles: u64,
    pub fixations: usize,
    pub restarts: u32,
    pub repairs: u32,
    pub objective: Vec<(u64, f64)>,
    pub truth: GroundTruth,
    #[serde(skip)]
    pub trace: SignalTrace,
    #[serde(skip)]
    pub fixation_log: Vec<Fixation>,
    /// Signal index range of each program execution.
    #[serde(skip)]
    pub executions: Vec<Range<usize>>,
}

impl TrialResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trial results serialise")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "task,cp,seed,trial,success,failure,response,correct,cycles,total_cycles,fixations,restarts,repairs\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&self.task),
            csv_field(&self.cp),
            self.seed,
            self.trial,
            self.success,
            self.failure.as_ref().map(|f| f.label()).unwrap_or(""),
            csv_field(self.response.as_deref().unwrap_or("")),
            self.correct,
            self.cycles,
            self.total_cycles,
            self.fixations,
            self.restarts,
            self.repairs,
        )
    }

    pub fn to_text(&self) -> String {
        let outcome = match &self.failure {
            None => "success".to_string(),
            Some(f) => format!("failure ({f})"),
        };
        format!(
            "{} via {} (seed {}, trial {}): {}\n  response  {}  (expected {}, {})\n  cycles    {} from onset, {} total\n  fixations {}  restarts {}  repairs {}\n",
            self.task,
            self.cp,
            self.seed,
            self.trial,
            outcome,
            self.response.as_deref().unwrap_or("-"),
            self.truth.correct_response,
            if self.correct { "correct" } else { "wrong" },
            self.cycles,
            self.total_cycles,
            self.fixations,
            self.restarts,
            self.repairs,
        )
    }

    pub fn execution_signals(&self, i: usize) -> &[ControlSignal] {
        &self.trace.signals[self.executions[i].clone()]
    }
}

fn parse_point(s: &str) -> Option<(f64, f64)> {
    let (x, y) = s.split_once(':')?;
    Some((x.parse().ok()?, y.parse().ok()?))
}

pub fn is_correct(spec: &TaskSpec, truth: &GroundTruth, response: Option<&str>) -> bool {
    let Some(r) = response else { return false };
    match spec.problem {
        Problem::Localization | Problem::GazeShift => match (truth.target_item(), parse_point(r)) {
            (Some(item), Some((x, y))) => item.near(x, y),
            _ => false,
        },
        _ => r == truth.correct_response,
    }
}

pub fn base_config(spec: &TaskSpec, base: &RuntimeConfig) -> RuntimeConfig {
    let mut cfg = base.clone();
    cfg.wta.theta = spec.theta;
    cfg.match_tolerance = spec.tau;
    cfg
}

/// Runs one trial on a freshly generated stimulus.
pub fn run_trial(
    library: &Library,
    spec: &TaskSpec,
    h: &Hierarchy,
    config: &RuntimeConfig,
    seed: u64,
    trial: u64,
) -> Result<TrialResult, HarnessError> {
    let (stim, truth) = gen_trial(spec, h, config.fixation.fovea_radius, seed, trial)?;
    run_trial_on(library, spec, h, config, stim, truth, seed, trial)
}

#[allow(clippy::too_many_arguments)]
pub fn run_trial_on(
    library: &Library,
    spec: &TaskSpec,
    h: &Hierarchy,
    config: &RuntimeConfig,
    stim: Stimulus,
    truth: GroundTruth,
    seed: u64,
    trial: u64,
) -> Result<TrialResult, HarnessError> {
    let mut cp = select_cp(library, spec)?;
    let cp_name = cp.name.clone();
    let (t_i, t_c) = spec.window(h.config().cycle_ms);
    let mut rt = CpRuntime::new(h, stim, base_config(spec, config), t_i, t_c);
    let mut executions = Vec::new();
    let mut repairs = 0;
    let verdict = loop {
        let start = rt.trace.signals.len();
        let outcome = execute_cp(&cp.program, &mut rt, &cp.args);
        executions.push(start..rt.trace.signals.len());
        match monitor(&rt, Some(&outcome)) {
            Verdict::Failure(f) => match repair(library, spec, &f, repairs + 1) {
                Repair::Retry { cp: next, theta, rescan } => {
                    repairs += 1;
                    rt.reset_for_retry();
                    rt.config.wta.theta = theta;
                    if rescan {
                        rt.clear_search_memory();
                    }
                    cp = next;
                }
                Repair::GiveUp => break Verdict::Failure(f),
            },
            v => break v,
        }
    };
    let (success, failure) = match verdict {
        Verdict::Failure(f) => (false, Some(f)),
        _ => (true, None),
    };
    let response = if success { rt.response.clone() } else { None };
    let cycles = rt
        .response_cycles()
        .filter(|_| success)
        .unwrap_or_else(|| rt.clock - rt.onset.unwrap_or(t_i));
    Ok(TrialResult {
        task: spec.name.clone(),
        cp: cp_name,
        seed,
        trial,
        success,
        correct: success && is_correct(spec, &truth, response.as_deref()),
        failure,
        response,
        cycles,
        total_cycles: rt.clock - t_i,
        fixations: rt.fixations.len(),
        restarts: rt.restarts,
        repairs,
        objective: objective_trajectory(&rt.deviations),
        truth,
        trace: rt.trace,
        fixation_log: rt.fixations,
        executions,
    })
}

/// A single execution of the task's program on a generated display, with no
/// monitoring or repair. The trace carries each primitive's charged cost.
pub fn dry_run(
    library: &Library,
    spec: &TaskSpec,
    h: &Hierarchy,
    config: &RuntimeConfig,
    seed: u64,
    trial: u64,
) -> Result<SignalTrace, HarnessError> {
    let (stim, _) = gen_trial(spec, h, config.fixation.fovea_radius, seed, trial)?;
    let cp = select_cp(library, spec)?;
    let (t_i, t_c) = spec.window(h.config().cycle_ms);
    let mut rt = CpRuntime::new(h, stim, base_config(spec, config), t_i, t_c);
    execute_cp(&cp.program, &mut rt, &cp.args);
    Ok(rt.trace)
}

pub fn fixations_csv(fixations: &[Fixation]) -> String {
    let mut s = String::from("index,t,x,y\n");
    for (i, f) in fixations.iter().enumerate() {
        s.push_str(&format!("{},{},{},{}\n", i, f.t, f.x, f.y));
    }
    s
}
