use std::path::Path;

use attend::cp::{load_cp, Failure, RuntimeConfig};
use attend::executive::{Library, TaskSpec};
use attend::harness::experiment::summarize;
use attend::harness::runner::{
    run_runner_episode, runner_comparison, Action, Cell, Policy, RunnerWorld, JUMP_LENGTH, LOOKAHEAD,
};
use attend::harness::{gen_trial, run_experiment, run_trial, ExperimentConfig, HarnessError};
use attend::hierarchy::{Hierarchy, HierarchyConfig};

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}

fn task(name: &str) -> TaskSpec {
    TaskSpec::from_toml(&std::fs::read_to_string(fixtures().join(format!("tasks/{name}.toml"))).unwrap()).unwrap()
}

fn h() -> Hierarchy {
    Hierarchy::new(HierarchyConfig::default()).unwrap()
}

#[test]
fn generated_trial_is_fixed_by_seed() {
    let h = h();
    let spec = task("localization");
    let (stim, truth) = gen_trial(&spec, &h, 3.0, 1, 0).unwrap();
    let t = truth.target_item().unwrap();
    assert_eq!((t.feature.as_str(), t.x, t.y), ("red_diag", 4, 12));
    assert_eq!(truth.items.len(), 4);
    // redraw the display from the ground truth by hand
    let mut cells = vec![0.0; 2 * 16 * 16];
    for it in &truth.items {
        let c = if it.feature.starts_with("red") { 0 } else { 1 };
        let pts = if it.feature.ends_with("diag") {
            [(it.y, it.x), (it.y + 1, it.x + 1)]
        } else {
            [(it.y, it.x + 1), (it.y + 1, it.x)]
        };
        for (y, x) in pts {
            cells[c * 256 + y * 16 + x] = it.intensity;
        }
    }
    assert_eq!(stim.values(), &cells[..]);
    // one item per top cell
    let mut tops: Vec<_> = truth.items.iter().map(|i| (i.y / 4, i.x / 4)).collect();
    tops.sort();
    tops.dedup();
    assert_eq!(tops.len(), 4);

    let again = gen_trial(&spec, &h, 3.0, 1, 0).unwrap();
    assert_eq!(again, (stim, truth));
    assert_ne!(gen_trial(&spec, &h, 3.0, 1, 1).unwrap().1, again.1);
}

#[test]
fn infeasible_displays_are_errors() {
    let h = h();
    let mut spec = task("localization");
    spec.stimulus.set_size = 0;
    assert!(matches!(gen_trial(&spec, &h, 3.0, 1, 0), Err(HarnessError::Infeasible(_))));
    spec.stimulus.set_size = 17;
    assert!(matches!(gen_trial(&spec, &h, 3.0, 1, 0), Err(HarnessError::Infeasible(_))));
    spec.stimulus.set_size = 5;
    spec.stimulus.foveal = true;
    assert!(matches!(gen_trial(&spec, &h, 3.0, 1, 0), Err(HarnessError::Infeasible(_))));
}

#[test]
fn foveal_items_stay_near_the_centre() {
    let h = h();
    let spec = task("discrimination");
    for trial in 0..20 {
        let (_, truth) = gen_trial(&spec, &h, 3.0, 7, trial).unwrap();
        for it in &truth.items {
            for (y, x) in it.cells() {
                assert!(((x as f64 - 8.0).powi(2) + (y as f64 - 8.0).powi(2)).sqrt() <= 3.0);
            }
        }
    }
}

#[test]
fn discrimination_trial_timing() {
    let h = h();
    let lib = Library::builtin();
    let spec = task("discrimination");
    for trial in 0..10 {
        let r = run_trial(&lib, &spec, &h, &RuntimeConfig::default(), 1, trial).unwrap();
        assert!(r.correct, "trial {trial}: {:?}", r.response);
        assert_eq!(r.repairs, 0);
        // feedforward, select, recall, match, emit
        let m = r.trace.signals.iter().find(|s| s.name == "match").unwrap();
        assert_eq!(r.cycles, 5 + 3 + m.duration(), "trial {trial}");
    }
}

#[test]
fn one_cycle_deadline_fails() {
    let h = h();
    let lib = Library::builtin();
    let mut spec = task("discrimination");
    spec.deadline_ms = 10.0;
    let r = run_trial(&lib, &spec, &h, &RuntimeConfig::default(), 1, 0).unwrap();
    assert!(!r.success);
    assert!(matches!(r.failure, Some(Failure::Deadline { t_c: 1, .. })));
    assert_eq!(r.repairs, 0);
}

#[test]
fn trials_are_deterministic() {
    let h = h();
    let lib = Library::builtin();
    for name in ["search_nlook", "same_different", "gazeshift"] {
        let spec = task(name);
        let a = run_trial(&lib, &spec, &h, &RuntimeConfig::default(), 3, 2).unwrap();
        let b = run_trial(&lib, &spec, &h, &RuntimeConfig::default(), 3, 2).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn saccade_free_one_look_search_and_saccading_n_look() {
    let h = h();
    let lib = Library::builtin();
    let one = run_trial(&lib, &task("search_1look"), &h, &RuntimeConfig::default(), 1, 0).unwrap();
    assert_eq!(one.trace.count("saccade"), 0);
    let n = run_trial(&lib, &task("search_nlook"), &h, &RuntimeConfig::default(), 1, 0).unwrap();
    assert!(n.trace.count("saccade") >= 1);
    assert_eq!(n.fixations, n.fixation_log.len());
}

#[test]
fn single_trial_experiment_reports_that_trial() {
    let h = h();
    let lib = Library::builtin();
    let mut cfg = ExperimentConfig::load(&fixtures().join("experiments/cueing.toml")).unwrap();
    cfg.trials = 1;
    cfg.conditions.truncate(1);
    let (report, trials) = run_experiment(&cfg, &lib, &h, &RuntimeConfig::default(), 5).unwrap();
    let single = run_trial(&lib, &cfg.conditions[0].spec, &h, &RuntimeConfig::default(), 5, 0).unwrap();
    assert_eq!(trials, vec![vec![single.clone()]]);
    let c = &report.conditions[0];
    assert_eq!(c.mean_cycles, single.cycles as f64);
    assert_eq!(c.sd_cycles, 0.0);
    assert_eq!(c.accuracy, if single.correct { 1.0 } else { 0.0 });
    assert_eq!(summarize("valid", &trials[0]), *c);
}

#[test]
fn empty_suite_is_an_error() {
    let h = h();
    let lib = Library::builtin();
    let mut cfg = ExperimentConfig::load(&fixtures().join("experiments/cueing.toml")).unwrap();
    cfg.conditions.clear();
    assert!(matches!(
        run_experiment(&cfg, &lib, &h, &RuntimeConfig::default(), 1),
        Err(HarnessError::EmptySuite)
    ));
}

#[test]
fn absent_search_slows_with_set_size() {
    let h = h();
    let lib = Library::builtin();
    let mut cfg = ExperimentConfig::load(&fixtures().join("experiments/search.toml")).unwrap();
    cfg.trials = 10;
    let (report, _) = run_experiment(&cfg, &lib, &h, &RuntimeConfig::default(), 1).unwrap();
    let m = |n: &str| report.condition(n).unwrap().mean_cycles;
    assert!(m("absent_2") < m("absent_4"));
    assert!(m("absent_4") < m("absent_8"));
    assert!(m("present_8") < m("absent_8"));
}

#[test]
fn runner_step_examples() {
    let mut w = RunnerWorld::flat(20);
    w.step(Action::None).unwrap();
    assert_eq!((w.score, w.alive, w.position), (1, true, 1));

    let mut gap = vec![Cell::Platform; 20];
    gap[1] = Cell::Gap;
    let mut w = RunnerWorld::new(gap.clone());
    w.step(Action::None).unwrap();
    assert!(!w.alive);
    assert_eq!(w.score, 0);
    assert!(matches!(w.step(Action::None), Err(HarnessError::Dead)));

    // a jump clears G hazard cells and lands on the next one
    let mut wide = vec![Cell::Platform; 20];
    for c in wide.iter_mut().skip(1).take(JUMP_LENGTH as usize) {
        *c = Cell::Obstacle;
    }
    let mut w = RunnerWorld::new(wide.clone());
    w.step(Action::Jump).unwrap();
    for _ in 1..JUMP_LENGTH {
        // pressing again mid-air does nothing
        w.step(Action::Jump).unwrap();
        assert!(w.alive);
    }
    w.step(Action::None).unwrap();
    assert!(w.alive);
    assert_eq!((w.position, w.score, w.airborne), (JUMP_LENGTH as usize + 1, JUMP_LENGTH as u64 + 1, 0));

    // one cell too wide is fatal
    wide[JUMP_LENGTH as usize + 1] = Cell::Gap;
    let mut w = RunnerWorld::new(wide);
    for _ in 0..=JUMP_LENGTH {
        w.step(Action::Jump).unwrap();
    }
    assert!(!w.alive);
}

#[test]
fn runner_episodes() {
    let p = load_cp(&std::fs::read_to_string(fixtures().join("cp/runner.cp")).unwrap()).unwrap();
    let h = attend::harness::runner::runner_hierarchy();
    assert_eq!(h.layer_count(), 2);
    assert_eq!(h.shape(h.top()).width, LOOKAHEAD + 1);

    let flat = run_runner_episode(RunnerWorld::flat(60), Policy::Program(&p, &h));
    assert!(flat.survived);
    assert_eq!(flat.frames, 60 - LOOKAHEAD - 1);
    assert!(flat.log.iter().all(|f| f.action == Action::None));

    for e in 0..10 {
        let world = RunnerWorld::generate(4, e, 150);
        let ep = run_runner_episode(world.clone(), Policy::Program(&p, &h));
        assert!(ep.survived, "episode {e}");
        assert_eq!(ep.score as usize, world.step_cap());
        // on the ground, jump exactly when a hazard is next; mid-air presses
        // over a hazard do nothing
        for f in &ep.log {
            if f.grounded {
                assert_eq!(f.action == Action::Jump, f.hazard_next, "{f:?}");
            }
        }
        assert_eq!(ep.traces.len(), ep.frames);
    }

    let r = runner_comparison(&p, 1, 20, 120);
    assert!(r.cp_mean > r.random_mean);
    assert_eq!(r.cp_scores.len(), 20);
    assert_eq!(r, runner_comparison(&p, 1, 20, 120));
}
