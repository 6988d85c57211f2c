//! A one-dimensional endless-runner world and the perceive-decide-act loop
//! that plays it.

use rand::Rng as _;
use serde::Serialize;

use super::HarnessError;
use crate::cp::{execute_cp, CpRuntime, Program, RuntimeConfig, SignalTrace};
use crate::hierarchy::{Hierarchy, HierarchyConfig, LayerSpec};
use crate::rng;
use crate::stimulus::Stimulus;

pub const JUMP_LENGTH: u32 = 4;
pub const LOOKAHEAD: usize = 10;
pub const FRAME_CYCLES: u64 = 2;
/// Per-frame deadline for the controlling program.
pub const FRAME_DEADLINE: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cell {
    Platform,
    Gap,
    Obstacle,
}

impl Cell {
    pub fn is_hazard(self) -> bool {
        self != Cell::Platform
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Action {
    None,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunnerWorld {
    pub track: Vec<Cell>,
    pub position: usize,
    /// Cells left before landing; zero when grounded.
    pub airborne: u32,
    pub alive: bool,
    pub score: u64,
}

impl RunnerWorld {
    pub fn new(track: Vec<Cell>) -> Self {
        RunnerWorld {
            track,
            position: 0,
            airborne: 0,
            alive: true,
            score: 0,
        }
    }

    /// A track starting and ending on platform, hazards `1..=G` wide with at
    /// least `G + 1` platform cells between them.
    pub fn generate(seed: u64, episode: u64, length: usize) -> Self {
        let mut rng = rng::stream(seed, episode);
        let g = JUMP_LENGTH as usize;
        let mut track = vec![Cell::Platform; (g + 2).min(length)];
        while track.len() < length {
            let width = rng.gen_range(1..=g);
            let kind = if rng.gen_bool(0.5) { Cell::Gap } else { Cell::Obstacle };
            let run = rng.gen_range(g + 1..=g + 6);
            track.extend(std::iter::repeat_n(kind, width));
            track.extend(std::iter::repeat_n(Cell::Platform, run));
        }
        track.truncate(length);
        RunnerWorld::new(track)
    }

    pub fn flat(length: usize) -> Self {
        RunnerWorld::new(vec![Cell::Platform; length])
    }

    pub fn cell(&self, i: usize) -> Cell {
        self.track.get(i).copied().unwrap_or(Cell::Platform)
    }

    /// Steps the episode can take while the whole lookahead stays on track.
    pub fn step_cap(&self) -> usize {
        self.track.len().saturating_sub(LOOKAHEAD + 1)
    }

    /// Scrolls one cell. A jump from the ground keeps the runner airborne
    /// over the next `G` cells; a grounded runner on a hazard dies.
    pub fn step(&mut self, action: Action) -> Result<(), HarnessError> {
        if !self.alive {
            return Err(HarnessError::Dead);
        }
        if action == Action::Jump && self.airborne == 0 {
            // counts the landing cell too
            self.airborne = JUMP_LENGTH + 1;
        }
        self.position += 1;
        if self.airborne > 0 {
            self.airborne -= 1;
        }
        if self.airborne == 0 && self.cell(self.position).is_hazard() {
            self.alive = false;
            return Ok(());
        }
        self.score += 1;
        Ok(())
    }

    /// Channels `runner`, `platform`, `hazard` over a 2-row strip: the runner
    /// in the top row at column 0, the ground below.
    pub fn render(&self) -> Stimulus {
        let w = LOOKAHEAD + 1;
        let mut s = Stimulus::zeros(w, 2, 3).expect("non-empty");
        s.set(0, 0, 0, 1.0);
        for dx in 0..w {
            let c = self.cell(self.position + dx);
            s.set(if c.is_hazard() { 2 } else { 1 }, 1, dx, 1.0);
        }
        s
    }
}

pub fn runner_hierarchy() -> Hierarchy {
    let names: Vec<String> = ["runner", "platform", "hazard"].iter().map(|s| s.to_string()).collect();
    Hierarchy::new(HierarchyConfig {
        input_width: LOOKAHEAD + 1,
        input_height: 2,
        channels: names.clone(),
        layers: vec![LayerSpec::identity(names, 1, 1, 1.0)],
        beta: 0.1,
        pool_radius: 1,
        cycle_ms: 10.0,
    })
    .expect("runner hierarchy is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameLog {
    pub frame: usize,
    pub position: usize,
    pub action: Action,
    /// A hazard sits in the next cell.
    pub hazard_next: bool,
    pub grounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Episode {
    pub score: u64,
    pub frames: usize,
    pub survived: bool,
    pub world_cycles: u64,
    pub log: Vec<FrameLog>,
    /// Program traces, one per frame; empty for non-program policies.
    #[serde(skip)]
    pub traces: Vec<SignalTrace>,
}

pub enum Policy<'p> {
    Program(&'p Program, &'p Hierarchy),
    /// Jumps with probability 1/2 each frame.
    Random { seed: u64, episode: u64 },
}

pub fn run_runner_episode(mut world: RunnerWorld, policy: Policy<'_>) -> Episode {
    let cap = world.step_cap();
    let mut log = Vec::new();
    let mut traces = Vec::new();
    let mut random = match policy {
        Policy::Random { seed, episode } => Some(rng::stream(seed ^ 0x005e_ed0f_ba5e, episode)),
        Policy::Program(..) => None,
    };
    let config = RuntimeConfig {
        foveate: false,
        ..RuntimeConfig::default()
    };
    let mut frame = 0;
    while world.alive && frame < cap {
        let action = match (&policy, random.as_mut()) {
            (_, Some(r)) => {
                if r.gen_bool(0.5) {
                    Action::Jump
                } else {
                    Action::None
                }
            }
            (Policy::Program(p, h), None) => {
                let mut rt = CpRuntime::new(h, world.render(), config.clone(), 0, FRAME_DEADLINE);
                let out = execute_cp(p, &mut rt, &[]);
                let pressed = out.failure.is_none() && rt.motor.get("jump").copied().unwrap_or(false);
                traces.push(rt.trace);
                if pressed {
                    Action::Jump
                } else {
                    Action::None
                }
            }
            (Policy::Random { .. }, None) => unreachable!("random policy always has a generator"),
        };
        log.push(FrameLog {
            frame,
            position: world.position,
            action,
            hazard_next: world.cell(world.position + 1).is_hazard(),
            grounded: world.airborne == 0,
        });
        world.step(action).expect("world is alive");
        frame += 1;
    }
    Episode {
        score: world.score,
        frames: frame,
        survived: world.alive,
        world_cycles: frame as u64 * FRAME_CYCLES,
        log,
        traces,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunnerReport {
    pub seed: u64,
    pub episodes: usize,
    pub track_length: usize,
    pub cp_mean: f64,
    pub random_mean: f64,
    pub ratio: f64,
    pub cp_scores: Vec<u64>,
    pub random_scores: Vec<u64>,
}

impl RunnerReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("episode,cp_score,random_score\n");
        for (i, (a, b)) in self.cp_scores.iter().zip(&self.random_scores).enumerate() {
            s.push_str(&format!("{i},{a},{b}\n"));
        }
        s
    }

    pub fn to_text(&self) -> String {
        format!(
            "runner: {} episodes, track {}\n  cp mean score     {:.2}\n  random mean score {:.2}\n  ratio             {:.2}\n",
            self.episodes, self.track_length, self.cp_mean, self.random_mean, self.ratio
        )
    }
}

/// Program vs. random baseline on the same seeded tracks.
pub fn runner_comparison(program: &Program, seed: u64, episodes: usize, track_length: usize) -> RunnerReport {
    let h = runner_hierarchy();
    let mut cp_scores = Vec::new();
    let mut random_scores = Vec::new();
    for e in 0..episodes as u64 {
        let world = RunnerWorld::generate(seed, e, track_length);
        cp_scores.push(run_runner_episode(world.clone(), Policy::Program(program, &h)).score);
        random_scores.push(run_runner_episode(world, Policy::Random { seed, episode: e }).score);
    }
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len().max(1) as f64;
    let (cp_mean, random_mean) = (mean(&cp_scores), mean(&random_scores));
    RunnerReport {
        seed,
        episodes,
        track_length,
        cp_mean,
        random_mean,
        ratio: if random_mean > 0.0 { cp_mean / random_mean } else { f64::INFINITY },
        cp_scores,
        random_scores,
    }
}
