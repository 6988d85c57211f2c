//! Overt attention: gaze, saccades, inhibition of return and foveation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::Stimulus;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixationError {
    #[error("target ({x}, {y}) is outside the {width}x{height} field")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("nothing to fixate")]
    NothingToFixate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationParams {
    /// Cycles per non-zero saccade.
    pub saccade_cycles: u64,
    /// Cells within this distance of gaze are seen at full resolution.
    pub fovea_radius: f64,
    /// Up to this distance cells are averaged over 2x2 blocks, beyond it 4x4.
    pub parafovea_radius: f64,
    /// IOR decay per cycle.
    pub ior_decay: f64,
}

impl Default for FixationParams {
    fn default() -> Self {
        FixationParams {
            saccade_cycles: 25,
            fovea_radius: 3.0,
            parafovea_radius: 8.0,
            ior_decay: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazeState {
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaccadeCommand {
    pub dx: i64,
    pub dy: i64,
    pub duration: u64,
}

/// Lands on the grid cell nearest the target centroid (halves round away from
/// zero). Zero-offset commands cost nothing.
pub fn plan_saccade(
    gaze: GazeState,
    target: (f64, f64),
    width: usize,
    height: usize,
    params: &FixationParams,
) -> Result<SaccadeCommand, FixationError> {
    let (xs, ys) = target;
    let inside = |v: f64, n: usize| v.is_finite() && v >= 0.0 && v <= (n - 1) as f64;
    if !inside(xs, width) || !inside(ys, height) {
        return Err(FixationError::OutOfBounds {
            x: xs,
            y: ys,
            width,
            height,
        });
    }
    let dx = xs.round() as i64 - gaze.x as i64;
    let dy = ys.round() as i64 - gaze.y as i64;
    let duration = if dx == 0 && dy == 0 {
        0
    } else {
        params.saccade_cycles
    };
    Ok(SaccadeCommand { dx, dy, duration })
}

/// Applies a command produced by [`plan_saccade`]; the caller charges
/// `cmd.duration` cycles.
pub fn execute_saccade(gaze: GazeState, cmd: &SaccadeCommand) -> GazeState {
    GazeState {
        x: (gaze.x as i64 + cmd.dx) as usize,
        y: (gaze.y as i64 + cmd.dy) as usize,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IorMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub decay: f64,
}

impl IorMap {
    pub fn new(width: usize, height: usize, decay: f64) -> Self {
        IorMap {
            width,
            height,
            values: vec![0.0; width * height],
            decay,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Sets the given `(y, x)` cells to full inhibition; out-of-range cells are ignored.
    pub fn mark(&mut self, region: impl IntoIterator<Item = (usize, usize)>) {
        for (y, x) in region {
            if y < self.height && x < self.width {
                self.values[y * self.width + x] = 1.0;
            }
        }
    }

    pub fn mark_disc(&mut self, center: GazeState, radius: f64) {
        let cells: Vec<_> = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (y, x)))
            .filter(|&(y, x)| distance((x as f64, y as f64), center) <= radius)
            .collect();
        self.mark(cells);
    }

    pub fn decay_by(&mut self, cycles: u64) {
        if cycles == 0 {
            return;
        }
        let f = (1.0 - self.decay).powi(cycles.min(i32::MAX as u64) as i32);
        for v in &mut self.values {
            *v *= f;
        }
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

fn distance(p: (f64, f64), g: GazeState) -> f64 {
    ((p.0 - g.x as f64).powi(2) + (p.1 - g.y as f64).powi(2)).sqrt()
}

/// Argmax of `conspicuity * (1 - ior)` in row-major order, first cell wins ties.
pub fn select_next_fixation(conspicuity: &[f64], ior: &IorMap) -> Result<GazeState, FixationError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&c, &r)) in conspicuity.iter().zip(&ior.values).enumerate() {
        let p = c * (1.0 - r);
        if p > 0.0 && best.is_none_or(|(_, b)| p > b) {
            best = Some((i, p));
        }
    }
    best.map(|(i, _)| GazeState {
        x: i % ior.width,
        y: i / ior.width,
    })
    .ok_or(FixationError::NothingToFixate)
}

/// Retinal image for a gaze position: full resolution in the fovea, 2x2 then
/// 4x4 grid-aligned block means further out. Blocks are blurred whole: a 4x4
/// block only when every cell lies beyond the parafovea, a 2x2 block only
/// when every cell lies beyond the fovea.
pub fn foveate(stimulus: &Stimulus, gaze: GazeState, params: &FixationParams) -> Stimulus {
    let (w, h) = (stimulus.width(), stimulus.height());
    let mut out = stimulus.clone();
    let beyond = |by: usize, bx: usize, block: usize, r: f64| {
        (by..(by + block).min(h))
            .all(|y| (bx..(bx + block).min(w)).all(|x| distance((x as f64, y as f64), gaze) > r))
    };
    let mut average = |by: usize, bx: usize, block: usize| {
        let ys = by..(by + block).min(h);
        let xs = bx..(bx + block).min(w);
        let n = (ys.len() * xs.len()) as f64;
        for c in 0..stimulus.channels() {
            let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
            for y in ys.clone() {
                for x in xs.clone() {
                    let v = stimulus.get(c, y, x);
                    sum += v;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            // flat blocks are returned exactly
            let m = if lo == hi { lo } else { sum / n };
            for y in ys.clone() {
                for x in xs.clone() {
                    out.set(c, y, x, m);
                }
            }
        }
    };
    for by in (0..h).step_by(4) {
        for bx in (0..w).step_by(4) {
            if beyond(by, bx, 4, params.parafovea_radius) {
                average(by, bx, 4);
                continue;
            }
            for sy in (by..(by + 4).min(h)).step_by(2) {
                for sx in (bx..(bx + 4).min(w)).step_by(2) {
                    if beyond(sy, sx, 2, params.fovea_radius) {
                        average(sy, sx, 2);
                    }
                }
            }
        }
    }
    out
}
