//! Seeded stimulus and ground-truth generation for the taxonomy tasks.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use super::HarnessError;
use crate::executive::{Problem, TaskSpec};
use crate::hierarchy::Hierarchy;
use crate::rng;
use crate::stimulus::Stimulus;

/// A 2x2 oriented item: `feature` is `<channel>_diag` or `<channel>_anti`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Item {
    pub feature: String,
    pub x: usize,
    pub y: usize,
    pub intensity: f64,
}

impl Item {
    pub fn cells(&self) -> [(usize, usize); 4] {
        let (x, y) = (self.x, self.y);
        [(y, x), (y, x + 1), (y + 1, x), (y + 1, x + 1)]
    }

    /// Within one cell of the item's 2x2 box.
    pub fn near(&self, px: f64, py: f64) -> bool {
        let (x0, y0) = (self.x as f64 - 1.0, self.y as f64 - 1.0);
        (x0..=x0 + 3.0).contains(&px) && (y0..=y0 + 3.0).contains(&py)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub items: Vec<Item>,
    /// Index into `items`.
    pub target: Option<usize>,
    pub correct_response: String,
}

impl GroundTruth {
    pub fn target_item(&self) -> Option<&Item> {
        self.target.map(|i| &self.items[i])
    }
}

fn pattern(feature: &str, channels: &[String]) -> Result<(usize, bool), HarnessError> {
    let bad = || HarnessError::Infeasible(format!("`{feature}` is not a <channel>_diag|anti item"));
    let (chan, kind) = feature.rsplit_once('_').ok_or_else(bad)?;
    let c = channels.iter().position(|n| n == chan).ok_or_else(bad)?;
    match kind {
        "diag" => Ok((c, true)),
        "anti" => Ok((c, false)),
        _ => Err(bad()),
    }
}

pub fn draw_item_cells(stim: &mut Stimulus, item: &Item, channels: &[String]) -> Result<(), HarnessError> {
    let (c, diag) = pattern(&item.feature, channels)?;
    let cells = if diag {
        [(item.y, item.x), (item.y + 1, item.x + 1)]
    } else {
        [(item.y, item.x + 1), (item.y + 1, item.x)]
    };
    for (y, x) in cells {
        stim.set(c, y, x, item.intensity);
    }
    Ok(())
}

/// Item slots grouped by top-layer cell: even-aligned 2x2 positions, at most
/// one item per top cell.
fn slots(h: &Hierarchy, foveal: Option<f64>) -> Vec<Vec<(usize, usize)>> {
    let cfg = h.config();
    let (w, hgt) = (cfg.input_width, cfg.input_height);
    let top = h.shape(h.top());
    let (bw, bh) = (w / top.width, hgt / top.height);
    let (gx, gy) = ((w / 2) as f64, (hgt / 2) as f64);
    let mut out = vec![Vec::new(); top.width * top.height];
    for y in (0..hgt.saturating_sub(1)).step_by(2) {
        for x in (0..w.saturating_sub(1)).step_by(2) {
            if let Some(r) = foveal {
                let inside = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)]
                    .iter()
                    .all(|&(cx, cy)| ((cx as f64 - gx).powi(2) + (cy as f64 - gy).powi(2)).sqrt() <= r);
                if !inside {
                    continue;
                }
            }
            let cell = (y / bh).min(top.height - 1) * top.width + (x / bw).min(top.width - 1);
            out[cell].push((x, y));
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Deterministic in `(seed, trial)`.
pub fn gen_trial(
    spec: &TaskSpec,
    h: &Hierarchy,
    fovea_radius: f64,
    seed: u64,
    trial: u64,
) -> Result<(Stimulus, GroundTruth), HarnessError> {
    let p = &spec.stimulus;
    if p.set_size == 0 {
        return Err(HarnessError::Infeasible("set size must be at least 1".into()));
    }
    let cfg = h.config();
    let mut rng = rng::stream(seed, trial);
    let target = spec.target.feature.clone();
    let other = spec.target.other.clone().unwrap_or_else(|| target.clone());
    let [lo, hi] = p.intensity;
    let intensity = |rng: &mut rng::Rng| if hi > lo { rng.gen_range(lo..=hi) } else { lo };

    let mut features: Vec<String> = Vec::new();
    let mut target_idx = None;
    let correct;
    match spec.problem {
        Problem::SameDifferent | Problem::Compare => {
            let first = if rng.gen_bool(0.5) { target.clone() } else { other.clone() };
            let same = rng.gen_bool(p.same_probability);
            let second = match (same, first == target) {
                (true, _) => first.clone(),
                (false, true) => other.clone(),
                (false, false) => target.clone(),
            };
            correct = if same { "same" } else { "different" }.to_string();
            features.push(first);
            features.push(second);
        }
        Problem::Discrimination
        | Problem::Recognition
        | Problem::Categorization
        | Problem::Identification
        | Problem::Classification => {
            let present = rng.gen_bool(p.target_present);
            let f = if present { target.clone() } else { other.clone() };
            correct = match spec.problem {
                Problem::Recognition | Problem::Categorization => {
                    if present { "yes" } else { "no" }.to_string()
                }
                _ => f.clone(),
            };
            if present {
                target_idx = Some(0);
            }
            features.push(f);
            for _ in 1..p.set_size {
                features.push(other.clone());
            }
        }
        _ => {
            let present = rng.gen_bool(p.target_present);
            if present {
                target_idx = Some(0);
                features.push(target.clone());
            }
            while features.len() < p.set_size {
                features.push(other.clone());
            }
            correct = match spec.problem {
                Problem::VisualSearch | Problem::Detection => {
                    if present { "present" } else { "absent" }.to_string()
                }
                // spatial answers are checked against the item, not a label
                _ => String::new(),
            };
        }
    }

    let mut groups = slots(h, p.foveal.then_some(fovea_radius));
    if features.len() > groups.len() {
        return Err(HarnessError::Infeasible(format!(
            "{} items but only {} places",
            features.len(),
            groups.len()
        )));
    }
    groups.shuffle(&mut rng);
    let mut stim = Stimulus::zeros(cfg.input_width, cfg.input_height, cfg.channels.len())?;
    let mut items = Vec::new();
    for (f, group) in features.into_iter().zip(groups) {
        let &(x, y) = group.choose(&mut rng).expect("groups are non-empty");
        let item = Item { feature: f, x, y, intensity: intensity(&mut rng) };
        draw_item_cells(&mut stim, &item, &cfg.channels)?;
        items.push(item);
    }
    if p.clutter > 0.0 {
        let occupied: Vec<(usize, usize)> = items.iter().flat_map(|i| i.cells()).collect();
        for y in 0..cfg.input_height {
            for x in 0..cfg.input_width {
                let roll: f64 = rng.gen();
                if roll < p.clutter && !occupied.contains(&(y, x)) {
                    let c = rng.gen_range(0..cfg.channels.len());
                    let v = rng.gen_range(0.0..0.3);
                    stim.set(c, y, x, v);
                }
            }
        }
    }
    Ok((
        stim,
        GroundTruth {
            items,
            target: target_idx,
            correct_response: correct,
        },
    ))
}
