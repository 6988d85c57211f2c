//! Seeded corpus of small random hierarchies and sparse stimuli, plus a
//! nested-loop reference for the top-down descent.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use attend::hierarchy::{Hierarchy, HierarchyConfig, LayerSpec, Unit};
use attend::stimulus::Stimulus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub hierarchy: Hierarchy,
    pub stimulus: Stimulus,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn random_layer(rng: &mut ChaCha8Rng, prev_features: usize, rf: usize, stride: usize, depth: usize) -> LayerSpec {
    let features = rng.gen_range(1..=2);
    let weights = (0..features * prev_features * rf * rf)
        .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.1..1.0) } else { 0.0 })
        .collect();
    LayerSpec {
        features: names(&format!("l{depth}f"), features),
        receptive_field: rf,
        stride,
        weights,
    }
}

/// One of four shapes, every one with at most 50 units and a top layer no
/// larger than 2x2.
pub fn random_hierarchy(rng: &mut ChaCha8Rng) -> Hierarchy {
    let shape = rng.gen_range(0..4);
    let (side, channels) = match shape {
        0 => (4, rng.gen_range(1..=2)),
        1 => (4, 1),
        2 => (3, rng.gen_range(1..=2)),
        _ => (4, 1),
    };
    // (receptive field, stride) per computed layer
    let plan: &[(usize, usize)] = match shape {
        0 => &[(2, 2)],
        1 => &[(2, 1), (2, 1)],
        2 => &[(2, 1), (2, 1)],
        _ => &[(2, 2), (1, 1)],
    };
    let mut layers = Vec::new();
    let mut prev = channels;
    for (i, &(rf, stride)) in plan.iter().enumerate() {
        let spec = random_layer(rng, prev, rf, stride, i + 2);
        prev = spec.features.len();
        layers.push(spec);
    }
    let h = Hierarchy::new(HierarchyConfig {
        input_width: side,
        input_height: side,
        channels: names("c", channels),
        layers,
        beta: rng.gen_range(0.05..0.5),
        pool_radius: 1,
        cycle_ms: 10.0,
    })
    .unwrap();
    assert!(h.unit_count() <= 50);
    h
}

pub fn random_stimulus(rng: &mut ChaCha8Rng, h: &Hierarchy) -> Stimulus {
    let s = h.shape(1);
    let mut stim = Stimulus::zeros(s.width, s.height, s.features).unwrap();
    for c in 0..s.features {
        for y in 0..s.height {
            for x in 0..s.width {
                if rng.gen_bool(0.3) {
                    stim.set(c, y, x, rng.gen_range(0.1..1.0));
                }
            }
        }
    }
    stim
}

pub fn case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hierarchy = random_hierarchy(&mut rng);
    let stimulus = random_stimulus(&mut rng, &hierarchy);
    Case { hierarchy, stimulus }
}

/// Responses indexed `[layer - 1][feature][y][x]`.
pub type Net = Vec<Vec<Vec<Vec<f64>>>>;

pub struct Dims {
    pub features: usize,
    pub height: usize,
    pub width: usize,
}

pub fn dims(h: &Hierarchy) -> Vec<Dims> {
    (1..=h.layer_count())
        .map(|l| {
            let s = h.shape(l);
            Dims { features: s.features, height: s.height, width: s.width }
        })
        .collect()
}

fn zeros(d: &[Dims], v: f64) -> Net {
    d.iter().map(|d| vec![vec![vec![v; d.width]; d.height]; d.features]).collect()
}

/// Full bottom-up pass written out from the configuration alone.
pub fn forward(h: &Hierarchy, stim: &Stimulus, gains: &Net) -> Net {
    let cfg = h.config();
    let d = dims(h);
    let mut r = zeros(&d, 0.0);
    for c in 0..d[0].features {
        for y in 0..d[0].height {
            for x in 0..d[0].width {
                r[0][c][y][x] = gains[0][c][y][x] * stim.get(c, y, x);
            }
        }
    }
    for l in 1..d.len() {
        let spec = &cfg.layers[l - 1];
        let rf = spec.receptive_field;
        let pf = d[l - 1].features;
        let mut pre = vec![vec![vec![0.0; d[l].width]; d[l].height]; d[l].features];
        for f in 0..d[l].features {
            for y in 0..d[l].height {
                for x in 0..d[l].width {
                    let mut drive = 0.0;
                    for j in 0..pf {
                        for dy in 0..rf {
                            for dx in 0..rf {
                                let w = spec.weights[((f * pf + j) * rf + dy) * rf + dx];
                                if w > 0.0 {
                                    drive += w * r[l - 1][j][y * spec.stride + dy][x * spec.stride + dx];
                                }
                            }
                        }
                    }
                    pre[f][y][x] = gains[l][f][y][x] * f64::max(drive, 0.0);
                }
            }
        }
        let rad = cfg.pool_radius;
        for f in 0..d[l].features {
            for y in 0..d[l].height {
                for x in 0..d[l].width {
                    let mut pool = 0.0;
                    for g in 0..d[l].features {
                        for yy in y.saturating_sub(rad)..=(y + rad).min(d[l].height - 1) {
                            for xx in x.saturating_sub(rad)..=(x + rad).min(d[l].width - 1) {
                                if (g, yy, xx) != (f, y, x) {
                                    pool += pre[g][yy][xx];
                                }
                            }
                        }
                    }
                    r[l][f][y][x] = pre[f][y][x] / (1.0 + cfg.beta * pool);
                }
            }
        }
    }
    r
}

fn at(net: &Net, u: Unit) -> f64 {
    net[u.layer - 1][u.feature][u.y][u.x]
}

fn zone_sum(net: &Net, zone: &BTreeSet<Unit>) -> f64 {
    zone.iter().map(|&u| at(net, u)).sum()
}

pub struct RefDescent {
    pub top_unit: Unit,
    pub pass_zone: Vec<BTreeSet<Unit>>,
    pub restarts: u32,
}

/// Top-down descent with restarts, recomputing the whole network after every
/// prune decision. `None` when every candidate is exhausted.
pub fn reference_localize(
    h: &Hierarchy,
    stim: &Stimulus,
    theta: f64,
    epsilon: f64,
    max_restarts: u32,
    stop: usize,
) -> Option<RefDescent> {
    let cfg = h.config();
    let d = dims(h);
    let l_top = d.len();
    let ones = zeros(&d, 1.0);
    let start = forward(h, stim, &ones);
    let mut inhibited: BTreeSet<Unit> = BTreeSet::new();
    let mut restarts = 0;
    loop {
        // strongest live top unit, first in (feature, y, x) order on ties
        let mut cfoa: Option<(Unit, f64)> = None;
        let top = &d[l_top - 1];
        for f in 0..top.features {
            for y in 0..top.height {
                for x in 0..top.width {
                    let u = Unit::new(l_top, f, y, x);
                    let v = start[l_top - 1][f][y][x];
                    if v > 0.0 && !inhibited.contains(&u) && cfoa.is_none_or(|(_, b)| v > b) {
                        cfoa = Some((u, v));
                    }
                }
            }
        }
        let (cfoa, _) = cfoa?;

        let mut gains = ones.clone();
        let mut zone = vec![BTreeSet::new(); l_top];
        zone[l_top - 1].insert(cfoa);
        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); l_top];
        samples[l_top - 1].push(at(&start, cfoa));
        let mut net = start.clone();
        let mut failed = false;
        for layer in (stop..=l_top).rev() {
            if layer < l_top {
                let spec = &cfg.layers[layer - 1];
                let rf = spec.receptive_field;
                let pf = d[layer - 1].features;
                let mut winners = BTreeSet::new();
                let mut losers = BTreeSet::new();
                for p in zone[layer].clone() {
                    let mut inputs = Vec::new();
                    for j in 0..pf {
                        for dy in 0..rf {
                            for dx in 0..rf {
                                if spec.weights[((p.feature * pf + j) * rf + dy) * rf + dx] > 0.0 {
                                    inputs.push(Unit::new(layer, j, p.y * spec.stride + dy, p.x * spec.stride + dx));
                                }
                            }
                        }
                    }
                    let mut m: f64 = 0.0;
                    for &v in &inputs {
                        m = m.max(at(&net, v));
                    }
                    for &v in &inputs {
                        if at(&net, v) >= theta * m {
                            winners.insert(v);
                        } else {
                            losers.insert(v);
                        }
                    }
                }
                for v in losers.difference(&winners) {
                    gains[v.layer - 1][v.feature][v.y][v.x] = 0.0;
                }
                zone[layer - 1] = winners;
            }
            // surround of the zone at this layer
            let rad = cfg.pool_radius;
            let dl = &d[layer - 1];
            for w in zone[layer - 1].clone() {
                for g in 0..dl.features {
                    for yy in w.y.saturating_sub(rad)..=(w.y + rad).min(dl.height - 1) {
                        for xx in w.x.saturating_sub(rad)..=(w.x + rad).min(dl.width - 1) {
                            if !zone[layer - 1].contains(&Unit::new(layer, g, yy, xx)) {
                                gains[layer - 1][g][yy][xx] = 0.0;
                            }
                        }
                    }
                }
            }
            net = forward(h, stim, &gains);
            for lam in layer..=l_top {
                let s = zone_sum(&net, &zone[lam - 1]);
                if let Some(&prev) = samples[lam - 1].last() {
                    if s < prev - epsilon {
                        failed = true;
                    }
                }
                samples[lam - 1].push(s);
            }
            if failed {
                break;
            }
        }
        if !failed {
            return Some(RefDescent { top_unit: cfoa, pass_zone: zone, restarts });
        }
        inhibited.insert(cfoa);
        if restarts == max_restarts {
            return None;
        }
        restarts += 1;
    }
}
