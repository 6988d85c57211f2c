//! A small layered feedforward hierarchy with multiplicative gains.
//!
//! Layer 1 is the (gated) retinal input; layers `2..=L` are computed. Every
//! unit of a computed layer responds with
//!
//! ```text
//! pre(u) = g(u) * max(0, sum_j w_j * rho(in_j))
//! rho(u) = pre(u) / (1 + beta * pool(u))
//! ```
//!
//! where `pool(u)` is the summed `pre` of the other units (all features) in a
//! `(2r+1) x (2r+1)` spatial neighbourhood of `u` at the same layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::Stimulus;

#[derive(Debug, Error, PartialEq)]
pub enum HierarchyError {
    #[error("a hierarchy needs at least 2 layers, got {0}")]
    TooFewLayers(usize),
    #[error("layer {layer}: {message}")]
    Layer { layer: usize, message: String },
    #[error("normalization beta must be finite and non-negative, got {0}")]
    Beta(f64),
    #[error("stimulus is {got_w}x{got_h}x{got_c}, hierarchy expects {want_w}x{want_h}x{want_c}")]
    DimMismatch {
        got_w: usize,
        got_h: usize,
        got_c: usize,
        want_w: usize,
        want_h: usize,
        want_c: usize,
    },
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
}

/// One computed layer. `weights` is indexed `[out][in][dy][dx]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub features: Vec<String>,
    pub receptive_field: usize,
    pub stride: usize,
    pub weights: Vec<f64>,
}

impl LayerSpec {
    /// Every out-feature reads only the in-feature with the same index, with a
    /// uniform spatial weight.
    pub fn identity(features: Vec<String>, receptive_field: usize, stride: usize, w: f64) -> Self {
        let n = features.len();
        let rf2 = receptive_field * receptive_field;
        let mut weights = vec![0.0; n * n * rf2];
        for f in 0..n {
            for k in 0..rf2 {
                weights[(f * n + f) * rf2 + k] = w;
            }
        }
        LayerSpec {
            features,
            receptive_field,
            stride,
            weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub input_width: usize,
    pub input_height: usize,
    pub channels: Vec<String>,
    pub layers: Vec<LayerSpec>,
    pub beta: f64,
    #[serde(default = "default_pool_radius")]
    pub pool_radius: usize,
    pub cycle_ms: f64,
}

fn default_pool_radius() -> usize {
    1
}

pub const PATTERN_FEATURES: [&str; 4] = ["red_diag", "red_anti", "green_diag", "green_anti"];

impl Default for HierarchyConfig {
    /// Five layers over a 16x16 two-channel input. Layer 2 holds 2x2 diagonal
    /// and anti-diagonal detectors per colour; the layers above pool them.
    fn default() -> Self {
        let channels = vec!["red".to_string(), "green".to_string()];
        let features: Vec<String> = PATTERN_FEATURES.iter().map(|s| s.to_string()).collect();
        // [out][in][dy][dx], rf = 2
        let mut pattern = vec![0.0; 4 * 2 * 4];
        for (out, (chan, diag)) in [(0, true), (0, false), (1, true), (1, false)]
            .into_iter()
            .enumerate()
        {
            let base = (out * 2 + chan) * 4;
            let cells = if diag { [0, 3] } else { [1, 2] };
            for k in cells {
                pattern[base + k] = 1.0;
            }
        }
        HierarchyConfig {
            input_width: 16,
            input_height: 16,
            channels,
            layers: vec![
                LayerSpec {
                    features: features.clone(),
                    receptive_field: 2,
                    stride: 2,
                    weights: pattern,
                },
                LayerSpec::identity(features.clone(), 2, 2, 0.25),
                LayerSpec::identity(features.clone(), 1, 1, 1.0),
                LayerSpec::identity(features, 1, 1, 1.0),
            ],
            beta: 0.1,
            pool_radius: 1,
            cycle_ms: 10.0,
        }
    }
}

/// A unit coordinate. The derived ordering is the canonical
/// `(layer, feature, y, x)` order used for every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub layer: usize,
    pub feature: usize,
    pub y: usize,
    pub x: usize,
}

impl Unit {
    pub fn new(layer: usize, feature: usize, y: usize, x: usize) -> Self {
        Unit {
            layer,
            feature,
            y,
            x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub features: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn len(&self) -> usize {
        self.features * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, f: usize, y: usize, x: usize) -> usize {
        (f * self.height + y) * self.width + x
    }
}

/// Validated, immutable hierarchy.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    config: HierarchyConfig,
    shapes: Vec<Shape>,
    feature_names: Vec<Vec<String>>,
}

/// Responses `rho` per layer (index `layer - 1`) stamped with the cycle at
/// which they were produced. The gated input of layer 1 is kept so that
/// partial recomputation does not need the stimulus.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub responses: Vec<Vec<f64>>,
    pub t: u64,
    input: Vec<f64>,
}

/// Gains in `[0, 1]` for every unit of every layer, input channels included.
#[derive(Debug, Clone, PartialEq)]
pub struct GainField {
    pub gains: Vec<Vec<f64>>,
}

impl GainField {
    pub fn get(&self, u: Unit, shape: &Shape) -> f64 {
        self.gains[u.layer - 1][shape.index(u.feature, u.y, u.x)]
    }

    pub fn set(&mut self, u: Unit, shape: &Shape, g: f64) {
        self.gains[u.layer - 1][shape.index(u.feature, u.y, u.x)] = g.clamp(0.0, 1.0);
    }

    /// Element-wise product; used to combine priming with attentional suppression.
    pub fn product(&self, other: &GainField) -> GainField {
        GainField {
            gains: self
                .gains
                .iter()
                .zip(&other.gains)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect())
                .collect(),
        }
    }

    pub fn is_all_ones(&self) -> bool {
        self.gains.iter().flatten().all(|&g| g == 1.0)
    }
}

/// Which units priming leaves untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct Relevance {
    /// Per layer, per feature.
    pub features: Vec<Vec<bool>>,
    /// Optional row-major mask over input cells; `None` means every location.
    pub region: Option<Vec<bool>>,
}

impl Hierarchy {
    pub fn new(config: HierarchyConfig) -> Result<Self, HierarchyError> {
        let layer_count = config.layers.len() + 1;
        if layer_count < 2 {
            return Err(HierarchyError::TooFewLayers(layer_count));
        }
        if !config.beta.is_finite() || config.beta < 0.0 {
            return Err(HierarchyError::Beta(config.beta));
        }
        if config.input_width == 0 || config.input_height == 0 || config.channels.is_empty() {
            return Err(HierarchyError::Layer {
                layer: 1,
                message: "input dimensions and channel count must be at least 1".into(),
            });
        }
        let mut shapes = vec![Shape {
            features: config.channels.len(),
            height: config.input_height,
            width: config.input_width,
        }];
        let mut feature_names = vec![config.channels.clone()];
        for (i, spec) in config.layers.iter().enumerate() {
            let layer = i + 2;
            let prev = shapes[i];
            let err = |message: String| HierarchyError::Layer { layer, message };
            if spec.features.is_empty() {
                return Err(err("no features".into()));
            }
            if spec.stride == 0 {
                return Err(err("stride must be at least 1".into()));
            }
            if spec.receptive_field == 0 {
                return Err(err("receptive field must be at least 1".into()));
            }
            if spec.receptive_field > prev.height || spec.receptive_field > prev.width {
                return Err(err(format!(
                    "receptive field {} exceeds the {}x{} extent of layer {}",
                    spec.receptive_field,
                    prev.height,
                    prev.width,
                    layer - 1
                )));
            }
            let expected =
                spec.features.len() * prev.features * spec.receptive_field * spec.receptive_field;
            if spec.weights.len() != expected {
                return Err(err(format!(
                    "expected {expected} weights, found {}",
                    spec.weights.len()
                )));
            }
            if let Some(w) = spec.weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(err(format!("weight {w} is negative or not finite")));
            }
            shapes.push(Shape {
                features: spec.features.len(),
                height: (prev.height - spec.receptive_field) / spec.stride + 1,
                width: (prev.width - spec.receptive_field) / spec.stride + 1,
            });
            feature_names.push(spec.features.clone());
        }
        Ok(Hierarchy {
            config,
            shapes,
            feature_names,
        })
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    /// Number of layers `L`, input layer included.
    pub fn layer_count(&self) -> usize {
        self.shapes.len()
    }

    pub fn shape(&self, layer: usize) -> &Shape {
        &self.shapes[layer - 1]
    }

    pub fn top(&self) -> usize {
        self.layer_count()
    }

    pub fn feature_names(&self, layer: usize) -> &[String] {
        &self.feature_names[layer - 1]
    }

    pub fn feature_index(&self, layer: usize, name: &str) -> Result<usize, HierarchyError> {
        self.feature_names(layer)
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| HierarchyError::UnknownFeature(name.to_string()))
    }

    pub fn unit_count(&self) -> usize {
        self.shapes.iter().map(Shape::len).sum()
    }

    /// All units of a layer in canonical order.
    pub fn layer_units(&self, layer: usize) -> impl Iterator<Item = Unit> + '_ {
        let s = *self.shape(layer);
        (0..s.features).flat_map(move |f| {
            (0..s.height).flat_map(move |y| (0..s.width).map(move |x| Unit::new(layer, f, y, x)))
        })
    }

    /// All units in canonical `(layer, feature, y, x)` order.
    pub fn units(&self) -> impl Iterator<Item = Unit> + '_ {
        (1..=self.layer_count()).flat_map(move |l| self.layer_units(l))
    }

    pub fn unit_gain_ones(&self) -> GainField {
        GainField {
            gains: self.shapes.iter().map(|s| vec![1.0; s.len()]).collect(),
        }
    }

    pub fn response(&self, state: &LayerState, u: Unit) -> f64 {
        state.responses[u.layer - 1][self.shape(u.layer).index(u.feature, u.y, u.x)]
    }

    /// Lower-layer units feeding `u` through a strictly positive weight.
    pub fn inputs_of(&self, u: Unit) -> Vec<(Unit, f64)> {
        if u.layer == 1 {
            return Vec::new();
        }
        let spec = &self.config.layers[u.layer - 2];
        let prev = self.shape(u.layer - 1);
        let rf = spec.receptive_field;
        let mut out = Vec::new();
        for j in 0..prev.features {
            for dy in 0..rf {
                for dx in 0..rf {
                    let w = spec.weights[((u.feature * prev.features + j) * rf + dy) * rf + dx];
                    if w > 0.0 {
                        out.push((
                            Unit::new(u.layer - 1, j, u.y * spec.stride + dy, u.x * spec.stride + dx),
                            w,
                        ));
                    }
                }
            }
        }
        out
    }

    /// Other units of the same layer inside `u`'s normalization neighbourhood.
    pub fn pool_of(&self, u: Unit) -> Vec<Unit> {
        let s = self.shape(u.layer);
        let r = self.config.pool_radius;
        let mut out = Vec::new();
        for f in 0..s.features {
            for y in u.y.saturating_sub(r)..=(u.y + r).min(s.height - 1) {
                for x in u.x.saturating_sub(r)..=(u.x + r).min(s.width - 1) {
                    let v = Unit::new(u.layer, f, y, x);
                    if v != u {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Inclusive `(y0, y1, x0, x1)` rectangle of input cells under `u`.
    pub fn footprint(&self, u: Unit) -> (usize, usize, usize, usize) {
        let (mut y0, mut y1, mut x0, mut x1) = (u.y, u.y, u.x, u.x);
        for layer in (2..=u.layer).rev() {
            let spec = &self.config.layers[layer - 2];
            y0 *= spec.stride;
            x0 *= spec.stride;
            y1 = y1 * spec.stride + spec.receptive_field - 1;
            x1 = x1 * spec.stride + spec.receptive_field - 1;
        }
        (y0, y1, x0, x1)
    }

    fn check_dims(&self, stimulus: &Stimulus) -> Result<(), HierarchyError> {
        let s = self.shape(1);
        if stimulus.width() != s.width
            || stimulus.height() != s.height
            || stimulus.channels() != s.features
        {
            return Err(HierarchyError::DimMismatch {
                got_w: stimulus.width(),
                got_h: stimulus.height(),
                got_c: stimulus.channels(),
                want_w: s.width,
                want_h: s.height,
                want_c: s.features,
            });
        }
        Ok(())
    }

    /// One full bottom-up pass. The returned state is stamped `t0 + L`.
    pub fn feedforward_at(
        &self,
        stimulus: &Stimulus,
        gains: &GainField,
        t0: u64,
    ) -> Result<LayerState, HierarchyError> {
        self.check_dims(stimulus)?;
        let mut state = LayerState {
            responses: self.shapes.iter().map(|s| vec![0.0; s.len()]).collect(),
            t: t0 + self.layer_count() as u64,
            input: stimulus.values().to_vec(),
        };
        self.recompute_from(&mut state, gains, 1);
        Ok(state)
    }

    pub fn feedforward(
        &self,
        stimulus: &Stimulus,
        gains: &GainField,
    ) -> Result<LayerState, HierarchyError> {
        self.feedforward_at(stimulus, gains, 0)
    }

    /// Recomputes layers `from..=L` in place from the responses below `from`.
    /// Does not touch the timestamp.
    pub fn recompute_from(&self, state: &mut LayerState, gains: &GainField, from: usize) {
        if from <= 1 {
            for (r, (v, g)) in state.responses[0]
                .iter_mut()
                .zip(state.input.iter().zip(&gains.gains[0]))
            {
                *r = g * v;
            }
        }
        for layer in from.max(2)..=self.layer_count() {
            let s = *self.shape(layer);
            let mut pre = vec![0.0; s.len()];
            for u in self.layer_units(layer) {
                let drive: f64 = self
                    .inputs_of(u)
                    .iter()
                    .map(|&(v, w)| w * self.response(state, v))
                    .sum();
                let i = s.index(u.feature, u.y, u.x);
                pre[i] = gains.gains[layer - 1][i] * drive.max(0.0);
            }
            let beta = self.config.beta;
            let out = &mut state.responses[layer - 1];
            for u in self.layer_units(layer) {
                let i = s.index(u.feature, u.y, u.x);
                let pool: f64 = if beta > 0.0 {
                    self.pool_of(u)
                        .iter()
                        .map(|v| pre[s.index(v.feature, v.y, v.x)])
                        .sum()
                } else {
                    0.0
                };
                out[i] = pre[i] / (1.0 + beta * pool);
            }
        }
    }

    /// Relevance that keeps the named top-layer features and everything that
    /// feeds them through a positive weight.
    pub fn relevance_for_features(&self, names: &[&str]) -> Result<Relevance, HierarchyError> {
        let top = self.top();
        let mut features: Vec<Vec<bool>> =
            self.shapes.iter().map(|s| vec![false; s.features]).collect();
        for n in names {
            let f = self.feature_index(top, n)?;
            features[top - 1][f] = true;
        }
        for layer in (2..=top).rev() {
            let spec = &self.config.layers[layer - 2];
            let prev_f = self.shape(layer - 1).features;
            let rf2 = spec.receptive_field * spec.receptive_field;
            for out in 0..spec.features.len() {
                if !features[layer - 1][out] {
                    continue;
                }
                for (j, keep) in features[layer - 2].iter_mut().enumerate().take(prev_f) {
                    let base = (out * prev_f + j) * rf2;
                    if spec.weights[base..base + rf2].iter().any(|&w| w > 0.0) {
                        *keep = true;
                    }
                }
            }
        }
        Ok(Relevance {
            features,
            region: None,
        })
    }

    pub fn relevance_all(&self) -> Relevance {
        Relevance {
            features: self.shapes.iter().map(|s| vec![true; s.features]).collect(),
            region: None,
        }
    }

    /// Top-down priming: irrelevant units get `g_low`, relevant ones keep their
    /// gain. Idempotent. Costs `L` cycles.
    pub fn apply_priming(&self, gains: &GainField, relevance: &Relevance, g_low: f64) -> GainField {
        let mut out = gains.clone();
        let in_w = self.shape(1).width;
        for u in self.units() {
            let feature_ok = relevance.features[u.layer - 1][u.feature];
            let region_ok = match &relevance.region {
                None => true,
                Some(mask) => {
                    let (y0, y1, x0, x1) = self.footprint(u);
                    (y0..=y1).any(|y| (x0..=x1).any(|x| mask[y * in_w + x]))
                }
            };
            if !(feature_ok && region_ok) {
                out.set(u, self.shape(u.layer), g_low);
            }
        }
        out
    }

    pub fn priming_cycles(&self) -> u64 {
        self.layer_count() as u64
    }

    pub fn reset_gains(&self, _gains: &GainField) -> GainField {
        self.unit_gain_ones()
    }
}
