//! Multi-channel intensity grids: the retinal input of a single look.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StimulusError {
    #[error("stimulus dimensions must be at least 1 (got {width}x{height}x{channels})")]
    EmptyDims {
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("expected {expected} values, found {found}")]
    ValueCount { expected: usize, found: usize },
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("malformed stimulus file: {0}")]
    Parse(String),
}

/// A `channels x height x width` grid of intensities in `[0, 1]`.
///
/// Values are stored row-major within each channel plane, planes in channel
/// order. This is also the order of the `values` list in the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl Stimulus {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self, StimulusError> {
        Self::from_values(width, height, channels, vec![0.0; width * height * channels])
    }

    pub fn from_values(
        width: usize,
        height: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, StimulusError> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(StimulusError::EmptyDims {
                width,
                height,
                channels,
            });
        }
        let expected = width * height * channels;
        if values.len() != expected {
            return Err(StimulusError::ValueCount {
                expected,
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(StimulusError::OutOfRange { index, value });
        }
        Ok(Stimulus {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[self.index(c, y, x)]
    }

    /// Sets one cell, clamping into `[0, 1]`.
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(c, y, x);
        self.values[i] = v.clamp(0.0, 1.0);
    }

    /// Sum over channels at each cell, row-major. Used as the conspicuity map.
    pub fn channel_sum(&self) -> Vec<f64> {
        let plane = self.width * self.height;
        let mut out = vec![0.0; plane];
        for c in 0..self.channels {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.values[c * plane + i];
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stimulus serializes")
    }

    /// Parses the stimulus file format and re-validates every invariant.
    pub fn from_json(text: &str) -> Result<Self, StimulusError> {
        let raw: Stimulus =
            serde_json::from_str(text).map_err(|e| StimulusError::Parse(e.to_string()))?;
        Self::from_values(raw.width, raw.height, raw.channels, raw.values)
    }
}
