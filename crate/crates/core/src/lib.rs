//! Deterministic simulation kernel for attentional control in vision.

pub mod cli;
pub mod cp;
pub mod executive;
pub mod fixation;
pub mod harness;
pub mod hierarchy;
pub mod oracle;
pub mod rng;
pub mod selective_tuning;
pub mod stimulus;
pub mod wm;
