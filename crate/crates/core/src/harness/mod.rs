//! Synthetic environments and experiments.

pub mod experiment;
pub mod generate;
pub mod runner;
pub mod trial;

use thiserror::Error;

pub use crate::cp::decision_cycles;
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use generate::{gen_trial, GroundTruth, Item};
pub use trial::{dry_run, fixations_csv, run_trial, TrialResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("infeasible trial: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Stimulus(#[from] crate::stimulus::StimulusError),
    #[error(transparent)]
    Executive(#[from] crate::executive::ExecutiveError),
    #[error("experiment file: {0}")]
    Config(String),
    #[error("experiment has no conditions")]
    EmptySuite,
    #[error("stepping a dead world")]
    Dead,
    #[error(transparent)]
    Hierarchy(#[from] crate::hierarchy::HierarchyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
