//! Batches of trials per condition, aggregated into a report.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trial::{run_trial, TrialResult};
use super::HarnessError;
use crate::cp::RuntimeConfig;
use crate::executive::{CueValidity, Library, TaskSpec};
use crate::hierarchy::Hierarchy;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionFile {
    name: String,
    task: String,
    #[serde(default)]
    cue: Option<CueValidity>,
    #[serde(default)]
    set_size: Option<usize>,
    #[serde(default)]
    target_present: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    name: String,
    #[serde(default)]
    seed: Option<u64>,
    trials: usize,
    #[serde(default, rename = "condition")]
    conditions: Vec<ConditionFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub spec: TaskSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: Option<u64>,
    pub trials: usize,
    pub conditions: Vec<Condition>,
}

impl ExperimentConfig {
    /// Task paths are resolved against the experiment file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read(path)?;
        let file: ExperimentFile =
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut conditions = Vec::new();
        for c in file.conditions {
            let task_path = dir.join(&c.task);
            let mut spec = TaskSpec::from_toml(&read(&task_path)?)?;
            if c.cue.is_some() {
                spec.stimulus.cue = c.cue;
            }
            if let Some(n) = c.set_size {
                spec.stimulus.set_size = n;
            }
            if let Some(p) = c.target_present {
                spec.stimulus.target_present = p;
            }
            spec.validate()?;
            conditions.push(Condition { name: c.name, spec });
        }
        Ok(ExperimentConfig {
            name: file.name,
            seed: file.seed,
            trials: file.trials,
            conditions,
        })
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub name: String,
    pub trials: usize,
    pub successes: usize,
    pub accuracy: f64,
    pub mean_cycles: f64,
    pub sd_cycles: f64,
    pub mean_fixations: f64,
    pub restarts: u64,
    pub repairs: u64,
    pub failures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub conditions: Vec<ConditionSummary>,
}

impl ExperimentReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionSummary> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "condition,trials,successes,accuracy,mean_cycles,sd_cycles,mean_fixations,restarts,repairs\n",
        );
        for c in &self.conditions {
            s.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{}\n",
                crate::oracle::csv_field(&c.name),
                c.trials,
                c.successes,
                c.accuracy,
                c.mean_cycles,
                c.sd_cycles,
                c.mean_fixations,
                c.restarts,
                c.repairs
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("experiment {} (seed {})\n", self.name, self.seed);
        for c in &self.conditions {
            s.push_str(&format!(
                "  {:<16} n={:<4} acc={:.3} cycles={:.2}±{:.2} fix={:.2} restarts={} repairs={}\n",
                c.name, c.trials, c.accuracy, c.mean_cycles, c.sd_cycles, c.mean_fixations, c.restarts, c.repairs
            ));
        }
        s
    }
}

pub fn summarize(name: &str, trials: &[TrialResult]) -> ConditionSummary {
    let n = trials.len();
    let nf = n.max(1) as f64;
    let mean = trials.iter().map(|t| t.cycles as f64).sum::<f64>() / nf;
    let var = if n > 1 {
        trials.iter().map(|t| (t.cycles as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut failures = BTreeMap::new();
    for t in trials {
        if let Some(f) = &t.failure {
            *failures.entry(f.label().to_string()).or_insert(0) += 1;
        }
    }
    ConditionSummary {
        name: name.to_string(),
        trials: n,
        successes: trials.iter().filter(|t| t.success).count(),
        accuracy: trials.iter().filter(|t| t.correct).count() as f64 / nf,
        mean_cycles: mean,
        sd_cycles: var.sqrt(),
        mean_fixations: trials.iter().map(|t| t.fixations as f64).sum::<f64>() / nf,
        restarts: trials.iter().map(|t| t.restarts as u64).sum(),
        repairs: trials.iter().map(|t| t.repairs as u64).sum(),
        failures,
    }
}

/// Trial `i` of every condition uses random stream `i`, so conditions see
/// the same displays. Trials run on a thread pool; results are gathered by
/// index, so the report does not depend on scheduling.
pub fn run_experiment(
    config: &ExperimentConfig,
    library: &Library,
    h: &Hierarchy,
    runtime: &RuntimeConfig,
    seed: u64,
) -> Result<(ExperimentReport, Vec<Vec<TrialResult>>), HarnessError> {
    if config.conditions.is_empty() {
        return Err(HarnessError::EmptySuite);
    }
    if config.trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..config.conditions.len())
        .flat_map(|c| (0..config.trials as u64).map(move |t| (c, t)))
        .collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    let chunk = jobs.len().div_ceil(workers);
    let results: Vec<Result<TrialResult, HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&(c, t)| run_trial(library, &config.conditions[c].spec, h, runtime, seed, t))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("trial worker panicked"))
            .collect()
    });
    let mut per: Vec<Vec<TrialResult>> = vec![Vec::new(); config.conditions.len()];
    for (r, &(c, _)) in results.into_iter().zip(&jobs) {
        per[c].push(r?);
    }
    let conditions = config
        .conditions
        .iter()
        .zip(&per)
        .map(|(c, t)| summarize(&c.name, t))
        .collect();
    Ok((
        ExperimentReport {
            name: config.name.clone(),
            seed,
            conditions,
        },
        per,
    ))
}
