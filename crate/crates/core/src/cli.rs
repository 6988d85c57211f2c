//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 the run itself failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::cp::{emit_trace, load_cp, CpError, RuntimeConfig, TraceFormat};
use crate::executive::{Library, TaskSpec, FIXTURES};
use crate::harness::{dry_run, fixations_csv, run_experiment, run_trial, ExperimentConfig, HarnessError};
use crate::harness::runner::runner_comparison;
use crate::hierarchy::{Hierarchy, HierarchyConfig};
use crate::oracle::{claims_csv, claims_filtered, claims_text};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Program { path: String, source: CpError },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Harness(
                HarnessError::Config(_) | HarnessError::Io { .. } | HarnessError::Executive(_) | HarnessError::EmptySuite,
            ) => 1,
            CliError::Harness(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed (default 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "attend", version, about = "Attentional control simulation kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial of a task and write its report, trace and fixations.
    RunTask {
        task: PathBuf,
        /// Program to use instead of the library default.
        #[arg(long)]
        cp: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Run every condition of an experiment file.
    RunSuite {
        experiment: PathBuf,
        /// Override the file's trials per condition.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the claims table.
    Oracle {
        /// Keep claims whose id contains this text.
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// One execution of a program against a task, no monitoring or repair.
    Trace {
        cp: PathBuf,
        task: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Endless-runner comparison against a random policy.
    Runner {
        #[arg(long)]
        cp: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 200)]
        length: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Writes through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_task(path: &Path) -> Result<TaskSpec, CliError> {
    TaskSpec::from_toml(&read(path)?).map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })
}

fn load_program(path: &Path) -> Result<crate::cp::Program, CliError> {
    load_cp(&read(path)?).map_err(|source| CliError::Program { path: path.display().to_string(), source })
}

fn out_dir(common: &Common) -> Result<Option<&Path>, CliError> {
    match &common.out {
        Some(d) => {
            fs::create_dir_all(d).map_err(|source| CliError::Io { path: d.display().to_string(), source })?;
            Ok(Some(d))
        }
        None => Ok(None),
    }
}

/// Library with `cp` (if any) added and selected for `spec`.
fn with_program(spec: &mut TaskSpec, cp: Option<&Path>) -> Result<Library, CliError> {
    let mut lib = Library::builtin();
    if let Some(path) = cp {
        let p = load_program(path)?;
        spec.cp = Some(p.name.clone());
        lib.insert(&p.name.clone(), p);
    }
    Ok(lib)
}

/// Runs a parsed command, returning stdout text and the exit code.
pub fn execute(cli: Cli) -> Result<(String, i32), CliError> {
    let h = Hierarchy::new(HierarchyConfig::default()).expect("default hierarchy is valid");
    let config = RuntimeConfig::default();
    match cli.command {
        Command::RunTask { task, cp, trial, common } => {
            let mut spec = load_task(&task)?;
            let lib = with_program(&mut spec, cp.as_deref())?;
            let seed = common.seed.unwrap_or(DEFAULT_SEED);
            let r = run_trial(&lib, &spec, &h, &config, seed, trial)?;
            let report = match common.format {
                Format::Csv => r.to_csv(),
                Format::Text => r.to_text(),
            };
            let dir = out_dir(&common)?.unwrap_or(Path::new("."));
            write_atomic(&dir.join(format!("{}_report.{}", spec.name, common.format.ext())), &report)?;
            write_atomic(&dir.join(format!("{}_trace.csv", spec.name)), &emit_trace(&r.trace, TraceFormat::Csv))?;
            write_atomic(&dir.join(format!("{}_fixations.csv", spec.name)), &fixations_csv(&r.fixation_log))?;
            Ok((report, if r.success { 0 } else { 2 }))
        }
        Command::RunSuite { experiment, trials, common } => {
            let mut cfg = ExperimentConfig::load(&experiment)?;
            if let Some(n) = trials {
                cfg.trials = n;
            }
            let seed = common.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let (report, _) = run_experiment(&cfg, &Library::builtin(), &h, &config, seed)?;
            let text = match common.format {
                Format::Csv => report.to_csv(),
                Format::Text => report.to_text(),
            };
            let dir = out_dir(&common)?.unwrap_or(Path::new("."));
            write_atomic(&dir.join(format!("{}_report.{}", cfg.name, common.format.ext())), &text)?;
            write_atomic(&dir.join(format!("{}_report.json", cfg.name)), &report.to_json())?;
            Ok((text, 0))
        }
        Command::Oracle { filter, common } => {
            let claims = claims_filtered(filter.as_deref());
            if claims.is_empty() {
                return Err(CliError::Usage(format!("no claim matches '{}'", filter.unwrap_or_default())));
            }
            let text = match common.format {
                Format::Csv => claims_csv(&claims),
                Format::Text => claims_text(&claims),
            };
            if let Some(dir) = out_dir(&common)? {
                write_atomic(&dir.join(format!("claims.{}", common.format.ext())), &text)?;
            }
            Ok((text, 0))
        }
        Command::Trace { cp, task, trial, common } => {
            let mut spec = load_task(&task)?;
            let lib = with_program(&mut spec, Some(&cp))?;
            let trace = dry_run(&lib, &spec, &h, &config, common.seed.unwrap_or(DEFAULT_SEED), trial)?;
            let text = emit_trace(
                &trace,
                match common.format {
                    Format::Csv => TraceFormat::Csv,
                    Format::Text => TraceFormat::Text,
                },
            );
            if let Some(dir) = out_dir(&common)? {
                write_atomic(&dir.join(format!("{}_trace.{}", spec.name, common.format.ext())), &text)?;
            }
            Ok((text, 0))
        }
        Command::Runner { cp, episodes, length, common } => {
            let program = match cp {
                Some(path) => load_program(&path)?,
                None => {
                    let src = FIXTURES.iter().find(|(n, _)| *n == "runner").expect("runner fixture").1;
                    load_cp(src).expect("runner fixture is valid")
                }
            };
            if episodes == 0 {
                return Err(CliError::Usage("--episodes must be at least 1".into()));
            }
            let report = runner_comparison(&program, common.seed.unwrap_or(DEFAULT_SEED), episodes, length);
            let text = match common.format {
                Format::Csv => report.to_csv(),
                Format::Text => report.to_text(),
            };
            if let Some(dir) = out_dir(&common)? {
                write_atomic(&dir.join(format!("runner.{}", common.format.ext())), &text)?;
            }
            Ok((text, 0))
        }
    }
}

/// Parses `args` and runs; prints to stdout/stderr and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok((text, code)) => {
            print!("{text}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
