//! The cognitive-program language: syntax, checking, and execution over
//! simulated time.

pub mod ast;
pub mod interp;
pub mod parse;
pub mod print;
pub mod registry;
pub mod trace;
pub mod validate;

use thiserror::Error;

pub use ast::{Call, Cond, Pos, Program, Stmt, Value};
pub use interp::{decision_cycles, execute_cp, CpOutcome, CpRuntime, Failure, Fixation, RuntimeConfig};
pub use parse::{parse_cp, ParseError};
pub use print::pretty_print;
pub use trace::{emit_trace, ControlSignal, SignalTrace, TraceFormat};
pub use validate::{validate_cp, SemanticError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Semantic(Vec<SemanticError>),
}

impl CpError {
    /// Where the first problem is, when it has a place.
    pub fn location(&self) -> Option<Pos> {
        match self {
            CpError::Parse(e) => Some(Pos { line: e.line, col: e.col }),
            CpError::Semantic(es) => es.iter().find_map(SemanticError::pos),
        }
    }
}

/// Parses and validates.
pub fn load_cp(text: &str) -> Result<Program, CpError> {
    let p = parse_cp(text)?;
    validate_cp(&p).map_err(CpError::Semantic)?;
    Ok(p)
}
