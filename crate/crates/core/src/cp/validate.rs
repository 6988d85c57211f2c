//! Semantic checks run before a program may execute.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{Block, Call, Cond, Pos, Program, Stmt, Value};
use super::registry::{lookup, Resource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticError {
    #[error("{pos}: unknown primitive `{name}`")]
    UnknownPrimitive { name: String, pos: Pos },
    #[error("{pos}: `{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        pos: Pos,
    },
    #[error("{pos}: unbound identifier `{ident}`")]
    Unbound { ident: String, pos: Pos },
    #[error("{pos}: `{name}` does not return a truth value")]
    NotCondition { name: String, pos: Pos },
    #[error("{pos}: while loop never advances the clock")]
    NonProgress { pos: Pos },
    #[error("par branches both touch {resource:?}")]
    ParConflict { resource: Resource },
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
}

impl SemanticError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            SemanticError::UnknownPrimitive { pos, .. }
            | SemanticError::Arity { pos, .. }
            | SemanticError::Unbound { pos, .. }
            | SemanticError::NotCondition { pos, .. }
            | SemanticError::NonProgress { pos } => Some(*pos),
            SemanticError::ParConflict { .. } | SemanticError::DuplicateParam(_) => None,
        }
    }
}

pub fn validate_cp(p: &Program) -> Result<(), Vec<SemanticError>> {
    let mut errors = Vec::new();
    let mut params = BTreeSet::new();
    for name in &p.params {
        if !params.insert(name.as_str()) {
            errors.push(SemanticError::DuplicateParam(name.clone()));
        }
    }
    let v = Validator { params };
    v.block(&p.body, &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

struct Validator<'a> {
    params: BTreeSet<&'a str>,
}

impl Validator<'_> {
    fn call(&self, c: &Call, as_cond: bool, errors: &mut Vec<SemanticError>) {
        let Some(prim) = lookup(&c.name) else {
            errors.push(SemanticError::UnknownPrimitive {
                name: c.name.clone(),
                pos: c.pos,
            });
            return;
        };
        if prim.arity != c.args.len() {
            errors.push(SemanticError::Arity {
                name: c.name.clone(),
                expected: prim.arity,
                got: c.args.len(),
                pos: c.pos,
            });
        }
        if as_cond && !prim.boolean {
            errors.push(SemanticError::NotCondition {
                name: c.name.clone(),
                pos: c.pos,
            });
        }
        for a in &c.args {
            if let Value::Ident(id) = a {
                if !self.params.contains(id.as_str()) {
                    errors.push(SemanticError::Unbound {
                        ident: id.clone(),
                        pos: c.pos,
                    });
                }
            }
        }
    }

    fn cond(&self, c: &Cond, errors: &mut Vec<SemanticError>) {
        for call in c.calls() {
            self.call(call, true, errors);
        }
    }

    fn block(&self, b: &Block, errors: &mut Vec<SemanticError>) {
        for s in b {
            match s {
                Stmt::Call(c) => self.call(c, false, errors),
                Stmt::Wait(_) => {}
                Stmt::If { cond, then, otherwise } => {
                    self.cond(cond, errors);
                    self.block(then, errors);
                    if let Some(o) = otherwise {
                        self.block(o, errors);
                    }
                }
                Stmt::While { cond, body, pos } => {
                    self.cond(cond, errors);
                    self.block(body, errors);
                    if cond_min_cost(cond) + block_min_cost(body) == 0 {
                        errors.push(SemanticError::NonProgress { pos: pos.0 });
                    }
                }
                Stmt::Par(a, b) => {
                    self.block(a, errors);
                    self.block(b, errors);
                    let (ra, rb) = (touched(a), touched(b));
                    for r in ra.intersection(&rb) {
                        errors.push(SemanticError::ParConflict { resource: *r });
                    }
                }
            }
        }
    }
}

fn call_min_cost(c: &Call) -> u64 {
    lookup(&c.name).map_or(0, |p| p.min_cost())
}

/// Cycles an evaluation is guaranteed to spend; `&&` short-circuits, so only
/// its first operand counts.
fn cond_min_cost(c: &Cond) -> u64 {
    match c {
        Cond::Lit(_) => 0,
        Cond::Call(c) => call_min_cost(c),
        Cond::Not(c) => cond_min_cost(c),
        Cond::And(ops) => ops.first().map_or(0, cond_min_cost),
    }
}

pub(crate) fn block_min_cost(b: &Block) -> u64 {
    b.iter()
        .map(|s| match s {
            Stmt::Call(c) => call_min_cost(c),
            Stmt::Wait(n) => *n,
            Stmt::If { cond, then, otherwise } => {
                cond_min_cost(cond)
                    + block_min_cost(then).min(otherwise.as_ref().map_or(0, block_min_cost))
            }
            Stmt::While { cond, .. } => cond_min_cost(cond),
            Stmt::Par(a, b) => block_min_cost(a).max(block_min_cost(b)),
        })
        .sum()
}

fn touched(b: &Block) -> BTreeSet<Resource> {
    super::ast::calls_in(b)
        .into_iter()
        .filter_map(|c| lookup(&c.name))
        .flat_map(|p| p.touches.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::parse::parse_cp;

    fn errs(src: &str) -> Vec<SemanticError> {
        validate_cp(&parse_cp(src).unwrap()).err().unwrap_or_default()
    }

    #[test]
    fn examples() {
        assert!(errs("cp w() { wait(5); }").is_empty());
        assert!(matches!(
            errs("cp t() { teleport(); }")[..],
            [SemanticError::UnknownPrimitive { .. }]
        ));
        assert!(matches!(
            errs("cp t() { while (true) { } }")[..],
            [SemanticError::NonProgress { .. }]
        ));
        assert!(errs("cp t() { while (true) { wait(1); } }").is_empty());
        assert!(matches!(
            errs("cp t() { prime(a, b); }")[..],
            [SemanticError::Arity { expected: 1, got: 2, .. }, SemanticError::Unbound { .. }, SemanticError::Unbound { .. }]
        ));
        assert!(matches!(
            errs("cp t() { par { prime(\"x\"); } { prime(\"y\"); } }")[..],
            [SemanticError::ParConflict { resource: Resource::PrimingGains }]
        ));
        assert!(matches!(
            errs("cp t() { if (emit(1)) { } }")[..],
            [SemanticError::NotCondition { .. }]
        ));
    }
}
