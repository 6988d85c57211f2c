//! Syntax tree for cognitive programs. Source positions are carried for
//! diagnostics but ignored by equality, so a reprinted program compares equal.

use std::fmt;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Str(String),
    Ident(String),
}

#[derive(Debug, Clone)]
pub struct Call {
    pub name: String,
    pub args: Vec<Value>,
    pub pos: Pos,
}

impl PartialEq for Call {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.args == other.args
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Lit(bool),
    Call(Call),
    Not(Box<Cond>),
    /// Flattened conjunction, at least two operands, none of them `And`.
    And(Vec<Cond>),
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Call(Call),
    If {
        cond: Cond,
        then: Block,
        otherwise: Option<Block>,
    },
    While {
        cond: Cond,
        body: Block,
        pos: PosEq,
    },
    Par(Block, Block),
    Wait(u64),
}

/// A position that always compares equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct PosEq(pub Pos);

impl PartialEq for PosEq {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
}

impl Cond {
    pub fn and(a: Cond, b: Cond) -> Cond {
        let mut ops = Vec::new();
        for c in [a, b] {
            match c {
                Cond::And(v) => ops.extend(v),
                c => ops.push(c),
            }
        }
        Cond::And(ops)
    }

    pub fn calls(&self) -> Vec<&Call> {
        match self {
            Cond::Lit(_) => vec![],
            Cond::Call(c) => vec![c],
            Cond::Not(c) => c.calls(),
            Cond::And(v) => v.iter().flat_map(|c| c.calls()).collect(),
        }
    }
}

/// Every call in `block`, in source order, conditions included.
pub fn calls_in(block: &[Stmt]) -> Vec<&Call> {
    let mut out = Vec::new();
    for s in block {
        match s {
            Stmt::Call(c) => out.push(c),
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                out.extend(cond.calls());
                out.extend(calls_in(then));
                if let Some(o) = otherwise {
                    out.extend(calls_in(o));
                }
            }
            Stmt::While { cond, body, .. } => {
                out.extend(cond.calls());
                out.extend(calls_in(body));
            }
            Stmt::Par(a, b) => {
                out.extend(calls_in(a));
                out.extend(calls_in(b));
            }
            Stmt::Wait(_) => {}
        }
    }
    out
}
