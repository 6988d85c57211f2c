//! Canonical pretty-printer. Its output is the normative formatting and always
//! re-parses to an equal program.

use std::fmt::Write;

use super::ast::{Block, Call, Cond, Program, Stmt, Value};

pub fn pretty_print(p: &Program) -> String {
    let mut s = format!("cp {}({}) ", p.name, p.params.join(", "));
    block(&mut s, &p.body, 0);
    s.push('\n');
    s
}

pub fn value(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Real(r) => format!("{r:?}"),
        Value::Str(s) => {
            let mut out = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        Value::Ident(s) => s.clone(),
    }
}

pub fn call(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(value).collect();
    format!("{}({})", c.name, args.join(", "))
}

pub fn cond(c: &Cond) -> String {
    match c {
        Cond::Lit(b) => b.to_string(),
        Cond::Call(c) => call(c),
        Cond::Not(inner) => match **inner {
            Cond::And(_) => format!("!({})", cond(inner)),
            _ => format!("!{}", cond(inner)),
        },
        Cond::And(ops) => ops.iter().map(cond).collect::<Vec<_>>().join(" && "),
    }
}

fn block(s: &mut String, b: &Block, depth: usize) {
    s.push_str("{\n");
    for st in b {
        stmt(s, st, depth + 1);
    }
    indent(s, depth);
    s.push('}');
}

fn indent(s: &mut String, depth: usize) {
    for _ in 0..depth {
        s.push_str("    ");
    }
}

fn stmt(s: &mut String, st: &Stmt, depth: usize) {
    indent(s, depth);
    match st {
        Stmt::Call(c) => {
            let _ = writeln!(s, "{};", call(c));
        }
        Stmt::Wait(n) => {
            let _ = writeln!(s, "wait({n});");
        }
        Stmt::If { cond: c, then, otherwise } => {
            let _ = write!(s, "if ({}) ", cond(c));
            block(s, then, depth);
            if let Some(o) = otherwise {
                s.push_str(" else ");
                block(s, o, depth);
            }
            s.push('\n');
        }
        Stmt::While { cond: c, body, .. } => {
            let _ = write!(s, "while ({}) ", cond(c));
            block(s, body, depth);
            s.push('\n');
        }
        Stmt::Par(a, b) => {
            s.push_str("par ");
            block(s, a, depth);
            s.push(' ');
            block(s, b, depth);
            s.push('\n');
        }
    }
}
