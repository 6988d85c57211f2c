//! Lexer and recursive-descent parser for CP source.

use thiserror::Error;

use super::ast::{Block, Call, Cond, Pos, PosEq, Program, Stmt, Value};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Real(r) => format!("`{r}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    })
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let start = i;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut real = false;
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if matches!(chars.get(i), Some('e' | 'E')) {
                let mut j = i + 1;
                if matches!(chars.get(j), Some('+' | '-')) {
                    j += 1;
                }
                if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                    real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if real {
                match text.parse() {
                    Ok(v) => Tok::Real(v),
                    Err(_) => return err(pos, format!("bad number `{text}`")),
                }
            } else {
                match text.parse() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => return err(pos, format!("integer `{text}` out of range")),
                }
            }
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return err(pos, "unterminated string"),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => {
                                return err(
                                    Pos { line, col: col + (i - start) },
                                    "unknown escape in string",
                                )
                            }
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            Tok::Str(s)
        } else if c == '&' && chars.get(i + 1) == Some(&'&') {
            i += 2;
            Tok::Punct("&&")
        } else {
            let p = match c {
                '(' => "(",
                ')' => ")",
                '{' => "{",
                '}' => "}",
                ',' => ",",
                ';' => ";",
                '!' => "!",
                _ => return err(pos, format!("unexpected character {c:?}")),
            };
            i += 1;
            Tok::Punct(p)
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["cp", "if", "else", "while", "par", "wait", "true", "false"];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect(&mut self, p: &str, ctx: &str) -> Result<Pos, ParseError> {
        if self.is_punct(p) {
            Ok(self.bump().1)
        } else {
            err(
                self.pos(),
                format!("expected `{p}` {ctx}, found {}", self.peek().describe()),
            )
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let (_, p) = self.bump();
                Ok((s, p))
            }
            t => err(self.pos(), format!("expected {what}, found {}", t.describe())),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        if !self.is_kw("cp") {
            return err(self.pos(), format!("expected `cp`, found {}", self.peek().describe()));
        }
        self.bump();
        let (name, _) = self.ident("program name")?;
        self.expect("(", "after program name")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                params.push(self.ident("parameter name")?.0);
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(")", "to close the parameter list")?;
        let body = self.block()?;
        if *self.peek() != Tok::Eof {
            return err(self.pos(), format!("unexpected {} after program", self.peek().describe()));
        }
        Ok(Program { name, params, body })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect("{", "to open a block")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return err(self.pos(), "unclosed block");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        if self.is_kw("if") {
            self.bump();
            self.expect("(", "after `if`")?;
            let cond = self.cond()?;
            self.expect(")", "to close the condition")?;
            let then = self.block()?;
            let otherwise = if self.is_kw("else") {
                self.bump();
                Some(self.block()?)
            } else {
                None
            };
            return Ok(Stmt::If { cond, then, otherwise });
        }
        if self.is_kw("while") {
            let pos = self.bump().1;
            self.expect("(", "after `while`")?;
            let cond = self.cond()?;
            self.expect(")", "to close the condition")?;
            let body = self.block()?;
            return Ok(Stmt::While { cond, body, pos: PosEq(pos) });
        }
        if self.is_kw("par") {
            self.bump();
            let a = self.block()?;
            let b = self.block()?;
            return Ok(Stmt::Par(a, b));
        }
        if self.is_kw("wait") {
            self.bump();
            self.expect("(", "after `wait`")?;
            let n = match self.peek().clone() {
                Tok::Int(n) if n >= 0 => {
                    self.bump();
                    n as u64
                }
                t => return err(self.pos(), format!("wait needs a non-negative integer, found {}", t.describe())),
            };
            self.expect(")", "to close `wait`")?;
            self.expect(";", "after statement")?;
            return Ok(Stmt::Wait(n));
        }
        let call = self.call()?;
        self.expect(";", "after statement")?;
        Ok(Stmt::Call(call))
    }

    fn call(&mut self) -> Result<Call, ParseError> {
        self.call_as("statement")
    }

    fn call_as(&mut self, what: &str) -> Result<Call, ParseError> {
        let (name, pos) = self.ident(what)?;
        self.expect("(", &format!("after `{name}`"))?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.value()?);
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(")", &format!("to close the call to `{name}`"))?;
        Ok(Call { name, args, pos })
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let v = match self.peek().clone() {
            Tok::Int(i) => Value::Int(i),
            Tok::Real(r) => Value::Real(r),
            Tok::Str(s) => Value::Str(s),
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Value::Ident(s),
            t => return err(self.pos(), format!("expected an argument, found {}", t.describe())),
        };
        self.bump();
        Ok(v)
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let mut c = self.cond_atom()?;
        while self.is_punct("&&") {
            self.bump();
            let rhs = self.cond_atom()?;
            c = Cond::and(c, rhs);
        }
        Ok(c)
    }

    fn cond_atom(&mut self) -> Result<Cond, ParseError> {
        if self.is_punct("!") {
            self.bump();
            return Ok(Cond::Not(Box::new(self.cond_atom()?)));
        }
        if self.is_punct("(") {
            self.bump();
            let c = self.cond()?;
            self.expect(")", "to close the condition")?;
            return Ok(c);
        }
        if self.is_kw("true") || self.is_kw("false") {
            let (t, _) = self.bump();
            return Ok(Cond::Lit(t == Tok::Ident("true".into())));
        }
        Ok(Cond::Call(self.call_as("condition")?))
    }
}

pub fn parse_cp(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    Parser { toks, at: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program() {
        let p = parse_cp("cp empty() { }").unwrap();
        assert_eq!(p.name, "empty");
        assert!(p.params.is_empty() && p.body.is_empty());
    }

    #[test]
    fn unclosed_call_is_located() {
        let e = parse_cp("cp bad() { prime( }").unwrap_err();
        assert_eq!((e.line, e.col), (1, 19));
        let e = parse_cp("cp bad() {\n  wait(3)\n}").unwrap_err();
        assert_eq!((e.line, e.col), (3, 1));
    }

    #[test]
    fn conditions_and_values() {
        let p = parse_cp(
            "cp c(k) { if (!match(k) && detect(\"a b\") && true) { wait(1); } else { set_param(\"theta\", -0.5e1); } }",
        )
        .unwrap();
        match &p.body[0] {
            Stmt::If { cond: Cond::And(ops), otherwise: Some(o), .. } => {
                assert_eq!(ops.len(), 3);
                assert!(matches!(ops[0], Cond::Not(_)));
                assert_eq!(ops[2], Cond::Lit(true));
                match &o[0] {
                    Stmt::Call(c) => assert_eq!(c.args[1], Value::Real(-5.0)),
                    s => panic!("{s:?}"),
                }
            }
            s => panic!("{s:?}"),
        }
    }
}
