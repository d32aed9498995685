//! OpenQASM 2.0 subset: one quantum register, unitary gate calls, and inline
//! `gate` definitions.
//!
//! Accepted gate names and how they are normalized:
//!
//! | QASM name                  | op                        |
//! |----------------------------|---------------------------|
//! | `h x y z sx sy sw`         | same kind                 |
//! | `rx ry rz`                 | same kind                 |
//! | `p u1 phase`               | `P`                       |
//! | `s sdg t tdg`              | `P(±pi/2)`, `P(±pi/4)`    |
//! | `u3 U u` / `u2`            | `RZ(lambda) RY(theta) RZ(phi)` |
//! | `cx CX`, `cz`, `swap`      | same kind                 |
//! | `cp cu1 cphase`            | `CP`                      |
//! | `fsim(theta, phi)`         | `FSIM`                    |
//!
//! `sy`, `sw` and `fsim` are not in `qelib1.inc`; documents written by
//! [`emit_qasm`] use them as named gates with their parameters. `barrier`
//! is accepted and ignored. `include "qelib1.inc";` is ignored; anything
//! touching classical bits is rejected.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, GateKind, GateOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("syntax error at {line}:{col}: {message}")]
    SyntaxError { line: usize, col: usize, message: String },
    #[error("unsupported statement `{construct}` at {line}:{col}")]
    UnsupportedStatement { line: usize, col: usize, construct: String },
    #[error("unknown gate `{name}` at {line}:{col}")]
    UnknownGate { line: usize, col: usize, name: String },
    #[error("invalid gate application at {line}:{col}: {message}")]
    InvalidOperation { line: usize, col: usize, message: String },
}

impl QasmError {
    /// Line and column of the failure, 1-based.
    pub fn position(&self) -> (usize, usize) {
        match self {
            QasmError::SyntaxError { line, col, .. }
            | QasmError::UnsupportedStatement { line, col, .. }
            | QasmError::UnknownGate { line, col, .. }
            | QasmError::InvalidOperation { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Int(u64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 14] = ["->", "==", ";", ",", "(", ")", "[", "]", "{", "}", "+", "-", "*", "/"];

fn lex(text: &str) -> Result<Vec<Token>, QasmError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            let ch = chars[i];
            i += 1;
            if ch == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(QasmError::SyntaxError { line: tl, col: tc, message: "unterminated comment".into() });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if i < chars.len() && chars[i] == '.' {
                real = true;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    real = true;
                    while i < j {
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let tok = if real {
                s.parse::<f64>().map(Tok::Num)
                    .map_err(|_| QasmError::SyntaxError { line: tl, col: tc, message: format!("bad real `{s}`") })?
            } else {
                match s.parse::<u64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => Tok::Num(s.parse::<f64>().unwrap_or(f64::INFINITY)),
                }
            };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c == '"' {
            bump!();
            let start = i;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                bump!();
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(QasmError::SyntaxError { line: tl, col: tc, message: "unterminated string".into() });
            }
            let s = chars[start..i].iter().collect();
            bump!();
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s)).copied().or(match c {
            '^' => Some("^"),
            '>' => Some(">"),
            _ => None,
        });
        match sym {
            Some(s) => {
                for _ in s.chars() {
                    bump!();
                }
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => {
                return Err(QasmError::SyntaxError { line: tl, col: tc, message: format!("unexpected character `{c}`") })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Arithmetic over gate parameters.
#[derive(Debug, Clone)]
enum Expr {
    Num(f64),
    Param(usize),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(fn(f64) -> f64, Box<Expr>),
}

impl Expr {
    fn eval(&self, params: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Param(k) => params[*k],
            Expr::Neg(e) => -e.eval(params),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(params), b.eval(params));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Expr::Call(f, e) => f(e.eval(params)),
        }
    }
}

#[derive(Debug, Clone)]
struct Call {
    name: String,
    params: Vec<Expr>,
    args: Vec<usize>,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
struct GateDef {
    n_params: usize,
    n_args: usize,
    body: Vec<Call>,
}

/// A gate argument: one qubit or the whole register.
enum Arg {
    Index(u64, usize, usize),
    Register,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    defs: HashMap<String, GateDef>,
    reg: Option<(String, usize)>,
    circuit: Circuit,
}

fn builtin(name: &str, params: &[f64], qubits: &[usize]) -> Option<Result<Vec<GateOp>, String>> {
    use GateKind::*;
    let simple = |k: GateKind| GateOp::new(k, params.to_vec(), qubits.to_vec());
    let shape: (usize, usize) = match name {
        "h" | "x" | "y" | "z" | "sx" | "sy" | "sw" | "s" | "sdg" | "t" | "tdg" => (0, 1),
        "rx" | "ry" | "rz" | "p" | "u1" | "phase" => (1, 1),
        "u2" => (2, 1),
        "u3" | "U" | "u" => (3, 1),
        "cx" | "CX" | "cz" | "swap" => (0, 2),
        "cp" | "cu1" | "cphase" => (1, 2),
        "fsim" => (2, 2),
        _ => return None,
    };
    if params.len() != shape.0 || qubits.len() != shape.1 {
        return Some(Err(format!(
            "`{name}` takes {} parameters and {} qubits, got {} and {}",
            shape.0,
            shape.1,
            params.len(),
            qubits.len()
        )));
    }
    let q = qubits[0];
    let euler = |theta: f64, phi: f64, lambda: f64| {
        vec![GateOp::rot(RZ, lambda, q), GateOp::rot(RY, theta, q), GateOp::rot(RZ, phi, q)]
    };
    let ops = match name {
        "h" => vec![simple(H)],
        "x" => vec![simple(X)],
        "y" => vec![simple(Y)],
        "z" => vec![simple(Z)],
        "sx" => vec![simple(SX)],
        "sy" => vec![simple(SY)],
        "sw" => vec![simple(SW)],
        "s" => vec![GateOp::rot(P, FRAC_PI_2, q)],
        "sdg" => vec![GateOp::rot(P, -FRAC_PI_2, q)],
        "t" => vec![GateOp::rot(P, FRAC_PI_4, q)],
        "tdg" => vec![GateOp::rot(P, -FRAC_PI_4, q)],
        "rx" => vec![simple(RX)],
        "ry" => vec![simple(RY)],
        "rz" => vec![simple(RZ)],
        "p" | "u1" | "phase" => vec![simple(P)],
        "u2" => euler(FRAC_PI_2, params[0], params[1]),
        "u3" | "U" | "u" => euler(params[0], params[1], params[2]),
        "cx" | "CX" => vec![simple(CX)],
        "cz" => vec![simple(CZ)],
        "swap" => vec![simple(SWAP)],
        "cp" | "cu1" | "cphase" => vec![simple(CP)],
        _ => vec![simple(FSIM)],
    };
    Some(Ok(ops))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, message: impl Into<String>) -> Result<T, QasmError> {
        Err(QasmError::SyntaxError { line: t.line, col: t.col, message: message.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(v) => format!("`{v}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, sym: &'static str) -> Result<Token, QasmError> {
        let t = self.next();
        if t.tok == Tok::Sym(sym) {
            Ok(t)
        } else {
            self.err(&t, format!("expected `{sym}`, found {}", Self::describe(&t.tok)))
        }
    }

    fn eat(&mut self, sym: &'static str) -> bool {
        if self.peek().tok == Tok::Sym(sym) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, Token), QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => self.err(&t, format!("expected identifier, found {}", Self::describe(other))),
        }
    }

    fn int(&mut self) -> Result<u64, QasmError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(v),
            ref other => self.err(&t, format!("expected integer, found {}", Self::describe(other))),
        }
    }

    fn header(&mut self) -> Result<(), QasmError> {
        let (kw, t) = self.ident()?;
        if kw != "OPENQASM" {
            return self.err(&t, "document must start with `OPENQASM 2.0;`");
        }
        let v = self.next();
        let ok = match v.tok {
            Tok::Num(x) => x == 2.0,
            Tok::Int(x) => x == 2,
            _ => false,
        };
        if !ok {
            return self.err(&v, "only OpenQASM 2.0 is supported");
        }
        self.expect(";")?;
        Ok(())
    }

    fn parse(mut self) -> Result<Circuit, QasmError> {
        self.header()?;
        loop {
            let t = self.peek().clone();
            let Tok::Ident(word) = &t.tok else {
                if t.tok == Tok::Eof {
                    break;
                }
                return self.err(&t, format!("expected statement, found {}", Self::describe(&t.tok)));
            };
            match word.as_str() {
                "include" => {
                    self.next();
                    let f = self.next();
                    match &f.tok {
                        Tok::Str(s) if s == "qelib1.inc" => {}
                        Tok::Str(_) => {
                            return Err(QasmError::UnsupportedStatement {
                                line: t.line,
                                col: t.col,
                                construct: "include".into(),
                            })
                        }
                        other => return self.err(&f, format!("expected file name, found {}", Self::describe(other))),
                    }
                    self.expect(";")?;
                }
                "qreg" => {
                    self.next();
                    if self.reg.is_some() {
                        return Err(QasmError::UnsupportedStatement {
                            line: t.line,
                            col: t.col,
                            construct: "second qreg".into(),
                        });
                    }
                    let (name, _) = self.ident()?;
                    self.expect("[")?;
                    let size_tok = self.peek().clone();
                    let size = self.int()? as usize;
                    if size == 0 {
                        return self.err(&size_tok, "register size must be positive");
                    }
                    self.expect("]")?;
                    self.expect(";")?;
                    self.circuit.num_qubits = size;
                    self.reg = Some((name, size));
                }
                "gate" => self.gate_def()?,
                "barrier" => {
                    self.next();
                    while !self.eat(";") {
                        if self.peek().tok == Tok::Eof {
                            return self.err(&t, "unterminated barrier");
                        }
                        self.next();
                    }
                }
                "creg" | "measure" | "reset" | "opaque" | "if" => {
                    return Err(QasmError::UnsupportedStatement {
                        line: t.line,
                        col: t.col,
                        construct: word.clone(),
                    })
                }
                _ => self.application()?,
            }
        }
        if self.reg.is_none() {
            let t = self.peek().clone();
            return self.err(&t, "missing `qreg` declaration");
        }
        Ok(self.circuit)
    }

    fn ident_list(&mut self, close: &'static str) -> Result<Vec<String>, QasmError> {
        let mut names = Vec::new();
        if self.eat(close) {
            return Ok(names);
        }
        loop {
            names.push(self.ident()?.0);
            if self.eat(close) {
                return Ok(names);
            }
            self.expect(",")?;
        }
    }

    fn gate_def(&mut self) -> Result<(), QasmError> {
        self.next();
        let (name, name_tok) = self.ident()?;
        let params = if self.eat("(") { self.ident_list(")")? } else { Vec::new() };
        let mut args = vec![self.ident()?.0];
        while self.eat(",") {
            args.push(self.ident()?.0);
        }
        self.expect("{")?;
        let mut body = Vec::new();
        loop {
            let t = self.peek().clone();
            if self.eat("}") {
                break;
            }
            let (gname, _) = self.ident()?;
            if gname == "barrier" {
                while !self.eat(";") {
                    self.next();
                }
                continue;
            }
            let exprs = if self.eat("(") { self.expr_list(&params)? } else { Vec::new() };
            let mut call_args = Vec::new();
            loop {
                let (a, at) = self.ident()?;
                match args.iter().position(|x| *x == a) {
                    Some(k) => call_args.push(k),
                    None => return self.err(&at, format!("`{a}` is not an argument of gate `{name}`")),
                }
                if self.eat(";") {
                    break;
                }
                self.expect(",")?;
            }
            body.push(Call { name: gname, params: exprs, args: call_args, line: t.line, col: t.col });
        }
        // resolve names now so errors point into the definition
        for call in &body {
            let known = self.defs.contains_key(&call.name)
                || builtin(&call.name, &vec![0.0; call.params.len()], &(0..call.args.len()).collect::<Vec<_>>())
                    .is_some();
            if !known {
                return Err(QasmError::UnknownGate { line: call.line, col: call.col, name: call.name.clone() });
            }
        }
        if builtin(&name, &[], &[]).is_some() || self.defs.contains_key(&name) {
            return self.err(&name_tok, format!("gate `{name}` is already defined"));
        }
        self.defs.insert(name, GateDef { n_params: params.len(), n_args: args.len(), body });
        Ok(())
    }

    fn expr_list(&mut self, params: &[String]) -> Result<Vec<Expr>, QasmError> {
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr(params)?);
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn expr(&mut self, params: &[String]) -> Result<Expr, QasmError> {
        let mut lhs = self.term(params)?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym("+") => '+',
                Tok::Sym("-") => '-',
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term(params)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self, params: &[String]) -> Result<Expr, QasmError> {
        let mut lhs = self.unary(params)?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym("*") => '*',
                Tok::Sym("/") => '/',
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary(params)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self, params: &[String]) -> Result<Expr, QasmError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary(params)?)));
        }
        if self.eat("+") {
            return self.unary(params);
        }
        let base = self.atom(params)?;
        if self.eat("^") {
            let exp = self.unary(params)?;
            return Ok(Expr::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self, params: &[String]) -> Result<Expr, QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::Int(v) => Ok(Expr::Num(*v as f64)),
            Tok::Sym("(") => {
                let e = self.expr(params)?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "pi" => Ok(Expr::Num(PI)),
            Tok::Ident(s) => {
                if let Some(k) = params.iter().position(|p| p == s) {
                    return Ok(Expr::Param(k));
                }
                let f: fn(f64) -> f64 = match s.as_str() {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => return self.err(&t, format!("unknown identifier `{s}` in expression")),
                };
                self.expect("(")?;
                let e = self.expr(params)?;
                self.expect(")")?;
                Ok(Expr::Call(f, Box::new(e)))
            }
            other => self.err(&t, format!("expected expression, found {}", Self::describe(other))),
        }
    }

    fn argument(&mut self) -> Result<Arg, QasmError> {
        let (name, t) = self.ident()?;
        let Some((reg, _)) = &self.reg else {
            return self.err(&t, "gate applied before `qreg` declaration");
        };
        if name != *reg {
            return Err(QasmError::InvalidOperation {
                line: t.line,
                col: t.col,
                message: format!("unknown register `{name}`"),
            });
        }
        if self.eat("[") {
            let it = self.peek().clone();
            let idx = self.int()?;
            self.expect("]")?;
            Ok(Arg::Index(idx, it.line, it.col))
        } else {
            Ok(Arg::Register)
        }
    }

    fn application(&mut self) -> Result<(), QasmError> {
        let (name, t) = self.ident()?;
        let exprs = if self.eat("(") { self.expr_list(&[])? } else { Vec::new() };
        let params: Vec<f64> = exprs.iter().map(|e| e.eval(&[])).collect();
        let mut args = vec![self.argument()?];
        while self.eat(",") {
            args.push(self.argument()?);
        }
        self.expect(";")?;
        let size = self.reg.as_ref().map(|r| r.1).unwrap_or(0);
        for a in &args {
            if let Arg::Index(i, line, col) = *a {
                if i as usize >= size {
                    return Err(QasmError::InvalidOperation {
                        line,
                        col,
                        message: format!("index {i} out of range for register of size {size}"),
                    });
                }
            }
        }
        let broadcast = args.iter().any(|a| matches!(a, Arg::Register));
        let rounds = if broadcast { size } else { 1 };
        for k in 0..rounds {
            let qubits: Vec<usize> = args
                .iter()
                .map(|a| match a {
                    Arg::Index(i, ..) => *i as usize,
                    Arg::Register => k,
                })
                .collect();
            let ops = self.expand(&name, &params, &qubits, t.line, t.col, 0)?;
            self.circuit.ops.extend(ops);
        }
        Ok(())
    }

    fn expand(
        &self,
        name: &str,
        params: &[f64],
        qubits: &[usize],
        line: usize,
        col: usize,
        depth: usize,
    ) -> Result<Vec<GateOp>, QasmError> {
        let invalid = |message: String| QasmError::InvalidOperation { line, col, message };
        if depth > 64 {
            return Err(invalid("gate definitions nest too deeply".into()));
        }
        let mut seen = qubits.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("`{name}` applied to a repeated qubit")));
        }
        if let Some(def) = self.defs.get(name) {
            if def.n_params != params.len() || def.n_args != qubits.len() {
                return Err(invalid(format!(
                    "`{name}` takes {} parameters and {} qubits, got {} and {}",
                    def.n_params,
                    def.n_args,
                    params.len(),
                    qubits.len()
                )));
            }
            let mut ops = Vec::new();
            for call in &def.body {
                let p: Vec<f64> = call.params.iter().map(|e| e.eval(params)).collect();
                let q: Vec<usize> = call.args.iter().map(|&k| qubits[k]).collect();
                ops.extend(self.expand(&call.name, &p, &q, call.line, call.col, depth + 1)?);
            }
            return Ok(ops);
        }
        match builtin(name, params, qubits) {
            Some(Ok(ops)) => Ok(ops),
            Some(Err(message)) => Err(invalid(message)),
            None => Err(QasmError::UnknownGate { line, col, name: name.to_string() }),
        }
    }
}

/// Parses a document into a circuit whose size is the `qreg` size.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let toks = lex(text)?;
    let parser = Parser { toks, pos: 0, defs: HashMap::new(), reg: None, circuit: Circuit::new(0) };
    parser.parse()
}

/// Real literal with 17 significant digits.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Deterministic document for `c`. Parameters are written with 17
/// significant digits, so [`parse_qasm`] recovers every op exactly.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    let _ = writeln!(out, "qreg q[{}];", c.num_qubits);
    for op in &c.ops {
        out.push_str(op.kind.qasm_name());
        if !op.params.is_empty() {
            let ps: Vec<String> = op.params.iter().map(|&p| real(p)).collect();
            let _ = write!(out, "({})", ps.join(","));
        }
        let qs: Vec<String> = op.qubits.iter().map(|q| format!("q[{q}]")).collect();
        let _ = writeln!(out, " {};", qs.join(","));
    }
    out
}
