// SPDX-License-Identifier: Apache-2.0

//! OpenQASM 2.0 subset: `qreg`/`creg`, the qelib1 names of the IR gate set,
//! register broadcast, `measure`, `barrier` and `//` comments.
//! Gate definitions, `opaque`, `if` and `reset` are rejected.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

use super::FormatError;
use crate::circuit::{Circuit, GateKind, Instruction};

/// qelib1 gates that exist in the standard library but not in the IR.
const QELIB1_EXTRA: &[&str] = &[
    "u3", "u2", "u1", "u0", "u", "p", "id", "cy", "ch", "crx", "cry", "crz", "cu1", "cu3", "rzz", "rxx", "cswap", "sx",
    "sxdg", "c3x", "c4x", "rccx", "rc3x", "cp", "csx", "cu", "U",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, FormatError> {
    const SYMBOLS: &[&str] =
        &["->", "==", ";", ",", "[", "]", "(", ")", "{", "}", "+", "-", "*", "/", "^", ">", "<", "="];
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
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
        let (start_line, start_col) = (line, col);
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Spanned { tok: Tok::Ident(chars[s..i].iter().collect()), line: start_line, column: start_col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            let value = text.parse::<f64>().map_err(|_| FormatError::Syntax {
                line: start_line,
                column: start_col,
                expected: "number".into(),
                found: format!("'{text}'"),
            })?;
            out.push(Spanned { tok: Tok::Number(value), line: start_line, column: start_col });
            continue;
        }
        if c == '"' {
            let s = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(FormatError::Syntax {
                    line: start_line,
                    column: start_col,
                    expected: "closing '\"'".into(),
                    found: "end of line".into(),
                });
            }
            let text: String = chars[s..i].iter().collect();
            i += 1;
            col += i - s + 1;
            out.push(Spanned { tok: Tok::Str(text), line: start_line, column: start_col });
            continue;
        }
        let sym = SYMBOLS.iter().find(|sym| sym.chars().enumerate().all(|(k, sc)| chars.get(i + k) == Some(&sc)));
        match sym {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push(Spanned { tok: Tok::Sym(sym), line: start_line, column: start_col });
            }
            None => {
                return Err(FormatError::Syntax {
                    line: start_line,
                    column: start_col,
                    expected: "token".into(),
                    found: format!("'{c}'"),
                })
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

#[derive(Debug, Clone)]
struct Register {
    name: String,
    offset: usize,
    size: usize,
}

/// Operand: a whole register or one indexed element.
#[derive(Debug, Clone, Copy)]
enum Operand {
    Whole { offset: usize, size: usize },
    Single(usize),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    qregs: Vec<Register>,
    cregs: Vec<Register>,
    circuit: Circuit,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, expected: &str) -> FormatError {
        let t = self.peek();
        FormatError::Syntax { line: t.line, column: t.column, expected: expected.into(), found: t.tok.describe() }
    }

    fn expect_sym(&mut self, sym: &'static str) -> Result<(), FormatError> {
        if self.peek().tok == Tok::Sym(sym) {
            self.next();
            Ok(())
        } else {
            Err(self.syntax(&format!("'{sym}'")))
        }
    }

    fn eat_sym(&mut self, sym: &'static str) -> bool {
        if self.peek().tok == Tok::Sym(sym) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, FormatError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.syntax("identifier")),
        }
    }

    fn integer(&mut self) -> Result<usize, FormatError> {
        match self.peek().tok {
            Tok::Number(n) if n >= 0.0 && n.fract() == 0.0 && n < 1e15 => {
                self.next();
                Ok(n as usize)
            }
            _ => Err(self.syntax("non-negative integer")),
        }
    }

    fn semantic(&self, line: usize, message: String) -> FormatError {
        FormatError::Semantic { line: Some(line), message }
    }

    fn parse_program(&mut self) -> Result<(), FormatError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == "OPENQASM" => {
                self.next();
            }
            _ => return Err(self.syntax("'OPENQASM' version header")),
        }
        let version_tok = self.peek().clone();
        match version_tok.tok {
            Tok::Number(v) if (v - 2.0).abs() < 1e-9 => {
                self.next();
            }
            Tok::Number(v) => {
                return Err(FormatError::Unsupported {
                    construct: format!("OPENQASM {v}"),
                    line: Some(version_tok.line),
                })
            }
            _ => return Err(self.syntax("version number")),
        }
        self.expect_sym(";")?;
        while self.peek().tok != Tok::Eof {
            self.statement()?;
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<(), FormatError> {
        let start = self.peek().clone();
        let word = match &start.tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.syntax("statement")),
        };
        let unsupported =
            |construct: &str| FormatError::Unsupported { construct: construct.into(), line: Some(start.line) };
        match word.as_str() {
            "include" => {
                self.next();
                let file = match &self.peek().tok {
                    Tok::Str(s) => s.clone(),
                    _ => return Err(self.syntax("file name string")),
                };
                self.next();
                self.expect_sym(";")?;
                if file != "qelib1.inc" {
                    return Err(unsupported(&format!("include \"{file}\"")));
                }
                Ok(())
            }
            "qreg" | "creg" => {
                self.next();
                let name = self.ident()?;
                self.expect_sym("[")?;
                let size = self.integer()?;
                self.expect_sym("]")?;
                self.expect_sym(";")?;
                if size == 0 {
                    return Err(self.semantic(start.line, format!("register '{name}' has size 0")));
                }
                if self.qregs.iter().chain(&self.cregs).any(|r| r.name == name) {
                    return Err(self.semantic(start.line, format!("register '{name}' declared twice")));
                }
                if word == "qreg" {
                    let offset = self.circuit.num_qubits;
                    self.circuit.num_qubits += size;
                    self.qregs.push(Register { name, offset, size });
                } else {
                    let offset = self.circuit.num_clbits;
                    self.circuit.num_clbits += size;
                    self.cregs.push(Register { name, offset, size });
                }
                Ok(())
            }
            "gate" => Err(unsupported("gate definition")),
            "opaque" => Err(unsupported("opaque")),
            "if" => Err(unsupported("if")),
            "reset" => Err(unsupported("reset")),
            "OPENQASM" => Err(self.semantic(start.line, "duplicate version header".into())),
            "measure" => {
                self.next();
                let q = self.operand(true)?;
                self.expect_sym("->")?;
                let c = self.operand(false)?;
                self.expect_sym(";")?;
                match (q, c) {
                    (Operand::Single(q), Operand::Single(c)) => {
                        self.circuit.instructions.push(Instruction::measure(q, c));
                    }
                    (Operand::Whole { offset: qo, size: qs }, Operand::Whole { offset: co, size: cs }) => {
                        if qs != cs {
                            return Err(self.semantic(
                                start.line,
                                format!("measure broadcast over registers of sizes {qs} and {cs}"),
                            ));
                        }
                        for k in 0..qs {
                            self.circuit.instructions.push(Instruction::measure(qo + k, co + k));
                        }
                    }
                    _ => {
                        return Err(
                            self.semantic(start.line, "measure must pair two registers or two indexed bits".into())
                        )
                    }
                }
                Ok(())
            }
            "barrier" => {
                self.next();
                let ops = self.operand_list()?;
                self.expect_sym(";")?;
                let mut qubits = Vec::new();
                for op in ops {
                    match op {
                        Operand::Single(q) => qubits.push(q),
                        Operand::Whole { offset, size } => qubits.extend(offset..offset + size),
                    }
                }
                let mut seen = Vec::new();
                qubits.retain(|q| {
                    let fresh = !seen.contains(q);
                    seen.push(*q);
                    fresh
                });
                self.circuit.instructions.push(Instruction::barrier(&qubits));
                Ok(())
            }
            _ => self.gate_application(&start, &word),
        }
    }

    fn gate_application(&mut self, start: &Spanned, name: &str) -> Result<(), FormatError> {
        let kind = match name {
            "CX" => Some(GateKind::Cx),
            "measure" | "barrier" => None,
            _ => GateKind::from_name(name),
        };
        let kind = match kind {
            Some(k) => k,
            None if QELIB1_EXTRA.contains(&name) => {
                return Err(FormatError::Unsupported { construct: format!("gate {name}"), line: Some(start.line) })
            }
            None => return Err(self.semantic(start.line, format!("undefined gate '{name}'"))),
        };
        self.next();
        let mut params = Vec::new();
        if self.eat_sym("(") && !self.eat_sym(")") {
            loop {
                params.push(self.expr()?);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        if params.len() != kind.num_params() {
            return Err(self.semantic(
                start.line,
                format!("gate '{name}' takes {} parameters, got {}", kind.num_params(), params.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(self.semantic(start.line, format!("non-finite angle for gate '{name}'")));
        }
        let ops = self.operand_list()?;
        self.expect_sym(";")?;
        let arity = kind.arity().unwrap_or(1);
        if ops.len() != arity {
            return Err(
                self.semantic(start.line, format!("gate '{name}' takes {arity} qubit arguments, got {}", ops.len()))
            );
        }
        let mut broadcast: Option<usize> = None;
        for op in &ops {
            if let Operand::Whole { size, .. } = *op {
                match broadcast {
                    Some(s) if s != size => {
                        return Err(self.semantic(start.line, "broadcast over registers of different sizes".into()))
                    }
                    _ => broadcast = Some(size),
                }
            }
        }
        for k in 0..broadcast.unwrap_or(1) {
            let qubits: Vec<usize> = ops
                .iter()
                .map(|op| match *op {
                    Operand::Single(q) => q,
                    Operand::Whole { offset, .. } => offset + k,
                })
                .collect();
            self.circuit.instructions.push(Instruction { kind, params: params.clone(), qubits, clbits: Vec::new() });
        }
        Ok(())
    }

    fn operand_list(&mut self) -> Result<Vec<Operand>, FormatError> {
        let mut ops = vec![self.operand(true)?];
        while self.eat_sym(",") {
            ops.push(self.operand(true)?);
        }
        Ok(ops)
    }

    fn operand(&mut self, quantum: bool) -> Result<Operand, FormatError> {
        let line = self.peek().line;
        let name = self.ident()?;
        let regs = if quantum { &self.qregs } else { &self.cregs };
        let reg = match regs.iter().find(|r| r.name == name) {
            Some(r) => r.clone(),
            None => {
                let kind = if quantum { "qreg" } else { "creg" };
                return Err(self.semantic(line, format!("undeclared {kind} '{name}'")));
            }
        };
        if self.eat_sym("[") {
            let index = self.integer()?;
            self.expect_sym("]")?;
            if index >= reg.size {
                return Err(self
                    .semantic(line, format!("index {index} out of range for register '{name}' of size {}", reg.size)));
            }
            Ok(Operand::Single(reg.offset + index))
        } else {
            Ok(Operand::Whole { offset: reg.offset, size: reg.size })
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64, FormatError> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym("+") {
                v += self.term()?;
            } else if self.eat_sym("-") {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, FormatError> {
        let mut v = self.power()?;
        loop {
            if self.eat_sym("*") {
                v *= self.power()?;
            } else if self.eat_sym("/") {
                v /= self.power()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn power(&mut self) -> Result<f64, FormatError> {
        let base = self.unary()?;
        if self.eat_sym("^") {
            let exp = self.power()?;
            return Ok(base.powf(exp));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64, FormatError> {
        if self.eat_sym("-") {
            return Ok(-self.unary()?);
        }
        if self.eat_sym("+") {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<f64, FormatError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(n) => {
                self.next();
                Ok(n)
            }
            Tok::Sym("(") => {
                self.next();
                let v = self.expr()?;
                self.expect_sym(")")?;
                Ok(v)
            }
            Tok::Ident(ref name) if name == "pi" => {
                self.next();
                Ok(core::f64::consts::PI)
            }
            Tok::Ident(ref name) => {
                let f: fn(f64) -> f64 = match name.as_str() {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => return Err(self.syntax("expression")),
                };
                self.next();
                self.expect_sym("(")?;
                let v = self.expr()?;
                self.expect_sym(")")?;
                Ok(f(v))
            }
            _ => Err(self.syntax("expression")),
        }
    }
}

pub fn parse(src: &str) -> Result<Circuit, FormatError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, qregs: Vec::new(), cregs: Vec::new(), circuit: Circuit::default() };
    p.parse_program()?;
    Ok(p.circuit)
}

/// Emits one instruction per line with a single `q` and `c` register.
pub fn emit(circuit: &Circuit) -> String {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if !circuit.name.is_empty() && !circuit.name.contains('\n') {
        let _ = writeln!(out, "// name: {}", circuit.name);
    }
    if circuit.num_qubits > 0 {
        let _ = writeln!(out, "qreg q[{}];", circuit.num_qubits);
    }
    if circuit.num_clbits > 0 {
        let _ = writeln!(out, "creg c[{}];", circuit.num_clbits);
    }
    for inst in &circuit.instructions {
        if inst.kind == GateKind::Measure {
            let _ = writeln!(out, "measure q[{}] -> c[{}];", inst.qubits[0], inst.clbits[0]);
            continue;
        }
        out.push_str(inst.kind.name());
        if !inst.params.is_empty() {
            out.push('(');
            for (i, p) in inst.params.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{p:?}");
            }
            out.push(')');
        }
        out.push(' ');
        let operands: Vec<String> = inst.qubits.iter().map(|q| format!("q[{q}]")).collect();
        out.push_str(&operands.join(","));
        out.push_str(";\n");
    }
    out
}

/// Recovers the `// name:` comment written by [`emit`], if present.
pub(crate) fn name_comment(src: &str) -> Option<String> {
    src.lines().find_map(|l| l.trim().strip_prefix("// name: ").map(ToString::to_string))
}
