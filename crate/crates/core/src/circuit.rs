// SPDX-License-Identifier: Apache-2.0

//! Provider-neutral circuit representation.
//!
//! A [`Circuit`] is a flat list of [`Instruction`]s over a single register of
//! qubits and a single register of classical bits. Measurements are terminal:
//! once a qubit is measured no further gate may act on it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Absolute tolerance used when comparing rotation angles structurally.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

/// Every instruction kind the IR understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Swap,
    Ccx,
    Measure,
    Barrier,
}

impl GateKind {
    pub const ALL: [GateKind; 17] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Ccx,
        GateKind::Measure,
        GateKind::Barrier,
    ];

    /// Lower-case mnemonic shared by both wire formats.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Ccx => "ccx",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Number of qubits the kind acts on; `None` for the variadic barrier.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap => Some(2),
            GateKind::Ccx => Some(3),
            GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 0,
        }
    }

    /// True for unitary gates, i.e. everything except measure and barrier.
    pub fn is_gate(self) -> bool {
        !matches!(self, GateKind::Measure | GateKind::Barrier)
    }

    pub fn is_two_qubit(self) -> bool {
        self.arity() == Some(2)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clbits: Vec<usize>,
}

impl Instruction {
    pub fn gate(kind: GateKind, qubits: &[usize]) -> Self {
        Instruction { kind, params: Vec::new(), qubits: qubits.to_vec(), clbits: Vec::new() }
    }

    pub fn rotation(kind: GateKind, angle: f64, qubit: usize) -> Self {
        Instruction { kind, params: vec![angle], qubits: vec![qubit], clbits: Vec::new() }
    }

    pub fn measure(qubit: usize, clbit: usize) -> Self {
        Instruction { kind: GateKind::Measure, params: Vec::new(), qubits: vec![qubit], clbits: vec![clbit] }
    }

    pub fn barrier(qubits: &[usize]) -> Self {
        Instruction::gate(GateKind::Barrier, qubits)
    }

    /// Structural equality with the angle tolerance applied to parameters.
    pub fn approx_eq(&self, other: &Instruction) -> bool {
        self.kind == other.kind
            && self.qubits == other.qubits
            && self.clbits == other.clbits
            && self.params.len() == other.params.len()
            && self.params.iter().zip(&other.params).all(|(a, b)| (a - b).abs() <= ANGLE_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub num_qubits: usize,
    pub num_clbits: usize,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize, num_clbits: usize) -> Self {
        Circuit { name: String::new(), num_qubits, num_clbits, instructions: Vec::new() }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn push(&mut self, instruction: Instruction) -> &mut Self {
        self.instructions.push(instruction);
        self
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::X, &[q]))
    }

    pub fn y(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Y, &[q]))
    }

    pub fn z(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Z, &[q]))
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::H, &[q]))
    }

    pub fn s(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::S, &[q]))
    }

    pub fn sdg(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Sdg, &[q]))
    }

    pub fn t(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::T, &[q]))
    }

    pub fn tdg(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Tdg, &[q]))
    }

    pub fn rx(&mut self, theta: f64, q: usize) -> &mut Self {
        self.push(Instruction::rotation(GateKind::Rx, theta, q))
    }

    pub fn ry(&mut self, theta: f64, q: usize) -> &mut Self {
        self.push(Instruction::rotation(GateKind::Ry, theta, q))
    }

    pub fn rz(&mut self, theta: f64, q: usize) -> &mut Self {
        self.push(Instruction::rotation(GateKind::Rz, theta, q))
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Cx, &[control, target]))
    }

    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Cz, &[a, b]))
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Swap, &[a, b]))
    }

    pub fn ccx(&mut self, c0: usize, c1: usize, target: usize) -> &mut Self {
        self.push(Instruction::gate(GateKind::Ccx, &[c0, c1, target]))
    }

    pub fn measure(&mut self, q: usize, c: usize) -> &mut Self {
        self.push(Instruction::measure(q, c))
    }

    pub fn barrier(&mut self, qubits: &[usize]) -> &mut Self {
        self.push(Instruction::barrier(qubits))
    }

    /// Measures qubit `i` into clbit `i` for every qubit, growing the
    /// classical register if needed.
    pub fn measure_all(&mut self) -> &mut Self {
        self.num_clbits = self.num_clbits.max(self.num_qubits);
        for q in 0..self.num_qubits {
            self.instructions.push(Instruction::measure(q, q));
        }
        self
    }

    pub fn width(&self) -> usize {
        self.num_qubits
    }

    /// Length of the longest chain of instructions linked by shared qubits.
    /// Barriers synchronize the qubits they span without adding a layer.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for inst in &self.instructions {
            let reach = inst.qubits.iter().filter_map(|&q| level.get(q).copied()).max().unwrap_or(0);
            let next = if inst.kind == GateKind::Barrier { reach } else { reach + 1 };
            for &q in &inst.qubits {
                if let Some(l) = level.get_mut(q) {
                    *l = next;
                }
            }
            depth = depth.max(next);
        }
        depth
    }

    /// Copy of the circuit with measurements and barriers removed.
    pub fn gates_only(&self) -> Circuit {
        Circuit {
            name: self.name.clone(),
            num_qubits: self.num_qubits,
            num_clbits: 0,
            instructions: self.instructions.iter().filter(|i| i.kind.is_gate()).cloned().collect(),
        }
    }

    /// `(qubit, clbit)` pairs of every measurement, in program order.
    pub fn measurements(&self) -> Vec<(usize, usize)> {
        self.instructions.iter().filter(|i| i.kind == GateKind::Measure).map(|i| (i.qubits[0], i.clbits[0])).collect()
    }

    pub fn has_measurements(&self) -> bool {
        self.instructions.iter().any(|i| i.kind == GateKind::Measure)
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.instructions.iter().filter(|i| i.kind == kind).count()
    }

    /// Structural equality: same registers and instructions, angles compared
    /// with [`ANGLE_TOLERANCE`]. The name is not part of the structure.
    pub fn structurally_eq(&self, other: &Circuit) -> bool {
        self.num_qubits == other.num_qubits
            && self.num_clbits == other.num_clbits
            && self.instructions.len() == other.instructions.len()
            && self.instructions.iter().zip(&other.instructions).all(|(a, b)| a.approx_eq(b))
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    WrongArity { instruction: usize, expected: usize, found: usize },
    WrongParamCount { instruction: usize, expected: usize, found: usize },
    DuplicateQubit { instruction: usize, qubit: usize },
    QubitOutOfRange { instruction: usize, qubit: usize },
    ClbitOutOfRange { instruction: usize, clbit: usize },
    UnexpectedClbits { instruction: usize },
    NonFiniteAngle { instruction: usize },
    NonTerminalMeasurement { instruction: usize, qubit: usize },
    DuplicateClbitWrite { instruction: usize, clbit: usize },
}

impl Violation {
    pub fn instruction(&self) -> usize {
        match *self {
            Violation::WrongArity { instruction, .. }
            | Violation::WrongParamCount { instruction, .. }
            | Violation::DuplicateQubit { instruction, .. }
            | Violation::QubitOutOfRange { instruction, .. }
            | Violation::ClbitOutOfRange { instruction, .. }
            | Violation::UnexpectedClbits { instruction }
            | Violation::NonFiniteAngle { instruction }
            | Violation::NonTerminalMeasurement { instruction, .. }
            | Violation::DuplicateClbitWrite { instruction, .. } => instruction,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::WrongArity { instruction, expected, found } => {
                write!(f, "wrong arity in instruction {instruction}: expected {expected} operands, found {found}")
            }
            Violation::WrongParamCount { instruction, expected, found } => {
                write!(f, "wrong parameter count in instruction {instruction}: expected {expected}, found {found}")
            }
            Violation::DuplicateQubit { instruction, .. } => {
                write!(f, "duplicate qubit in instruction {instruction}")
            }
            Violation::QubitOutOfRange { instruction, qubit } => {
                write!(f, "qubit {qubit} out of range in instruction {instruction}")
            }
            Violation::ClbitOutOfRange { instruction, clbit } => {
                write!(f, "clbit {clbit} out of range in instruction {instruction}")
            }
            Violation::UnexpectedClbits { instruction } => {
                write!(f, "classical operands on non-measure instruction {instruction}")
            }
            Violation::NonFiniteAngle { instruction } => {
                write!(f, "non-finite angle in instruction {instruction}")
            }
            Violation::NonTerminalMeasurement { instruction, qubit } => {
                write!(f, "non-terminal measurement: instruction {instruction} acts on measured qubit {qubit}")
            }
            Violation::DuplicateClbitWrite { instruction, clbit } => {
                write!(f, "clbit {clbit} written twice, again in instruction {instruction}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every circuit invariant. Total: never panics on any input.
pub fn validate(circuit: &Circuit) -> ValidationReport {
    let mut violations = Vec::new();
    let mut measured = vec![false; circuit.num_qubits];
    let mut written = vec![false; circuit.num_clbits];

    for (idx, inst) in circuit.instructions.iter().enumerate() {
        let found = inst.qubits.len();
        match inst.kind.arity() {
            Some(expected) if expected != found => {
                violations.push(Violation::WrongArity { instruction: idx, expected, found })
            }
            None if found == 0 => violations.push(Violation::WrongArity { instruction: idx, expected: 1, found }),
            _ => {}
        }
        let expected_params = inst.kind.num_params();
        if inst.params.len() != expected_params {
            violations.push(Violation::WrongParamCount {
                instruction: idx,
                expected: expected_params,
                found: inst.params.len(),
            });
        }
        if inst.params.iter().any(|p| !p.is_finite()) {
            violations.push(Violation::NonFiniteAngle { instruction: idx });
        }
        for (i, &q) in inst.qubits.iter().enumerate() {
            if inst.qubits[..i].contains(&q) {
                violations.push(Violation::DuplicateQubit { instruction: idx, qubit: q });
            }
            if q >= circuit.num_qubits {
                violations.push(Violation::QubitOutOfRange { instruction: idx, qubit: q });
            }
        }

        if inst.kind == GateKind::Measure {
            if inst.clbits.len() != 1 {
                violations.push(Violation::WrongArity { instruction: idx, expected: 1, found: inst.clbits.len() });
            }
            for &c in &inst.clbits {
                match written.get_mut(c) {
                    None => violations.push(Violation::ClbitOutOfRange { instruction: idx, clbit: c }),
                    Some(w) if *w => violations.push(Violation::DuplicateClbitWrite { instruction: idx, clbit: c }),
                    Some(w) => *w = true,
                }
            }
            for &q in &inst.qubits {
                if let Some(m) = measured.get_mut(q) {
                    *m = true;
                }
            }
        } else {
            if !inst.clbits.is_empty() {
                violations.push(Violation::UnexpectedClbits { instruction: idx });
            }
            if inst.kind.is_gate() {
                for &q in &inst.qubits {
                    if measured.get(q).copied().unwrap_or(false) {
                        violations.push(Violation::NonTerminalMeasurement { instruction: idx, qubit: q });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A weighted Pauli string. Qubits absent from the map carry the identity.
///
/// Text form: an optional `coefficient*` prefix followed by `<P><qubit>`
/// factors, e.g. `Z0 Z1`, `-0.5*X0Y2` or `I` for the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliObservable {
    pub paulis: BTreeMap<usize, Pauli>,
    pub coefficient: f64,
}

impl PauliObservable {
    pub fn identity() -> Self {
        PauliObservable { paulis: BTreeMap::new(), coefficient: 1.0 }
    }

    pub fn new(terms: &[(usize, Pauli)]) -> Self {
        let paulis = terms.iter().copied().filter(|&(_, p)| p != Pauli::I).collect();
        PauliObservable { paulis, coefficient: 1.0 }
    }

    pub fn z(qubit: usize) -> Self {
        PauliObservable::new(&[(qubit, Pauli::Z)])
    }

    pub fn zz(a: usize, b: usize) -> Self {
        PauliObservable::new(&[(a, Pauli::Z), (b, Pauli::Z)])
    }

    pub fn with_coefficient(mut self, coefficient: f64) -> Self {
        self.coefficient = coefficient;
        self
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.paulis.get(&qubit).copied().unwrap_or(Pauli::I)
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.paulis.iter().filter(|(_, p)| **p != Pauli::I).map(|(q, _)| *q)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.support().max()
    }

    /// Restriction to the given qubits, relabelled through `relabel`.
    /// The coefficient is not carried over.
    pub fn restrict(&self, relabel: &BTreeMap<usize, usize>) -> PauliObservable {
        let paulis = self
            .paulis
            .iter()
            .filter(|(_, p)| **p != Pauli::I)
            .filter_map(|(q, p)| relabel.get(q).map(|&nq| (nq, *p)))
            .collect();
        PauliObservable { paulis, coefficient: 1.0 }
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient != 1.0 {
            write!(f, "{}*", self.coefficient)?;
        }
        let mut any = false;
        for q in self.support() {
            if any {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", self.get(q).symbol(), q)?;
            any = true;
        }
        if !any {
            f.write_str("I")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid Pauli observable {input:?}: {reason}")]
pub struct ObservableParseError {
    pub input: String,
    pub reason: String,
}

impl FromStr for PauliObservable {
    type Err = ObservableParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ObservableParseError { input: s.to_string(), reason: reason.to_string() };
        let (coefficient, body) = match s.split_once('*') {
            Some((c, rest)) => (c.trim().parse::<f64>().map_err(|_| err("bad coefficient"))?, rest),
            None => (1.0, s),
        };
        if !coefficient.is_finite() {
            return Err(err("coefficient must be finite"));
        }
        let body = body.trim();
        let mut paulis = BTreeMap::new();
        if body.eq_ignore_ascii_case("i") {
            return Ok(PauliObservable { paulis, coefficient });
        }
        let chars: Vec<char> = body.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(err("empty observable"));
        }
        let mut i = 0;
        while i < chars.len() {
            let pauli = Pauli::from_symbol(chars[i]).ok_or_else(|| err("expected one of I, X, Y, Z"))?;
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(err("missing qubit index"));
            }
            let digits: String = chars[start..i].iter().collect();
            let qubit: usize = digits.parse().map_err(|_| err("bad qubit index"))?;
            if paulis.contains_key(&qubit) {
                return Err(err(&format!("qubit {qubit} appears twice")));
            }
            if pauli != Pauli::I {
                paulis.insert(qubit, pauli);
            }
        }
        Ok(PauliObservable { paulis, coefficient })
    }
}

impl Serialize for PauliObservable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliObservable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
