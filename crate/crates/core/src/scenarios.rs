// SPDX-License-Identifier: Apache-2.0

//! Circuit generators for the three reference workloads: Grover search
//! over a 3-SAT formula, a batch of VQE ansatz circuits, and QAOA max-cut.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::circuit::{Circuit, PauliObservable};
use crate::simulator::MAX_QUBITS;

/// Conjunction of clauses; literal `k` is variable `k` (1-based), `-k` its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid formula: {0}")]
    Formula(String),
    #[error("circuit needs {0} qubits, more than the simulator's limit")]
    TooLarge(usize),
    #[error("formula has no satisfying assignment")]
    Unsatisfiable,
}

/// Six clauses over three variables; satisfied exactly by
/// `x = (1, 0, 1)` and `x = (0, 1, 1)`.
pub const DEFAULT_FORMULA: &str = "(1|2|3)&(1|2|-3)&(1|-2|3)&(-1|2|3)&(-1|-2|3)&(-1|-2|-3)";

impl FromStr for Formula {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |m: &str| ScenarioError::Formula(m.to_string());
        let mut clauses = Vec::new();
        for raw in s.split('&') {
            let body = raw
                .trim()
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| err("clauses must be parenthesized"))?;
            let clause: Vec<i32> = body
                .split('|')
                .map(|lit| {
                    lit.trim()
                        .parse::<i32>()
                        .map_err(|_| ScenarioError::Formula(alloc::format!("bad literal {:?}", lit.trim())))
                })
                .collect::<Result<_, _>>()?;
            if clause.is_empty() || clause.len() > 3 {
                return Err(err("clauses need one to three literals"));
            }
            if clause.contains(&0) {
                return Err(err("variables are numbered from 1"));
            }
            let mut vars: Vec<u32> = clause.iter().map(|l| l.unsigned_abs()).collect();
            vars.sort_unstable();
            vars.dedup();
            if vars.len() != clause.len() {
                return Err(err("a variable may appear once per clause"));
            }
            clauses.push(clause);
        }
        let num_vars = clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(Formula { num_vars, clauses })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str("&")?;
            }
            f.write_str("(")?;
            for (j, lit) in clause.iter().enumerate() {
                if j > 0 {
                    f.write_str("|")?;
                }
                write!(f, "{lit}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl Formula {
    /// Bit `i` of `assignment` is the value of variable `i + 1`.
    pub fn evaluate(&self, assignment: u64) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let value = assignment >> (lit.unsigned_abs() - 1) & 1 == 1;
                value == (lit > 0)
            })
        })
    }

    /// Brute-force enumeration of satisfying assignments.
    pub fn solutions(&self) -> Vec<u64> {
        (0..1u64 << self.num_vars).filter(|&a| self.evaluate(a)).collect()
    }

    /// Bitstring of an assignment as it appears in measurement counts.
    pub fn key(&self, assignment: u64) -> String {
        crate::simulator::bitstring(assignment, self.num_vars)
    }
}

/// Flips `target` iff all `controls` are 1, using `work` as a CCX ladder
/// (needs `controls.len() - 2` work qubits, all returned to |0⟩).
fn multi_controlled_x(c: &mut Circuit, controls: &[usize], target: usize, work: &[usize]) {
    match controls.len() {
        0 => {
            c.x(target);
        }
        1 => {
            c.cx(controls[0], target);
        }
        2 => {
            c.ccx(controls[0], controls[1], target);
        }
        k => {
            let mut steps = vec![(controls[0], controls[1], work[0])];
            for i in 2..k - 1 {
                steps.push((work[i - 2], controls[i], work[i - 1]));
            }
            for &(a, b, t) in &steps {
                c.ccx(a, b, t);
            }
            c.ccx(work[k - 3], controls[k - 1], target);
            for &(a, b, t) in steps.iter().rev() {
                c.ccx(a, b, t);
            }
        }
    }
}

fn multi_controlled_z(c: &mut Circuit, qubits: &[usize], work: &[usize]) {
    let (&target, controls) = qubits.split_last().expect("at least one qubit");
    c.h(target);
    multi_controlled_x(c, controls, target, work);
    c.h(target);
}

/// Qubit layout of a Grover circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroverLayout {
    pub variables: Vec<usize>,
    pub clause_ancillas: Vec<usize>,
    pub work: Vec<usize>,
    pub iterations: usize,
}

/// Optimal iteration count `⌊π / (4θ)⌋` with `sin θ = √(M/N)`.
pub fn grover_iterations(num_vars: usize, num_solutions: usize) -> usize {
    let n = (1u64 << num_vars) as f64;
    let theta = ((num_solutions as f64 / n).sqrt()).asin();
    ((PI / (4.0 * theta)).floor() as usize).max(1)
}

/// Grover search marking the formula's satisfying assignments.
///
/// Each clause is evaluated into an ancilla that is 1 when the clause is
/// violated. The phase oracle fires when every ancilla is 0. Variables are
/// measured into clbits `0..num_vars`.
pub fn grover_circuit(formula: &Formula, iterations: Option<usize>) -> Result<(Circuit, GroverLayout), ScenarioError> {
    let n = formula.num_vars;
    let m = formula.clauses.len();
    if n == 0 || m == 0 {
        return Err(ScenarioError::Formula("empty formula".into()));
    }
    let work_len = m.max(n).saturating_sub(2).max(1);
    let total = n + m + work_len;
    if total > MAX_QUBITS {
        return Err(ScenarioError::TooLarge(total));
    }
    let iterations = match iterations {
        Some(k) => k,
        None => {
            let solutions = formula.solutions().len();
            if solutions == 0 {
                return Err(ScenarioError::Unsatisfiable);
            }
            grover_iterations(n, solutions)
        }
    };
    let variables: Vec<usize> = (0..n).collect();
    let ancillas: Vec<usize> = (n..n + m).collect();
    let work: Vec<usize> = (n + m..total).collect();
    let var = |lit: i32| lit.unsigned_abs() as usize - 1;

    let mut c = Circuit::new(total, n).named("grover-3sat");
    for &q in &variables {
        c.h(q);
    }
    let compute_clauses = |c: &mut Circuit| {
        for (j, clause) in formula.clauses.iter().enumerate() {
            // Literal false <=> (flipped) control bit is 1.
            let flips: Vec<usize> = clause.iter().filter(|&&l| l > 0).map(|&l| var(l)).collect();
            for &q in &flips {
                c.x(q);
            }
            let controls: Vec<usize> = clause.iter().map(|&l| var(l)).collect();
            multi_controlled_x(c, &controls, ancillas[j], &work);
            for &q in &flips {
                c.x(q);
            }
        }
    };
    for _ in 0..iterations {
        compute_clauses(&mut c);
        for &a in &ancillas {
            c.x(a);
        }
        multi_controlled_z(&mut c, &ancillas, &work);
        for &a in &ancillas {
            c.x(a);
        }
        compute_clauses(&mut c);
        // Diffusion about the uniform superposition.
        for &q in &variables {
            c.h(q).x(q);
        }
        multi_controlled_z(&mut c, &variables, &work);
        for &q in &variables {
            c.x(q).h(q);
        }
    }
    for &q in &variables {
        c.measure(q, q);
    }
    Ok((c, GroverLayout { variables, clause_ancillas: ancillas, work, iterations }))
}

/// Hardware-efficient ansatz: RY layer, CX chain, RY layer, all measured.
pub fn vqe_ansatz(num_qubits: usize, params: &[f64]) -> Circuit {
    assert_eq!(params.len(), 2 * num_qubits, "two angles per qubit");
    let mut c = Circuit::new(num_qubits, num_qubits);
    for (q, &theta) in params[..num_qubits].iter().enumerate() {
        c.ry(theta, q);
    }
    for q in 1..num_qubits {
        c.cx(q - 1, q);
    }
    for q in 0..num_qubits {
        c.ry(params[num_qubits + q], q);
    }
    c.measure_all();
    c
}

/// `count` ansatz circuits with seeded parameters in `[0, 2π)`.
pub fn vqe_batch(num_qubits: usize, count: usize, seed: u64) -> Vec<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let params: Vec<f64> =
                (0..2 * num_qubits).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI).collect();
            vqe_ansatz(num_qubits, &params).named(&alloc::format!("vqe-{k}"))
        })
        .collect()
}

pub fn path_graph(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

pub fn ring_graph(n: usize) -> Vec<(usize, usize)> {
    let mut e = path_graph(n);
    if n > 2 {
        e.push((n - 1, 0));
    }
    e
}

/// Gate-only QAOA max-cut circuit: `|+⟩^n`, then per layer
/// `exp(-iγ Z_a Z_b)` as CX–RZ(2γ)–CX on every edge and RX(2β) mixers.
pub fn qaoa_maxcut(num_qubits: usize, edges: &[(usize, usize)], gammas: &[f64], betas: &[f64]) -> Circuit {
    assert_eq!(gammas.len(), betas.len());
    let mut c = Circuit::new(num_qubits, 0).named("qaoa-maxcut");
    for q in 0..num_qubits {
        c.h(q);
    }
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        for &(a, b) in edges {
            c.cx(a, b).rz(2.0 * gamma, b).cx(a, b);
        }
        for q in 0..num_qubits {
            c.rx(2.0 * beta, q);
        }
    }
    c
}

pub fn edge_observables(edges: &[(usize, usize)]) -> Vec<PauliObservable> {
    edges.iter().map(|&(a, b)| PauliObservable::zz(a, b)).collect()
}
