// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use num_complex::Complex64;
use qunicorn_core::circuit::{Circuit, GateKind, Instruction};
use qunicorn_core::simulator::run_state;
use qunicorn_core::transpiler::TranspileResult;

/// Dense-simulation oracle for routing/rebasing: runs every computational
/// basis input through both circuits and returns the largest amplitude
/// deviation after undoing the final layout and one shared global phase.
pub fn max_unitary_deviation(original: &Circuit, result: &TranspileResult) -> f64 {
    let n = original.num_qubits;
    let routed = &result.circuit;
    let mut phase: Option<Complex64> = None;
    let mut worst: f64 = 0.0;
    for input in 0..1usize << n {
        let mut a = Circuit::new(n, 0);
        let mut b = Circuit::new(routed.num_qubits, 0);
        for q in 0..n {
            if input >> q & 1 == 1 {
                a.x(q);
                // initial layout is the identity
                b.x(result.initial_layout[q]);
            }
        }
        a.instructions.extend(original.instructions.iter().filter(|i| i.kind.is_gate()).cloned());
        b.instructions.extend(routed.instructions.iter().filter(|i| i.kind.is_gate()).cloned());
        let sa = run_state(&a).unwrap();
        let sb = run_state(&b).unwrap();
        let mut mapped = vec![Complex64::new(0.0, 0.0); sb.amplitudes().len()];
        let mut covered = vec![false; sb.amplitudes().len()];
        for x in 0..1usize << n {
            let mut y = 0;
            for q in 0..n {
                y |= (x >> q & 1) << result.final_layout[q];
            }
            mapped[y] = sa.amplitudes()[x];
            covered[y] = true;
        }
        let p = *phase.get_or_insert_with(|| {
            let (idx, _) =
                mapped.iter().enumerate().max_by(|x, y| x.1.norm().partial_cmp(&y.1.norm()).unwrap()).unwrap();
            sb.amplitudes()[idx] / mapped[idx]
        });
        for (y, amp) in sb.amplitudes().iter().enumerate() {
            let want = if covered[y] { mapped[y] * p } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((amp - want).norm());
        }
    }
    worst
}

pub fn two_qubit_gates_on_edges(result: &TranspileResult, coupling: &qunicorn_core::transpiler::CouplingMap) -> bool {
    result
        .circuit
        .instructions
        .iter()
        .filter(|i| i.kind.is_two_qubit())
        .all(|i| coupling.is_adjacent(i.qubits[0], i.qubits[1]))
}

/// Deterministic pseudo-random circuit from a simple LCG, used where
/// proptest shrinking is not needed.
pub fn random_circuit(seed: u64, num_qubits: usize, num_gates: usize) -> Circuit {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move |m: u64| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) % m
    };
    let kinds: Vec<GateKind> =
        GateKind::ALL.iter().copied().filter(|k| k.is_gate() && k.arity().unwrap() <= num_qubits).collect();
    let mut c = Circuit::new(num_qubits, 0);
    for _ in 0..num_gates {
        let kind = kinds[next(kinds.len() as u64) as usize];
        let arity = kind.arity().unwrap();
        let mut qubits = Vec::new();
        while qubits.len() < arity {
            let q = next(num_qubits as u64) as usize;
            if !qubits.contains(&q) {
                qubits.push(q);
            }
        }
        let params = (0..kind.num_params()).map(|_| (next(20_000) as f64 / 1000.0) - 10.0).collect();
        c.push(Instruction { kind, params, qubits, clbits: vec![] });
    }
    c
}
