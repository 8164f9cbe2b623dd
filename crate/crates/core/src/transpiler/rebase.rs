// SPDX-License-Identifier: Apache-2.0

//! Rewriting onto a basis gate set.
//!
//! Single-qubit gates outside the basis become a ZXZ Euler triple
//! `RZ(γ)·RX(β)·RZ(α)` (applied γ first) with angles in (−π, π]; zero
//! rotations are dropped. Two-qubit rewrites:
//! `CZ = (I⊗H)·CX·(I⊗H)`, `CX = (I⊗H)·CZ·(I⊗H)`, `SWAP = CX·CX·CX`.
//! `CCX` uses the 15-gate {H, T, T†, CX} decomposition.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

use num_complex::Complex64;

use super::BasisGateSet;
use crate::circuit::{Circuit, GateKind, Instruction};
use crate::gates::{single_qubit_matrix, Matrix2};

const ZERO_ANGLE: f64 = 1e-12;

/// Wraps an angle into (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// ZXZ Euler angles `(α, β, γ)` with `U ≅ RZ(α)·RX(β)·RZ(γ)` up to global phase.
pub fn zxz_angles(u: &Matrix2) -> (f64, f64, f64) {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let v: Matrix2 = {
        let s = det.sqrt();
        [[u[0][0] / s, u[0][1] / s], [u[1][0] / s, u[1][1] / s]]
    };
    let c = v[0][0].norm().min(1.0);
    let s = v[1][0].norm().min(1.0);
    let beta = 2.0 * s.atan2(c);
    // v11 = c·e^{i(α+γ)/2}, i·v10 = s·e^{i(α−γ)/2}
    let sum = if c > 1e-12 { 2.0 * v[1][1].arg() } else { 0.0 };
    let diff = if s > 1e-12 { 2.0 * (Complex64::new(0.0, 1.0) * v[1][0]).arg() } else { 0.0 };
    let alpha = (sum + diff) / 2.0;
    let gamma = (sum - diff) / 2.0;
    (normalize_angle(alpha), normalize_angle(beta), normalize_angle(gamma))
}

fn euler(u: &Matrix2, qubit: usize, out: &mut Vec<Instruction>) {
    let (alpha, beta, gamma) = zxz_angles(u);
    for (kind, angle) in [(GateKind::Rz, gamma), (GateKind::Rx, beta), (GateKind::Rz, alpha)] {
        if angle.abs() > ZERO_ANGLE {
            out.push(Instruction::rotation(kind, angle, qubit));
        }
    }
}

/// The 15-gate Toffoli decomposition over {H, T, T†, CX}.
pub fn ccx_decomposition(a: usize, b: usize, c: usize) -> Vec<Instruction> {
    use GateKind::*;
    let g = |k: GateKind, q: &[usize]| Instruction::gate(k, q);
    alloc::vec![
        g(H, &[c]),
        g(Cx, &[b, c]),
        g(Tdg, &[c]),
        g(Cx, &[a, c]),
        g(T, &[c]),
        g(Cx, &[b, c]),
        g(Tdg, &[c]),
        g(Cx, &[a, c]),
        g(T, &[b]),
        g(T, &[c]),
        g(H, &[c]),
        g(Cx, &[a, b]),
        g(T, &[a]),
        g(Tdg, &[b]),
        g(Cx, &[a, b]),
    ]
}

fn lower(inst: &Instruction, basis: &BasisGateSet, out: &mut Vec<Instruction>) {
    let kind = inst.kind;
    if !kind.is_gate() || basis.contains(kind) {
        out.push(inst.clone());
        return;
    }
    let q = &inst.qubits;
    let h = |t: usize| Instruction::gate(GateKind::H, &[t]);
    let rewritten: Vec<Instruction> = match kind {
        GateKind::Cx => alloc::vec![h(q[1]), Instruction::gate(GateKind::Cz, q), h(q[1])],
        GateKind::Cz => alloc::vec![h(q[1]), Instruction::gate(GateKind::Cx, q), h(q[1])],
        GateKind::Swap => alloc::vec![
            Instruction::gate(GateKind::Cx, &[q[0], q[1]]),
            Instruction::gate(GateKind::Cx, &[q[1], q[0]]),
            Instruction::gate(GateKind::Cx, &[q[0], q[1]]),
        ],
        GateKind::Ccx => ccx_decomposition(q[0], q[1], q[2]),
        _ => {
            let m = single_qubit_matrix(kind, &inst.params).expect("single-qubit gate");
            euler(&m, q[0], out);
            return;
        }
    };
    for r in &rewritten {
        lower(r, basis, out);
    }
}

/// Rewrites the circuit so every gate is in `basis` (measure and barrier pass through).
pub fn rebase(circuit: &Circuit, basis: &BasisGateSet) -> Circuit {
    let mut instructions = Vec::with_capacity(circuit.instructions.len());
    for inst in &circuit.instructions {
        lower(inst, basis, &mut instructions);
    }
    Circuit { name: circuit.name.clone(), num_qubits: circuit.num_qubits, num_clbits: circuit.num_clbits, instructions }
}

/// Replaces every CCX by its 15-gate decomposition, leaving all else intact.
pub fn expand_three_qubit_gates(circuit: &Circuit) -> Circuit {
    let mut out = circuit.clone();
    out.instructions = circuit
        .instructions
        .iter()
        .flat_map(|inst| match inst.kind {
            GateKind::Ccx => ccx_decomposition(inst.qubits[0], inst.qubits[1], inst.qubits[2]),
            _ => alloc::vec![inst.clone()],
        })
        .collect();
    out
}
