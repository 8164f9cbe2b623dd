// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

use super::{CouplingMap, TranspileError, TranspileResult};
use crate::circuit::{Circuit, GateKind, Instruction};
use crate::transpiler::rebase::expand_three_qubit_gates;

/// Greedy SWAP-insertion routing from the identity layout.
///
/// Instructions are processed in order. A two-qubit gate on non-adjacent
/// physical qubits moves its first operand along the shortest path towards
/// the second with SWAPs. Toffolis are expanded first. Measurements are
/// terminal, so they are emitted last against the final layout and keep
/// their classical bits; no classical un-permutation is needed afterwards.
pub fn route(circuit: &Circuit, coupling: &CouplingMap) -> Result<TranspileResult, TranspileError> {
    let n_phys = coupling.num_qubits();
    if circuit.num_qubits > n_phys {
        return Err(TranspileError::TooWide { circuit: circuit.num_qubits, device: n_phys });
    }
    let expanded = expand_three_qubit_gates(circuit);
    // phys_of[logical], with ancillas tracked as logical indices ≥ num_qubits.
    let mut phys_of: Vec<usize> = (0..n_phys).collect();
    let mut logical_at: Vec<usize> = (0..n_phys).collect();
    let mut out = Circuit::new(n_phys, circuit.num_clbits);
    out.name = circuit.name.clone();
    let mut measures = Vec::new();
    let mut swaps = 0;

    for inst in &expanded.instructions {
        match inst.kind {
            GateKind::Measure => measures.push(inst.clone()),
            GateKind::Barrier => {
                let qubits: Vec<usize> = inst.qubits.iter().map(|&q| phys_of[q]).collect();
                out.push(Instruction::barrier(&qubits));
            }
            k if k.is_two_qubit() => {
                let (pa, pb) = (phys_of[inst.qubits[0]], phys_of[inst.qubits[1]]);
                if !coupling.is_adjacent(pa, pb) {
                    let path = coupling.shortest_path(pa, pb);
                    for w in path.windows(2).take(path.len() - 2) {
                        let (x, y) = (w[0], w[1]);
                        out.swap(x, y);
                        swaps += 1;
                        let (lx, ly) = (logical_at[x], logical_at[y]);
                        logical_at.swap(x, y);
                        phys_of[lx] = y;
                        phys_of[ly] = x;
                    }
                }
                let qubits = [phys_of[inst.qubits[0]], phys_of[inst.qubits[1]]];
                out.push(Instruction {
                    kind: k,
                    params: inst.params.clone(),
                    qubits: qubits.to_vec(),
                    clbits: Vec::new(),
                });
            }
            _ => {
                let mut mapped = inst.clone();
                mapped.qubits[0] = phys_of[inst.qubits[0]];
                out.push(mapped);
            }
        }
    }
    for m in measures {
        out.push(Instruction::measure(phys_of[m.qubits[0]], m.clbits[0]));
    }
    let depth_after = out.depth();
    Ok(TranspileResult {
        circuit: out,
        initial_layout: (0..circuit.num_qubits).collect(),
        final_layout: phys_of[..circuit.num_qubits].to_vec(),
        swaps_inserted: swaps,
        depth_after,
    })
}
