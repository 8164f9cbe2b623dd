// SPDX-License-Identifier: Apache-2.0

//! Basis rebasing and connectivity routing.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind};

mod coupling;
pub mod rebase;
mod route;

pub use coupling::{CouplingError, CouplingMap};
pub use rebase::rebase;
pub use route::route;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranspileError {
    #[error("circuit needs {circuit} qubits but the device has {device}")]
    TooWide { circuit: usize, device: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BasisError {
    #[error("basis must contain rx, ry and rz")]
    MissingRotations,
    #[error("basis must contain exactly one of cx and cz")]
    Entangler,
    #[error("basis may not contain {0}")]
    Forbidden(GateKind),
}

/// Native gates of a device. Measure and barrier are always implied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GateKind>", into = "Vec<GateKind>")]
pub struct BasisGateSet {
    gates: BTreeSet<GateKind>,
}

impl BasisGateSet {
    pub fn new(gates: impl IntoIterator<Item = GateKind>) -> Result<Self, BasisError> {
        let gates: BTreeSet<GateKind> = gates.into_iter().filter(|g| g.is_gate()).collect();
        if ![GateKind::Rx, GateKind::Ry, GateKind::Rz].iter().all(|g| gates.contains(g)) {
            return Err(BasisError::MissingRotations);
        }
        if gates.contains(&GateKind::Cx) == gates.contains(&GateKind::Cz) {
            return Err(BasisError::Entangler);
        }
        if gates.contains(&GateKind::Ccx) {
            return Err(BasisError::Forbidden(GateKind::Ccx));
        }
        Ok(BasisGateSet { gates })
    }

    /// `{RX, RY, RZ, CX}`.
    pub fn cx_default() -> Self {
        BasisGateSet::new([GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Cx]).expect("valid basis")
    }

    /// `{RX, RY, RZ, CZ}`.
    pub fn cz_default() -> Self {
        BasisGateSet::new([GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Cz]).expect("valid basis")
    }

    pub fn contains(&self, kind: GateKind) -> bool {
        !kind.is_gate() || self.gates.contains(&kind)
    }

    pub fn entangler(&self) -> GateKind {
        if self.gates.contains(&GateKind::Cx) {
            GateKind::Cx
        } else {
            GateKind::Cz
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = GateKind> + '_ {
        self.gates.iter().copied()
    }
}

impl TryFrom<Vec<GateKind>> for BasisGateSet {
    type Error = BasisError;

    fn try_from(v: Vec<GateKind>) -> Result<Self, Self::Error> {
        BasisGateSet::new(v)
    }
}

impl From<BasisGateSet> for Vec<GateKind> {
    fn from(b: BasisGateSet) -> Self {
        b.gates.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranspileResult {
    pub circuit: Circuit,
    /// `initial_layout[logical] = physical` before routing (always the identity).
    pub initial_layout: Vec<usize>,
    /// `final_layout[logical] = physical` after SWAP insertion.
    pub final_layout: Vec<usize>,
    pub swaps_inserted: usize,
    pub depth_after: usize,
}

impl TranspileResult {
    pub fn summary(&self) -> TranspileSummary {
        TranspileSummary {
            num_qubits: self.circuit.num_qubits,
            initial_layout: self.initial_layout.clone(),
            final_layout: self.final_layout.clone(),
            swaps_inserted: self.swaps_inserted,
            depth_after: self.depth_after,
            single_qubit_gates: self
                .circuit
                .instructions
                .iter()
                .filter(|i| i.kind.is_gate() && i.qubits.len() == 1)
                .count(),
            two_qubit_gates: self.circuit.instructions.iter().filter(|i| i.kind.is_two_qubit()).count(),
        }
    }
}

/// The part of a [`TranspileResult`] worth persisting next to a job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranspileSummary {
    pub num_qubits: usize,
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
    pub swaps_inserted: usize,
    pub depth_after: usize,
    pub single_qubit_gates: usize,
    pub two_qubit_gates: usize,
}

/// Routes onto `coupling`, then rebases onto `basis`. Inserted SWAPs become
/// three CX (or their CZ form) unless SWAP is native.
pub fn transpile(
    circuit: &Circuit,
    coupling: &CouplingMap,
    basis: &BasisGateSet,
) -> Result<TranspileResult, TranspileError> {
    let mut routed = route(circuit, coupling)?;
    routed.circuit = rebase(&routed.circuit, basis);
    routed.depth_after = routed.circuit.depth();
    Ok(routed)
}

/// Number of single- and two-qubit gates in a circuit.
pub fn gate_counts(circuit: &Circuit) -> (usize, usize) {
    let mut counts = (0, 0);
    for inst in circuit.instructions.iter().filter(|i| i.kind.is_gate()) {
        match inst.qubits.len() {
            1 => counts.0 += 1,
            2 => counts.1 += 1,
            _ => {}
        }
    }
    counts
}
