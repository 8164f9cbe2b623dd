// SPDX-License-Identifier: Apache-2.0

//! Core algorithms of the qunicorn middleware.
//!
//! Everything here is pure computation over `alloc` types: the circuit IR,
//! the QASM2 and QJSON wire formats, the transpiler, the statevector
//! simulator, readout error mitigation, single-wire circuit cutting, the
//! provider catalog model, and the scheduling heuristics (hardware selection,
//! load balancing, batching, cost estimation). IO, threads, clocks and the
//! HTTP surface live in the `qunicorn` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod circuit;
pub mod cutting;
pub mod formats;
pub mod gates;
pub mod job;
pub mod mitigation;
pub mod scenarios;
pub mod scheduling;
pub mod simulator;
pub mod transpiler;

pub use circuit::{Circuit, GateKind, Instruction, Pauli, PauliObservable, ValidationReport, Violation};
pub use formats::{CircuitFormat, FormatError, SourceDocument};
pub use simulator::{Counts, NoiseSpec, ReadoutError, StateVector};
