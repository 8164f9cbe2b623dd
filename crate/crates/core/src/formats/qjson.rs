// SPDX-License-Identifier: Apache-2.0

//! QJSON: the JSON circuit document.
//!
//! ```json
//! {"version":"1","name":"bell","num_qubits":2,"num_clbits":2,
//!  "instructions":[{"kind":"h","qubits":[0]},{"kind":"measure","qubits":[0],"clbits":[0]}]}
//! ```
//!
//! `version` and `name` are optional; `params` and `clbits` may be omitted
//! when empty. Instruction kinds are the lower-case IR names.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Deserialize;

use super::FormatError;
use crate::circuit::{Circuit, GateKind, Instruction};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    version: Option<serde_json::Value>,
    #[serde(default)]
    name: String,
    num_qubits: usize,
    num_clbits: usize,
    instructions: Vec<RawInstruction>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstruction {
    kind: String,
    #[serde(default)]
    params: Vec<f64>,
    qubits: Vec<usize>,
    #[serde(default)]
    clbits: Vec<usize>,
}

pub fn parse(src: &str) -> Result<Circuit, FormatError> {
    let doc: Document = serde_json::from_str(src).map_err(|e| FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        expected: "QJSON document".into(),
        found: e.to_string(),
    })?;
    match &doc.version {
        None => {}
        Some(serde_json::Value::String(v)) if v == "1" => {}
        Some(serde_json::Value::Number(n)) if n.as_u64() == Some(1) => {}
        Some(other) => return Err(FormatError::Unsupported { construct: format!("version {other}"), line: None }),
    }
    let mut instructions = Vec::with_capacity(doc.instructions.len());
    for (idx, raw) in doc.instructions.into_iter().enumerate() {
        let kind = GateKind::from_name(&raw.kind).ok_or_else(|| FormatError::Unsupported {
            construct: format!("instruction kind '{}' (instruction {idx})", raw.kind),
            line: None,
        })?;
        instructions.push(Instruction { kind, params: raw.params, qubits: raw.qubits, clbits: raw.clbits });
    }
    Ok(Circuit { name: doc.name, num_qubits: doc.num_qubits, num_clbits: doc.num_clbits, instructions })
}

pub fn emit(circuit: &Circuit) -> String {
    serde_json::to_string(circuit).expect("circuit serializes")
}
