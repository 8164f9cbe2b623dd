// SPDX-License-Identifier: Apache-2.0

//! Wire formats and translation between them.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;

pub mod qasm2;
pub mod qjson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitFormat {
    Qasm2,
    Qjson,
}

impl CircuitFormat {
    pub const ALL: [CircuitFormat; 2] = [CircuitFormat::Qasm2, CircuitFormat::Qjson];

    pub fn name(self) -> &'static str {
        match self {
            CircuitFormat::Qasm2 => "qasm2",
            CircuitFormat::Qjson => "qjson",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        CircuitFormat::ALL.into_iter().find(|f| f.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for CircuitFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub format: CircuitFormat,
    pub payload: String,
}

impl SourceDocument {
    pub fn new(format: CircuitFormat, payload: impl Into<String>) -> Self {
        SourceDocument { format, payload: payload.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("syntax error at {line}:{column}: expected {expected}, found {found}")]
    Syntax { line: usize, column: usize, expected: String, found: String },
    #[error("unsupported construct: {construct}")]
    Unsupported { construct: String, line: Option<usize> },
    #[error("semantic error{}: {message}", line.map(|l| alloc::format!(" on line {l}")).unwrap_or_default())]
    Semantic { line: Option<usize>, message: String },
}

impl FormatError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::Syntax { .. } => "syntax_error",
            FormatError::Unsupported { .. } => "unsupported_construct",
            FormatError::Semantic { .. } => "semantic_error",
        }
    }
}

/// Parses a document into a validated circuit.
pub fn parse(doc: &SourceDocument) -> Result<Circuit, FormatError> {
    let mut circuit = match doc.format {
        CircuitFormat::Qasm2 => {
            let mut c = qasm2::parse(&doc.payload)?;
            if let Some(name) = qasm2::name_comment(&doc.payload) {
                c.name = name;
            }
            c
        }
        CircuitFormat::Qjson => qjson::parse(&doc.payload)?,
    };
    let report = circuit.validate();
    if !report.is_ok() {
        return Err(FormatError::Semantic { line: None, message: alloc::format!("{report}") });
    }
    circuit.instructions.shrink_to_fit();
    Ok(circuit)
}

pub fn emit(circuit: &Circuit, format: CircuitFormat) -> SourceDocument {
    let payload = match format {
        CircuitFormat::Qasm2 => qasm2::emit(circuit),
        CircuitFormat::Qjson => qjson::emit(circuit),
    };
    SourceDocument { format, payload }
}

pub fn translate(doc: &SourceDocument, target: CircuitFormat) -> Result<SourceDocument, FormatError> {
    Ok(emit(&parse(doc)?, target))
}
