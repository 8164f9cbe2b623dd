// SPDX-License-Identifier: Apache-2.0

//! Loading and checking provider catalogs.

use std::path::Path;

use qunicorn_core::catalog::{Catalog, CatalogIssue};

/// The catalog shipped with the service: the eight surveyed offerings with
/// invented device data.
pub const DEFAULT_CATALOG: &str = include_str!("../data/catalog.json");

/// JSON schema of the catalog file.
pub const CATALOG_SCHEMA: &str = include_str!("../data/catalog.schema.json");

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("catalog is not valid JSON: {0}")]
    Json(String),
    #[error("catalog error at {}", .issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { issues: Vec<CatalogIssue> },
}

impl CatalogError {
    /// Diagnostics as `(json_path, message)` pairs.
    pub fn issues(&self) -> Vec<CatalogIssue> {
        match self {
            CatalogError::Invalid { issues } => issues.clone(),
            other => vec![CatalogIssue { path: "$".into(), message: other.to_string() }],
        }
    }
}

fn json_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::from("$");
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("[{index}]")),
            Segment::Map { key } => {
                out.push('.');
                out.push_str(key);
            }
            Segment::Enum { variant } => {
                out.push('.');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str(".?"),
        }
    }
    out
}

/// Strips serde's trailing " at line L column C" so messages stay path-centric.
fn clean_message(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

pub fn parse_catalog(text: &str) -> Result<Catalog, CatalogError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CatalogError::Json(e.to_string()))?;
    let catalog: Catalog = serde_path_to_error::deserialize(value).map_err(|e| {
        let mut path = json_path(e.path());
        let message = clean_message(e.inner());
        // A missing field is reported at its parent; name the field itself.
        if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            path = format!("{path}.{field}");
        }
        CatalogError::Invalid { issues: vec![CatalogIssue { path, message }] }
    })?;
    let issues = catalog.validate();
    if issues.is_empty() {
        Ok(catalog)
    } else {
        Err(CatalogError::Invalid { issues })
    }
}

pub fn load_catalog(path: &Path) -> Result<Catalog, CatalogError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
    parse_catalog(&text)
}

pub fn default_catalog() -> Catalog {
    parse_catalog(DEFAULT_CATALOG).expect("built-in catalog is valid")
}
