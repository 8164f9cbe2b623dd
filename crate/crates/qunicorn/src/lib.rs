// SPDX-License-Identifier: Apache-2.0

//! Service side of qunicorn: configuration, provider connectors,
//! persistence, orchestration and the HTTP API.

pub mod api;
pub mod catalog;
pub mod cli;
pub mod client;
pub mod clock;
pub mod config;
pub mod orchestrator;
pub mod provenance;
pub mod provider;
pub mod store;
