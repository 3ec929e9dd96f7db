//! IO, HTTP, run store, and CLI for the genaiops regression gate. The
//! scoring and gating logic lives in `genaiops-core`.

pub mod cli;
pub mod error;
pub mod files;
pub mod http;
pub mod runner;
pub mod store;

pub use genaiops_core as core;
