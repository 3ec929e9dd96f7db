//! Allocation-only core of the genaiops regression gate.
//!
//! Everything here is a pure function of its inputs: metrics, PII/HAP
//! screening, fairness post-processing, prompt optimization driven through
//! the [`Adapter`](adapter::Adapter) trait, and the compare/gate/report
//! steps of a model-switch regression test. File IO, HTTP, and the CLI live
//! in the `genaiops-gate` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adapter;
pub mod fairness;
pub mod hash;
mod math;
pub mod metrics;
pub mod mock;
pub mod optimizer;
pub mod pipeline;
pub mod rng;
pub mod safety;
pub mod suite;
pub mod text;
pub mod transport;
pub mod wire;
