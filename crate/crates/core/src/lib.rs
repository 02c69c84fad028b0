//! Causal-effect guided sampling of strongly subsuming second-order mutants.

pub mod benchmarks;
pub mod cli;
pub mod cpda;
mod fnv;
pub mod harness;
pub mod heuristics;
pub mod metrics;
pub mod minilang;
pub mod mutation;
pub mod trace_eval;
