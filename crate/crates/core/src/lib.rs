//! Expected-cost analysis for a classical-quantum while-language.
//!
//! The crate parses programs, runs their cost-weighted probabilistic
//! small-step semantics forward, evaluates the quantum expectation
//! transformer backward over pluggable cost structures, and checks
//! user-supplied upper invariants and summaries.

pub mod code;
pub mod corpus;
pub mod cost;
pub mod denot;
pub mod error;
pub mod expect;
pub mod gen;
pub mod invariant;
pub mod lang;
pub mod pars;
pub mod qet;
pub mod state;

pub use error::{Error, Result};
