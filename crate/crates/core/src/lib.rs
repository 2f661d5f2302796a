//! takt: a toolkit for clocked networks of communicating components.
//!
//! The library parses and checks textual component models, executes them
//! under a synchronous single-clock semantics, records runs as event traces,
//! generates test sequences by bounded state-space search, and lowers models
//! to an imperative representation that is both interpretable and printable
//! as an Ada-subset text.

pub mod codegen;
pub mod diag;
pub mod dtd;
pub mod les;
pub mod model;
pub mod sim;
pub mod testgen;
pub mod trace;
