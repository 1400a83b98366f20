//! Updatable views programmed from their update strategies.
//!
//! A view update strategy is a Datalog program that computes insertion and
//! deletion relations (`+s`, `-s`) for source relations from the sources and
//! an updated view. From such a strategy this crate derives the one view
//! definition it can be paired with, checks the round-trip laws, maintains
//! views incrementally, emits PostgreSQL view and trigger text, and
//! synchronizes shared views between peers.
//!
//! Modules:
//!
//! - [`datalog`]: parsing, stratification, bottom-up evaluation, deltas, I/O.
//! - [`putback`]: strategies, view derivation, law checks.
//! - [`corpus`]: seeded random instances and single-tuple edits.
//! - [`incremental`]: delta-driven view maintenance and incremental put.
//! - [`dejima`]: peers sharing views over links, with propagation and undo.
//! - [`sqlgen`]: `CREATE VIEW` / `INSTEAD OF` trigger text and a SQL subset
//!   evaluator.
//! - [`scenario`]: bundled strategies and the ride-sharing network.
//! - [`cli`]: the `dejima` command line.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists
//! them.

pub mod cli;
pub mod corpus;
pub mod datalog;
pub mod dejima;
pub mod incremental;
pub mod putback;
pub mod scenario;
pub mod sqlgen;
