//! Configuration, file formats and experiment drivers for the `plap` command-line tool.
//!
//! The numerics live in [`plap_core`]; this crate adds TOML configuration,
//! binary snapshots, CSV ledgers, JSON reports and a rayon-backed executor.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod exec;
pub mod ledger;
pub mod report;
pub mod snapshot;

pub use plap_core as core;
