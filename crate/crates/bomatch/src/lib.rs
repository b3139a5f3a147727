//! Experiment tooling around `bomatch-core`: JSON and CSV formats, parallel
//! trial lanes, the acceptance suite and the `bomatch` command line.

pub mod format;
pub mod lanes;
pub mod verify;

pub use bomatch_core as core;
