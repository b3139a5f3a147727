//! Budget-oblivious online matching and adwords.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation: the instance model and generators, the five online
//! engines, exact offline optima, the removal-run auditor, and the seeded
//! Monte-Carlo estimators. File formats, parallel trial lanes and the command
//! line live in the `bomatch` companion crate.
//!
//! Money is integral everywhere (bids, budgets, real and fake spend). The
//! analysis-side quantities (prices, utilities, revenues) are `f64`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod audit;
pub mod engines;
mod error;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod rng;

pub use error::Error;

/// `1 - 1/e`, the competitive ratio every rank-based engine is measured against.
pub const ONE_MINUS_INV_E: f64 = 0.632_120_558_828_557_7;

pub type Result<T, E = Error> = core::result::Result<T, E>;
