use alloc::string::String;

use crate::instance::ProblemClass;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("{engine} needs a {expected} instance, got {found}")]
    ClassMismatch {
        engine: &'static str,
        expected: ProblemClass,
        found: ProblemClass,
    },

    #[error("unknown bidder {0}")]
    UnknownBidder(usize),

    #[error("rank assignment covers {got} bidders, instance has {expected}")]
    RankCount { expected: usize, got: usize },

    #[error("rank {value} for bidder {bidder} is outside [0, 1]")]
    RankOutOfRange { bidder: usize, value: f64 },

    #[error("{0} is not a permutation of the bidders")]
    BadPermutation(String),

    #[error("branch and bound exceeded its node limit of {0}")]
    NodeLimitExceeded(u64),

    #[error("solver produced an infeasible witness: {0}")]
    InvalidWitness(String),

    #[error("malformed star for bidder {bidder}: {reason}")]
    MalformedStar { bidder: usize, reason: String },

    #[error("trial {trial}: fake money {fake} exceeds the bound {bound}")]
    FakeMoneyBound { trial: u64, fake: u64, bound: u64 },

    #[error("no usable offline optimum: {0}")]
    NoOptimum(String),
}
