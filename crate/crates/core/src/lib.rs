//! Simulation and analysis of a smart-contract-mediated incentive mechanism
//! for collaborative attacks.
//!
//! The library computes attackers' equilibrium efforts and the mechanism's
//! payments, checks the mechanism's properties (dominance, strategy-proofness,
//! budget constraint, ex-post individual rationality, fairness), simulates the
//! escrow contract on a mock ledger, and runs seeded parameter sweeps. No
//! traffic is ever generated: the attack result is a number produced by the
//! equilibrium solver.

// `!(x > 0.0)` is used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contract;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod mechanism;
pub mod model;

pub use equilibrium::{attack_result, best_response, marginal_cost, verify_dominance, Equilibrium};
pub use error::{Error, Result};
pub use mechanism::{
    check_budget, check_dsic_split, fairness_score, payments, quasi_utility, Outcome,
};
pub use model::{normalize_types, GameParams, RewardScheme, TypeProfile};
