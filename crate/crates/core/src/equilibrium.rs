//! Dominant-strategy best responses and the aggregated attack result.
//!
//! Each attacker's utility is linear in the attack result and strictly
//! concave in his own effort, so the best response is the clamped root of
//! `marginal_cost(e) = marginal_reward` on `[0, 1]`. It does not depend on
//! the opponents' efforts.
//!
//! Under the square scheme the share of attacker `i` depends on the whole
//! type profile, so the equilibrium here is conditional on the realized
//! profile rather than a dominant strategy in the incomplete-information
//! sense.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pot, GameParams, RewardScheme, TypeProfile};

/// Absolute tolerance on the effort returned by [`best_response`].
pub const EFFORT_TOL: f64 = 1e-10;

/// Tolerance used when comparing utilities in dominance checks.
pub const UTILITY_TOL: f64 = 1e-9;

pub fn marginal_cost(e: f64, params: &GameParams) -> Result<f64> {
    params.marginal_cost(e)
}

/// Finds a root of the nondecreasing function `f` on `[lo, hi]` given
/// `f(lo) <= 0 <= f(hi)`, stopping once the bracket is narrower than `tol`.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Effort in `[0, 1]` maximizing `marginal_reward * e - cost(e)`.
pub fn best_response(marginal_reward: f64, params: &GameParams) -> f64 {
    let mc = |e: f64| {
        params
            .marginal_cost(e)
            .expect("bracket lies inside [0, 1] and e_max > 1")
    };
    if !(marginal_reward > mc(0.0)) {
        return 0.0;
    }
    if marginal_reward >= mc(1.0) {
        return 1.0;
    }
    bisect(|e| mc(e) - marginal_reward, 0.0, 1.0, EFFORT_TOL)
}

/// Constant slope of attacker `i`'s reward in the attack result:
/// `(bet_t + award) * share_i`.
pub fn marginal_reward(
    scheme: RewardScheme,
    profile: &TypeProfile,
    i: usize,
    params: &GameParams,
) -> Result<f64> {
    Ok(pot(profile, params) * scheme.share(profile, i)?)
}

/// Equilibrium efforts and the attack result they produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub efforts: Vec<f64>,
    /// Uncapped sum of efforts.
    pub raw_total: f64,
    /// `min(raw_total, 1)`.
    pub attack_result: f64,
}

impl Equilibrium {
    pub fn from_efforts(efforts: Vec<f64>) -> Self {
        let raw_total: f64 = efforts.iter().sum();
        Self {
            efforts,
            raw_total,
            attack_result: raw_total.min(1.0),
        }
    }

    /// Traffic actually delivered once attackers stop at the target: when
    /// the raw total overshoots 1 every effort is scaled back pro rata, so
    /// the delivered efforts sum to the capped attack result.
    pub fn delivered_efforts(&self) -> Vec<f64> {
        if self.raw_total > 1.0 {
            self.efforts.iter().map(|e| e / self.raw_total).collect()
        } else {
            self.efforts.clone()
        }
    }
}

pub fn attack_result(
    profile: &TypeProfile,
    scheme: RewardScheme,
    params: &GameParams,
) -> Equilibrium {
    let pot = pot(profile, params);
    let efforts = scheme
        .shares(profile)
        .into_iter()
        .map(|s| best_response(pot * s, params))
        .collect();
    Equilibrium::from_efforts(efforts)
}

/// Utility of attacker `i` in the uncapped game, where the reward grows
/// linearly with the attack result for any opponent efforts.
pub fn game_utility(
    profile: &TypeProfile,
    i: usize,
    own_effort: f64,
    opponents_total: f64,
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<f64> {
    let slope = marginal_reward(scheme, profile, i, params)?;
    let cost = params.cost(own_effort)?;
    Ok(slope * (own_effort + opponents_total) - cost - profile.bet(i, params.award())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub dominant: bool,
    pub candidate: f64,
    /// Largest utility gain any grid effort has over the candidate.
    pub max_violation: f64,
    /// Grid effort with the highest utility.
    pub grid_argmax: f64,
}

/// Checks the candidate effort against every effort on a uniform grid over
/// `[0, 1]`, holding the opponents' efforts fixed.
pub fn check_candidate(
    profile: &TypeProfile,
    i: usize,
    candidate: f64,
    opponents_efforts: &[f64],
    grid_step: f64,
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<DominanceReport> {
    if !(grid_step > 0.0) {
        return Err(Error::InvalidParams(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    let opponents: f64 = opponents_efforts.iter().sum();
    let base = game_utility(profile, i, candidate, opponents, scheme, params)?;
    let steps = (1.0 / grid_step).round() as usize;
    let mut max_violation = f64::NEG_INFINITY;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=steps {
        let e = (k as f64 * grid_step).min(1.0);
        let u = game_utility(profile, i, e, opponents, scheme, params)?;
        max_violation = max_violation.max(u - base);
        if u > best.0 {
            best = (u, e);
        }
    }
    Ok(DominanceReport {
        dominant: max_violation <= UTILITY_TOL,
        candidate,
        max_violation: max_violation.max(0.0),
        grid_argmax: best.1,
    })
}

/// Brute-force check that the solver's effort for attacker `i` is a best
/// response to the given opponents' efforts.
pub fn verify_dominance(
    profile: &TypeProfile,
    i: usize,
    opponents_efforts: &[f64],
    grid_step: f64,
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<DominanceReport> {
    let candidate = best_response(marginal_reward(scheme, profile, i, params)?, params);
    check_candidate(
        profile,
        i,
        candidate,
        opponents_efforts,
        grid_step,
        scheme,
        params,
    )
}
