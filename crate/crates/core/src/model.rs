//! Scenario constants and the primitive functions of the attack game: the
//! traffic cost, the reward allocation rules and the attack-phase utility.
//!
//! All traffic quantities are measured in units of the traffic needed for a
//! successful attack, so an effort of `1.0` means "launches the whole attack
//! alone" and the cost pole sits at `e_max > 1`.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on currency comparisons.
pub const CURRENCY_TOL: f64 = 1e-9;

/// Global constants of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    award: f64,
    e_max: f64,
    cost_factor: f64,
    fee: f64,
}

impl GameParams {
    /// Builds parameters from an explicit cost factor `c`.
    pub fn new(award: f64, e_max: f64, cost_factor: f64, fee: f64) -> Result<Self> {
        if !(award > 0.0 && award.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "award must be positive, got {award}"
            )));
        }
        if !(e_max > 1.0 && e_max.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "e_max must exceed 1, got {e_max}"
            )));
        }
        if !(cost_factor >= 0.0 && cost_factor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "cost factor must be non-negative, got {cost_factor}"
            )));
        }
        if !(fee >= 0.0 && fee.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "fee must be non-negative, got {fee}"
            )));
        }
        Ok(Self {
            award,
            e_max,
            cost_factor,
            fee,
        })
    }

    /// Builds parameters from the cost ratio `gamma = cost(1) / award`.
    ///
    /// Inverting the cost function at `e = 1` gives
    /// `c = gamma * award * (e_max - 1) / (e - 1)`.
    pub fn from_gamma(award: f64, e_max: f64, gamma: f64, fee: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "gamma must be non-negative, got {gamma}"
            )));
        }
        let c = gamma * award * (e_max - 1.0) / (E - 1.0);
        Self::new(award, e_max, c, fee)
    }

    pub fn award(&self) -> f64 {
        self.award
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn cost_factor(&self) -> f64 {
        self.cost_factor
    }

    pub fn fee(&self) -> f64 {
        self.fee
    }

    /// Cost of a full successful attack relative to the award.
    pub fn gamma(&self) -> f64 {
        self.cost_factor * (E - 1.0) / (self.e_max - 1.0) / self.award
    }

    pub fn with_fee(self, fee: f64) -> Result<Self> {
        Self::new(self.award, self.e_max, self.cost_factor, fee)
    }

    fn check_effort(&self, e: f64) -> Result<()> {
        if e >= 0.0 && e < self.e_max {
            Ok(())
        } else {
            Err(Error::EffortOutOfRange {
                effort: e,
                e_max: self.e_max,
            })
        }
    }

    /// Traffic cost `c * (exp(e) - 1) / (e_max - e)`; diverges at `e_max`.
    pub fn cost(&self, e: f64) -> Result<f64> {
        self.check_effort(e)?;
        Ok(self.cost_factor * (e.exp() - 1.0) / (self.e_max - e))
    }

    /// Derivative of [`GameParams::cost`].
    pub fn marginal_cost(&self, e: f64) -> Result<f64> {
        self.check_effort(e)?;
        let gap = self.e_max - e;
        let ex = e.exp();
        Ok(self.cost_factor * ex / gap + self.cost_factor * (ex - 1.0) / (gap * gap))
    }
}

/// Private types `t_i = bet_i / award` of all attackers, in bet order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile {
    types: Vec<f64>,
}

impl TypeProfile {
    pub fn new(types: Vec<f64>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some((index, &value)) = types
            .iter()
            .enumerate()
            .find(|(_, t)| !(**t > 0.0 && **t < 1.0))
        {
            return Err(Error::TypeOutOfRange { index, value });
        }
        Ok(Self { types })
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<f64> {
        self.types.get(i).copied().ok_or(Error::IndexOutOfBounds {
            index: i,
            len: self.types.len(),
        })
    }

    /// `theta = bet_t / award`, i.e. the sum of the types.
    pub fn theta(&self) -> f64 {
        self.types.iter().sum()
    }

    pub fn bet(&self, i: usize, award: f64) -> Result<f64> {
        Ok(self.get(i)? * award)
    }

    pub fn bets(&self, award: f64) -> Vec<f64> {
        self.types.iter().map(|t| t * award).collect()
    }

    /// Total bet, always recomputed from the types.
    pub fn bet_total(&self, award: f64) -> f64 {
        self.types.iter().map(|t| t * award).sum()
    }

    /// Profile with attacker `i` replaced, in place, by the given parts.
    pub fn split_at(&self, i: usize, parts: &[f64]) -> Result<Self> {
        self.get(i)?;
        let mut types = Vec::with_capacity(self.types.len() + parts.len() - 1);
        types.extend_from_slice(&self.types[..i]);
        types.extend_from_slice(parts);
        types.extend_from_slice(&self.types[i + 1..]);
        Self::new(types)
    }
}

/// Converts bets into types, keeping the original order.
pub fn normalize_types(bets: &[f64], award: f64) -> Result<TypeProfile> {
    if !(award > 0.0) {
        return Err(Error::InvalidParams(format!(
            "award must be positive, got {award}"
        )));
    }
    for (index, &bet) in bets.iter().enumerate() {
        if !(bet > 0.0) {
            return Err(Error::NonPositiveBet { index, bet });
        }
        if bet >= award {
            return Err(Error::BetExceedsAward { index, bet, award });
        }
    }
    TypeProfile::new(bets.iter().map(|b| b / award).collect())
}

/// How the pot is divided among attackers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardScheme {
    /// Share proportional to the bet.
    Linear,
    /// Share proportional to the squared bet.
    Square,
}

impl RewardScheme {
    pub const ALL: [RewardScheme; 2] = [RewardScheme::Linear, RewardScheme::Square];

    fn weight(self, t: f64) -> f64 {
        match self {
            RewardScheme::Linear => t,
            RewardScheme::Square => t * t,
        }
    }

    /// Shares of all attackers; they sum to one.
    pub fn shares(self, profile: &TypeProfile) -> Vec<f64> {
        let total: f64 = profile.types().iter().map(|&t| self.weight(t)).sum();
        profile
            .types()
            .iter()
            .map(|&t| self.weight(t) / total)
            .collect()
    }

    pub fn share(self, profile: &TypeProfile, i: usize) -> Result<f64> {
        let t = profile.get(i)?;
        let total: f64 = profile.types().iter().map(|&t| self.weight(t)).sum();
        Ok(self.weight(t) / total)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RewardScheme::Linear => "linear",
            RewardScheme::Square => "square",
        }
    }
}

impl fmt::Display for RewardScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(RewardScheme::Linear),
            "square" => Ok(RewardScheme::Square),
            other => Err(Error::Config(format!("unknown reward scheme `{other}`"))),
        }
    }
}

/// Pot size `bet_t + award`.
pub fn pot(profile: &TypeProfile, params: &GameParams) -> f64 {
    profile.bet_total(params.award()) + params.award()
}

pub fn reward_share(scheme: RewardScheme, profile: &TypeProfile, i: usize) -> Result<f64> {
    scheme.share(profile, i)
}

/// Reward of attacker `i` for a (capped) attack result `e_tot`.
pub fn reward(
    scheme: RewardScheme,
    profile: &TypeProfile,
    i: usize,
    e_tot: f64,
    params: &GameParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&e_tot) {
        return Err(Error::ResultOutOfRange(e_tot));
    }
    Ok(pot(profile, params) * scheme.share(profile, i)? * e_tot)
}

/// Utility of attacker `i` during the attack phase: reward at the capped
/// result, minus own traffic cost, minus the bet.
pub fn attack_phase_utility(
    profile: &TypeProfile,
    i: usize,
    e_i: f64,
    e_tot: f64,
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<f64> {
    if e_i > e_tot {
        return Err(Error::EffortExceedsTotal {
            effort: e_i,
            total: e_tot,
        });
    }
    let cost = params.cost(e_i)?;
    let r = reward(scheme, profile, i, e_tot.min(1.0), params)?;
    Ok(r - cost - profile.bet(i, params.award())?)
}
