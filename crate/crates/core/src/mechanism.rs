//! The direct mechanism: payments, valuations, quasi-linear utilities and
//! checks for strategy-proofness, the budget constraint, ex-post individual
//! rationality and the fairness score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{attack_result, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{pot, GameParams, RewardScheme, TypeProfile, CURRENCY_TOL};

/// Tolerance on the sum of split parts.
pub const SPLIT_TOL: f64 = 1e-12;

/// Equilibrium plus the payment vector. A positive payment is a net profit
/// for the attacker (reward minus bet).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub equilibrium: Equilibrium,
    pub payments: Vec<f64>,
}

impl Outcome {
    pub fn attack_result(&self) -> f64 {
        self.equilibrium.attack_result
    }

    pub fn total_payment(&self) -> f64 {
        self.payments.iter().sum()
    }

    /// What the sponsor gets back: `award - sum(payments)`.
    pub fn sponsor_residual(&self, params: &GameParams) -> f64 {
        params.award() - self.total_payment()
    }
}

fn payments_at(
    profile: &TypeProfile,
    scheme: RewardScheme,
    params: &GameParams,
    attack_result: f64,
) -> Vec<f64> {
    let pot = pot(profile, params);
    scheme
        .shares(profile)
        .into_iter()
        .zip(profile.types())
        .map(|(s, t)| pot * s * attack_result - t * params.award())
        .collect()
}

pub fn payments(profile: &TypeProfile, scheme: RewardScheme, params: &GameParams) -> Outcome {
    let equilibrium = attack_result(profile, scheme, params);
    let payments = payments_at(profile, scheme, params, equilibrium.attack_result);
    Outcome {
        equilibrium,
        payments,
    }
}

/// What attacker `i` is willing to tolerate for the attack result: his
/// equilibrium traffic cost plus `k` transaction fees, negated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valuation {
    pub value: f64,
    pub transactions: u32,
}

impl Valuation {
    pub fn new(effort: f64, transactions: u32, params: &GameParams) -> Result<Self> {
        if transactions < 1 {
            return Err(Error::InvalidTransactionCount(transactions));
        }
        let value = -(params.cost(effort)? + f64::from(transactions) * params.fee());
        Ok(Self {
            value,
            transactions,
        })
    }
}

pub fn valuation(
    profile: &TypeProfile,
    i: usize,
    k: u32,
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<Valuation> {
    let eq = attack_result(profile, scheme, params);
    let effort = *eq.efforts.get(i).ok_or(Error::IndexOutOfBounds {
        index: i,
        len: profile.len(),
    })?;
    Valuation::new(effort, k, params)
}

fn quasi_utility_in(outcome: &Outcome, i: usize, k: u32, params: &GameParams) -> Result<f64> {
    let v = Valuation::new(outcome.equilibrium.efforts[i], k, params)?;
    Ok(v.value + outcome.payments[i])
}

/// Valuation plus payment of attacker `i` betting with `k` transactions.
pub fn quasi_utility(
    profile: &TypeProfile,
    i: usize,
    k: u32,
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<f64> {
    profile.get(i)?;
    if k < 1 {
        return Err(Error::InvalidTransactionCount(k));
    }
    quasi_utility_in(&payments(profile, scheme, params), i, k, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub truthful_utility: f64,
    pub split_utility: f64,
    /// `truthful_utility - split_utility`.
    pub gap: f64,
    pub parts: usize,
}

/// Compares betting the true type from one identity against spreading it
/// over several identities, one transaction each.
///
/// The splitting attacker still plays the effort of his true type, so the
/// attack result is the truthful one; only shares and fees change.
pub fn check_dsic_split(
    profile: &TypeProfile,
    i: usize,
    split: &[f64],
    scheme: RewardScheme,
    params: &GameParams,
) -> Result<SplitReport> {
    let t_i = profile.get(i)?;
    if let Some((index, &value)) = split.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::InvalidSplitPart { index, value });
    }
    let got: f64 = split.iter().sum();
    if split.is_empty() || (got - t_i).abs() > SPLIT_TOL {
        return Err(Error::SplitMismatch { expected: t_i, got });
    }

    let truthful = payments(profile, scheme, params);
    let truthful_utility = quasi_utility_in(&truthful, i, 1, params)?;

    let expanded = profile.split_at(i, split)?;
    let split_payments = payments_at(&expanded, scheme, params, truthful.attack_result());
    let payment: f64 = split_payments[i..i + split.len()].iter().sum();
    let k = u32::try_from(split.len()).map_err(|_| Error::InvalidTransactionCount(u32::MAX))?;
    let v = Valuation::new(truthful.equilibrium.efforts[i], k, params)?;
    let split_utility = v.value + payment;

    Ok(SplitReport {
        truthful_utility,
        split_utility,
        gap: truthful_utility - split_utility,
        parts: split.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub within_budget: bool,
    /// `award - sum(payments)`.
    pub slack: f64,
}

pub fn check_budget(outcome: &Outcome, params: &GameParams) -> BudgetReport {
    let total = outcome.total_payment();
    BudgetReport {
        within_budget: total <= params.award() + CURRENCY_TOL,
        slack: params.award() - total,
    }
}

/// Withdrawal utility an attacker must at least reach to stay in.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IrThreshold {
    /// `2 * fee`, as the participation constraint is literally written.
    #[default]
    Literal,
    /// `-2 * fee`: withdrawing costs two fees.
    Negated,
    Fixed(f64),
}

impl IrThreshold {
    pub fn value(self, params: &GameParams) -> f64 {
        match self {
            IrThreshold::Literal => 2.0 * params.fee(),
            IrThreshold::Negated => -2.0 * params.fee(),
            IrThreshold::Fixed(v) => v,
        }
    }
}

impl FromStr for IrThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "literal" => Ok(IrThreshold::Literal),
            "negated" => Ok(IrThreshold::Negated),
            "-inf" => Ok(IrThreshold::Fixed(f64::NEG_INFINITY)),
            other => other
                .parse::<f64>()
                .map(IrThreshold::Fixed)
                .map_err(|_| Error::Config(format!("bad IR threshold `{s}`"))),
        }
    }
}

impl fmt::Display for IrThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrThreshold::Literal => f.write_str("literal"),
            IrThreshold::Negated => f.write_str("negated"),
            IrThreshold::Fixed(v) => write!(f, "{v}"),
        }
    }
}

fn ir_flags(outcome: &Outcome, params: &GameParams, threshold: f64) -> Vec<bool> {
    (0..outcome.payments.len())
        .map(|i| {
            quasi_utility_in(outcome, i, 1, params).expect("single transaction is valid")
                >= threshold
        })
        .collect()
}

/// Per attacker: does a single-transaction truthful bet reach `threshold`?
pub fn check_ex_post_ir(
    profile: &TypeProfile,
    scheme: RewardScheme,
    params: &GameParams,
    threshold: f64,
) -> Vec<bool> {
    ir_flags(&payments(profile, scheme, params), params, threshold)
}

pub fn check_ex_post_ir_outcome(
    outcome: &Outcome,
    params: &GameParams,
    threshold: f64,
) -> Vec<bool> {
    ir_flags(outcome, params, threshold)
}

/// RMS distance between the payments and contribution-based payments
/// `award * e_i * e_tot`, using delivered efforts and the capped result.
pub fn fairness_of(outcome: &Outcome, params: &GameParams) -> f64 {
    let e_tot = outcome.attack_result();
    let delivered = outcome.equilibrium.delivered_efforts();
    let n = outcome.payments.len() as f64;
    let sq: f64 = outcome
        .payments
        .iter()
        .zip(&delivered)
        .map(|(p, e)| {
            let d = p - params.award() * e * e_tot;
            d * d
        })
        .sum();
    (sq / n).sqrt()
}

pub fn fairness_score(profile: &TypeProfile, scheme: RewardScheme, params: &GameParams) -> f64 {
    fairness_of(&payments(profile, scheme, params), params)
}

/// One line of a property-check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub scenario: String,
    pub check: String,
    pub passed: bool,
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize_types;

    fn params(gamma: f64, fee: f64) -> GameParams {
        GameParams::from_gamma(100.0, 2.0, gamma, fee).unwrap()
    }

    #[test]
    fn zero_result_pays_back_nothing() {
        let p = params(5.0, 0.1);
        let profile = normalize_types(&[10.0, 20.0], 100.0).unwrap();
        let out = payments(&profile, RewardScheme::Linear, &p);
        assert_eq!(out.attack_result(), 0.0);
        assert_eq!(out.payments, vec![-10.0, -20.0]);
        let b = check_budget(&out, &p);
        assert!(b.within_budget);
        assert!((b.slack - 130.0).abs() < 1e-9);

        let u = quasi_utility(&profile, 0, 1, RewardScheme::Linear, &p).unwrap();
        assert!((u - (-10.0 - 0.1)).abs() < 1e-12);
        assert!(
            check_ex_post_ir(&profile, RewardScheme::Linear, &p, 2.0 * 0.1)
                .iter()
                .all(|ok| !ok)
        );
        assert!(
            check_ex_post_ir(&profile, RewardScheme::Linear, &p, f64::NEG_INFINITY)
                .iter()
                .all(|ok| *ok)
        );
    }

    #[test]
    fn full_result_linear_pays_award_exactly() {
        let p = params(0.01, 0.0);
        let profile = normalize_types(&[30.0, 50.0, 60.0], 100.0).unwrap();
        let out = payments(&profile, RewardScheme::Linear, &p);
        assert_eq!(out.attack_result(), 1.0);
        for (i, bet) in [30.0, 50.0, 60.0].iter().enumerate() {
            assert!((out.payments[i] - 100.0 * bet / 140.0).abs() < 1e-9);
        }
        assert!((out.total_payment() - 100.0).abs() < 1e-9);
        assert!(check_budget(&out, &p).slack.abs() < 1e-9);
        assert!(out.sponsor_residual(&p).abs() < 1e-9);
    }

    #[test]
    fn fee_free_utility_ignores_transaction_count() {
        let p = params(0.35, 0.0);
        let profile = normalize_types(&[30.0, 50.0, 60.0], 100.0).unwrap();
        let u1 = quasi_utility(&profile, 1, 1, RewardScheme::Square, &p).unwrap();
        let u5 = quasi_utility(&profile, 1, 5, RewardScheme::Square, &p).unwrap();
        assert_eq!(u1, u5);
        assert_eq!(
            quasi_utility(&profile, 1, 0, RewardScheme::Square, &p),
            Err(Error::InvalidTransactionCount(0))
        );
    }

    #[test]
    fn valuation_is_negative_cost_plus_fees() {
        let p = params(0.35, 0.2);
        let v = Valuation::new(0.5, 3, &p).unwrap();
        assert!((v.value + p.cost(0.5).unwrap() + 0.6).abs() < 1e-12);
        assert!(v.value <= 0.0);
    }

    #[test]
    fn linear_split_costs_exactly_one_fee() {
        let p = params(0.35, 0.1);
        let profile = TypeProfile::new(vec![0.2, 0.5, 0.6]).unwrap();
        let r = check_dsic_split(&profile, 0, &[0.1, 0.1], RewardScheme::Linear, &p).unwrap();
        assert!((r.gap - 0.1).abs() < 1e-9, "gap {}", r.gap);
    }

    #[test]
    fn no_op_split_has_zero_gap() {
        let p = params(0.35, 0.1);
        let profile = TypeProfile::new(vec![0.2, 0.5, 0.6]).unwrap();
        for s in RewardScheme::ALL {
            let r = check_dsic_split(&profile, 0, &[0.2], s, &p).unwrap();
            assert_eq!(r.gap, 0.0);
        }
    }

    #[test]
    fn square_split_loses_more_than_the_fee() {
        let p = params(0.2, 0.1);
        let profile = TypeProfile::new(vec![0.2, 0.5, 0.6]).unwrap();
        let out = payments(&profile, RewardScheme::Square, &p);
        assert!(out.attack_result() > 0.0);
        let r = check_dsic_split(&profile, 0, &[0.1, 0.1], RewardScheme::Square, &p).unwrap();
        // squared weight of the two halves is 0.02 against 0.04 unsplit
        assert!(r.gap > 0.1 + 1e-6, "gap {}", r.gap);
    }

    #[test]
    fn split_validation() {
        let p = params(0.35, 0.1);
        let profile = TypeProfile::new(vec![0.2, 0.5]).unwrap();
        assert!(matches!(
            check_dsic_split(&profile, 0, &[0.1, 0.2], RewardScheme::Linear, &p),
            Err(Error::SplitMismatch { .. })
        ));
        assert!(matches!(
            check_dsic_split(&profile, 0, &[0.3, -0.1], RewardScheme::Linear, &p),
            Err(Error::InvalidSplitPart { index: 1, .. })
        ));
    }

    #[test]
    fn fairness_zero_for_matching_single_attacker() {
        // one attacker: payment = (bet + AW) * e - bet, fair = AW * e * e
        // with e = 1 both equal AW
        let p = params(0.01, 0.0);
        let profile = TypeProfile::new(vec![0.5]).unwrap();
        let out = payments(&profile, RewardScheme::Linear, &p);
        assert_eq!(out.attack_result(), 1.0);
        assert!(fairness_of(&out, &p).abs() < 1e-9);
    }

    #[test]
    fn ir_threshold_values() {
        let p = params(0.35, 0.25);
        assert_eq!(IrThreshold::Literal.value(&p), 0.5);
        assert_eq!(IrThreshold::Negated.value(&p), -0.5);
        assert_eq!(
            "3.5".parse::<IrThreshold>().unwrap(),
            IrThreshold::Fixed(3.5)
        );
        assert!("nope".parse::<IrThreshold>().is_err());
    }
}
