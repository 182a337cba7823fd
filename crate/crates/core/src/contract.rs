//! Simulation of the escrow contract: a sponsor deposits the award, attackers
//! commit bets before the attack window opens, an oracle reports the attack
//! result, and after the window closes the contract pays out and refunds the
//! rest to the sponsor.
//!
//! Balances are integer pico-units so that value is conserved exactly. Time
//! is a logical tick advanced by the driver; every transaction is applied at
//! the tick it is submitted. Nothing here touches a network.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::equilibrium::attack_result;
use crate::error::Error as ModelError;
use crate::model::{normalize_types, pot, GameParams, RewardScheme, TypeProfile};

/// Ledger units per unit of currency.
pub const UNITS_PER_CURRENCY: f64 = 1e12;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Amount(i128);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub fn from_units(units: i128) -> Self {
        Amount(units)
    }

    /// Rounds to the nearest unit.
    pub fn from_currency(value: f64) -> Self {
        Amount((value * UNITS_PER_CURRENCY).round() as i128)
    }

    fn floor_currency(value: f64) -> Self {
        Amount((value * UNITS_PER_CURRENCY).floor() as i128)
    }

    pub fn units(self) -> i128 {
        self.0
    }

    pub fn to_currency(self) -> f64 {
        self.0 as f64 / UNITS_PER_CURRENCY
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0 + rhs.0)
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0 - rhs.0)
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Amount {
    fn sub_assign(&mut self, rhs: Amount) {
        self.0 -= rhs.0;
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, Add::add)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_currency())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AccountId(pub u32);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "acct{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractError {
    #[error("{account} holds {available}, needs {needed}")]
    InsufficientFunds {
        account: AccountId,
        needed: Amount,
        available: Amount,
    },
    #[error("start time {start} is not before end time {end}")]
    InvalidWindow { start: u64, end: u64 },
    #[error("bet submitted at tick {now}, betting closed at {start}")]
    TooLate { now: u64, start: u64 },
    #[error("bet {bet} does not exceed the minimum {bet_min}")]
    BetTooSmall { bet: Amount, bet_min: Amount },
    #[error("tick {now} is too early (needs {required})")]
    TooEarly { now: u64, required: u64 },
    #[error("data feed tag does not verify")]
    BadSignature,
    #[error("no data feed supplied")]
    MissingFeed,
    #[error("data feed reports attack result {0} outside [0, 1]")]
    BadFeed(f64),
    #[error("contract already settled")]
    AlreadySettled,
    #[error("no bets were committed")]
    NoBets,
    #[error("operation not allowed in phase {0:?}")]
    WrongPhase(Phase),
    #[error("clock cannot move back from {now} to {to}")]
    ClockBackwards { now: u64, to: u64 },
    #[error("game parameters disagree with the contract: {0}")]
    ParamMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type ContractResult<T> = std::result::Result<T, ContractError>;

/// Account balances plus the fees collected from accepted transactions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    balances: BTreeMap<AccountId, Amount>,
    fee_sink: Amount,
}

impl Ledger {
    pub fn new<I>(balances: I) -> Self
    where
        I: IntoIterator<Item = (AccountId, f64)>,
    {
        Self {
            balances: balances
                .into_iter()
                .map(|(a, v)| (a, Amount::from_currency(v)))
                .collect(),
            fee_sink: Amount::ZERO,
        }
    }

    pub fn balance(&self, account: AccountId) -> Amount {
        self.balances.get(&account).copied().unwrap_or_default()
    }

    pub fn fee_sink(&self) -> Amount {
        self.fee_sink
    }

    pub fn total(&self) -> Amount {
        self.balances.values().copied().sum::<Amount>() + self.fee_sink
    }

    fn credit(&mut self, account: AccountId, amount: Amount) {
        *self.balances.entry(account).or_default() += amount;
    }

    fn debit(&mut self, account: AccountId, amount: Amount) {
        *self.balances.entry(account).or_default() -= amount;
    }

    /// Fees are debited unconditionally; a balance may go negative.
    fn charge_fee(&mut self, account: AccountId, fee: Amount) {
        self.debit(account, fee);
        self.fee_sink += fee;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Deployed,
    Committing,
    Attacking,
    Settled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Betting {
    pub account: AccountId,
    pub bet: Amount,
    pub reward: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractState {
    pub phase: Phase,
    pub owner: Option<AccountId>,
    pub award: Amount,
    pub bet_min: Amount,
    pub target: String,
    pub start_time: u64,
    pub end_time: u64,
    pub scheme: RewardScheme,
    pub bettings: Vec<Betting>,
    pub escrow: Amount,
}

impl ContractState {
    fn deployed(scheme: RewardScheme) -> Self {
        Self {
            phase: Phase::Deployed,
            owner: None,
            award: Amount::ZERO,
            bet_min: Amount::ZERO,
            target: String::new(),
            start_time: 0,
            end_time: 0,
            scheme,
            bettings: Vec::new(),
            escrow: Amount::ZERO,
        }
    }

    /// Accounts in order of their first bet, with their summed bets.
    pub fn bets_by_account(&self) -> Vec<(AccountId, Amount)> {
        let mut out: Vec<(AccountId, Amount)> = Vec::new();
        for b in &self.bettings {
            match out.iter_mut().find(|(a, _)| *a == b.account) {
                Some((_, total)) => *total += b.bet,
                None => out.push((b.account, b.bet)),
            }
        }
        out
    }
}

/// Attack result reported by the oracle with its tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataFeed {
    pub ar: f64,
    pub tag: [u8; 32],
}

/// Keyed-digest stand-in for the oracle's signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedKey(Vec<u8>);

impl FeedKey {
    pub fn new(key: impl Into<Vec<u8>>) -> Self {
        Self(key.into())
    }

    fn tag(&self, ar: f64, target: &str, start: u64, end: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.0.len() as u64).to_le_bytes());
        h.update(&self.0);
        h.update(ar.to_bits().to_le_bytes());
        h.update((target.len() as u64).to_le_bytes());
        h.update(target.as_bytes());
        h.update(start.to_le_bytes());
        h.update(end.to_le_bytes());
        h.finalize().into()
    }

    pub fn sign(&self, ar: f64, target: &str, start: u64, end: u64) -> DataFeed {
        DataFeed {
            ar,
            tag: self.tag(ar, target, start, end),
        }
    }

    pub fn verify(&self, feed: &DataFeed, target: &str, start: u64, end: u64) -> bool {
        self.tag(feed.ar, target, start, end) == feed.tag
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub tick: u64,
    pub op: String,
    pub account: String,
    pub amount: f64,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementEntry {
    pub account: AccountId,
    pub bet: f64,
    pub reward: f64,
    /// Reward minus bet.
    pub payment: f64,
    pub transactions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub attack_result: f64,
    pub entries: Vec<SettlementEntry>,
    /// Escrow left over and returned to the owner.
    pub sponsor_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractConfig {
    pub fee: f64,
    pub scheme: RewardScheme,
    /// Charge the fee on rejected transactions too.
    pub charge_rejected: bool,
}

impl Default for ContractConfig {
    fn default() -> Self {
        Self {
            fee: 0.0,
            scheme: RewardScheme::Linear,
            charge_rejected: false,
        }
    }
}

/// Ledger, contract and clock behind one owner; operations apply in order.
#[derive(Debug, Clone)]
pub struct ContractSim {
    ledger: Ledger,
    state: ContractState,
    clock: u64,
    fee: Amount,
    charge_rejected: bool,
    key: FeedKey,
    accepted: u64,
    trace: Vec<TraceEntry>,
}

impl ContractSim {
    pub fn new(ledger: Ledger, config: ContractConfig, key: FeedKey) -> Self {
        Self {
            ledger,
            state: ContractState::deployed(config.scheme),
            clock: 0,
            fee: Amount::from_currency(config.fee),
            charge_rejected: config.charge_rejected,
            key,
            accepted: 0,
            trace: Vec::new(),
        }
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn accepted_transactions(&self) -> u64 {
        self.accepted
    }

    /// Everything on the books: balances, fees and escrow.
    pub fn total_value(&self) -> Amount {
        self.ledger.total() + self.state.escrow
    }

    pub fn advance(&mut self, ticks: u64) {
        self.clock += ticks;
    }

    pub fn set_time(&mut self, tick: u64) -> ContractResult<()> {
        if tick < self.clock {
            return Err(ContractError::ClockBackwards {
                now: self.clock,
                to: tick,
            });
        }
        self.clock = tick;
        Ok(())
    }

    fn log(&mut self, op: &str, account: Option<AccountId>, amount: f64, result: String) {
        self.trace.push(TraceEntry {
            tick: self.clock,
            op: op.to_owned(),
            account: account.map(|a| a.to_string()).unwrap_or_default(),
            amount,
            result,
        });
    }

    fn finish<T>(
        &mut self,
        op: &str,
        account: Option<AccountId>,
        amount: f64,
        res: ContractResult<T>,
    ) -> ContractResult<T> {
        match &res {
            Ok(_) => self.log(op, account, amount, "ok".to_owned()),
            Err(e) => {
                if self.charge_rejected {
                    if let Some(a) = account {
                        self.ledger.charge_fee(a, self.fee);
                    }
                }
                self.log(op, account, amount, format!("rejected: {e}"));
            }
        }
        res
    }

    fn accept_fee(&mut self, payer: AccountId) {
        self.ledger.charge_fee(payer, self.fee);
        self.accepted += 1;
    }

    pub fn init_contract(
        &mut self,
        sponsor: AccountId,
        award: f64,
        target_url: &str,
        start_time: u64,
        end_time: u64,
        bet_min: f64,
    ) -> ContractResult<()> {
        let res = self.try_init(sponsor, award, target_url, start_time, end_time, bet_min);
        self.finish("init", Some(sponsor), award, res)
    }

    fn try_init(
        &mut self,
        sponsor: AccountId,
        award: f64,
        target_url: &str,
        start_time: u64,
        end_time: u64,
        bet_min: f64,
    ) -> ContractResult<()> {
        if self.state.phase != Phase::Deployed {
            return Err(ContractError::WrongPhase(self.state.phase));
        }
        if start_time >= end_time {
            return Err(ContractError::InvalidWindow {
                start: start_time,
                end: end_time,
            });
        }
        let award = Amount::from_currency(award);
        if award <= Amount::ZERO {
            return Err(ModelError::InvalidParams("award must be positive".into()).into());
        }
        let available = self.ledger.balance(sponsor);
        if available < award {
            return Err(ContractError::InsufficientFunds {
                account: sponsor,
                needed: award,
                available,
            });
        }
        self.ledger.debit(sponsor, award);
        self.state.escrow += award;
        self.accept_fee(sponsor);
        self.state.owner = Some(sponsor);
        self.state.award = award;
        self.state.bet_min = Amount::from_currency(bet_min);
        self.state.target = target_url.to_owned();
        self.state.start_time = start_time;
        self.state.end_time = end_time;
        self.state.phase = Phase::Committing;
        Ok(())
    }

    pub fn commit_bet(&mut self, account: AccountId, bet: f64) -> ContractResult<()> {
        let res = self.try_commit(account, bet);
        self.finish("commit", Some(account), bet, res)
    }

    fn try_commit(&mut self, account: AccountId, bet: f64) -> ContractResult<()> {
        if self.state.phase != Phase::Committing {
            return Err(ContractError::WrongPhase(self.state.phase));
        }
        if self.clock >= self.state.start_time {
            return Err(ContractError::TooLate {
                now: self.clock,
                start: self.state.start_time,
            });
        }
        let bet = Amount::from_currency(bet);
        if bet <= self.state.bet_min {
            return Err(ContractError::BetTooSmall {
                bet,
                bet_min: self.state.bet_min,
            });
        }
        let available = self.ledger.balance(account);
        if available < bet {
            return Err(ContractError::InsufficientFunds {
                account,
                needed: bet,
                available,
            });
        }
        self.ledger.debit(account, bet);
        self.state.escrow += bet;
        self.accept_fee(account);
        self.state.bettings.push(Betting {
            account,
            bet,
            reward: Amount::ZERO,
        });
        Ok(())
    }

    fn profile(&self) -> ContractResult<TypeProfile> {
        let bets: Vec<f64> = self
            .state
            .bets_by_account()
            .into_iter()
            .map(|(_, b)| b.to_currency())
            .collect();
        Ok(normalize_types(&bets, self.state.award.to_currency())?)
    }

    fn check_params(&self, params: &GameParams) -> ContractResult<()> {
        if Amount::from_currency(params.award()) != self.state.award {
            return Err(ContractError::ParamMismatch(format!(
                "award {} against escrowed award {}",
                params.award(),
                self.state.award
            )));
        }
        Ok(())
    }

    /// Plays the attack window: computes the equilibrium attack result for
    /// the committed bets and returns it as a tagged data feed. Each account
    /// is one identity.
    pub fn run_attack_phase(&mut self, params: &GameParams) -> ContractResult<DataFeed> {
        let res = self.try_attack(params);
        let ar = res.as_ref().map(|f| f.ar).unwrap_or(f64::NAN);
        match &res {
            Ok(_) => self.log("attack", None, ar, "ok".to_owned()),
            Err(e) => self.log("attack", None, 0.0, format!("rejected: {e}")),
        }
        res
    }

    fn try_attack(&mut self, params: &GameParams) -> ContractResult<DataFeed> {
        if self.state.phase != Phase::Committing {
            return Err(ContractError::WrongPhase(self.state.phase));
        }
        if self.clock < self.state.start_time {
            return Err(ContractError::TooEarly {
                now: self.clock,
                required: self.state.start_time,
            });
        }
        if self.state.bettings.is_empty() {
            return Err(ContractError::NoBets);
        }
        self.check_params(params)?;
        let profile = self.profile()?;
        let eq = attack_result(&profile, self.state.scheme, params);
        self.state.phase = Phase::Attacking;
        Ok(self.key.sign(
            eq.attack_result,
            &self.state.target,
            self.state.start_time,
            self.state.end_time,
        ))
    }

    /// Pays out after the window closes. Without bets the whole escrow goes
    /// back to the owner and the feed is not needed.
    pub fn reward_allocation(
        &mut self,
        feed: Option<&DataFeed>,
        params: &GameParams,
    ) -> ContractResult<SettlementReport> {
        let owner = self.state.owner;
        let res = self.try_settle(feed, params);
        let amount = res.as_ref().map(|r| r.sponsor_residual).unwrap_or(0.0);
        self.finish("settle", owner, amount, res)
    }

    fn try_settle(
        &mut self,
        feed: Option<&DataFeed>,
        params: &GameParams,
    ) -> ContractResult<SettlementReport> {
        let owner = match (self.state.phase, self.state.owner) {
            (Phase::Settled, _) => return Err(ContractError::AlreadySettled),
            (Phase::Committing | Phase::Attacking, Some(owner)) => owner,
            (phase, _) => return Err(ContractError::WrongPhase(phase)),
        };
        if self.clock <= self.state.end_time {
            return Err(ContractError::TooEarly {
                now: self.clock,
                required: self.state.end_time + 1,
            });
        }
        let grouped = self.state.bets_by_account();
        let (ar, rewards) = if grouped.is_empty() {
            (0.0, Vec::new())
        } else {
            let feed = feed.ok_or(ContractError::MissingFeed)?;
            let (target, start, end) = (
                &self.state.target,
                self.state.start_time,
                self.state.end_time,
            );
            if !self.key.verify(feed, target, start, end) {
                return Err(ContractError::BadSignature);
            }
            if !(0.0..=1.0).contains(&feed.ar) {
                return Err(ContractError::BadFeed(feed.ar));
            }
            self.check_params(params)?;
            let profile = self.profile()?;
            (feed.ar, self.compute_rewards(&profile, params, feed.ar))
        };

        self.accept_fee(owner);
        let mut entries = Vec::with_capacity(grouped.len());
        for ((account, bet), reward) in grouped.iter().zip(&rewards) {
            self.ledger.credit(*account, *reward);
            self.state.escrow -= *reward;
            self.spread_reward(*account, *bet, *reward);
            entries.push(SettlementEntry {
                account: *account,
                bet: bet.to_currency(),
                reward: reward.to_currency(),
                payment: (*reward - *bet).to_currency(),
                transactions: self
                    .state
                    .bettings
                    .iter()
                    .filter(|b| b.account == *account)
                    .count() as u32,
            });
        }
        let residual = self.state.escrow;
        self.ledger.credit(owner, residual);
        self.state.escrow = Amount::ZERO;
        self.state.phase = Phase::Settled;
        Ok(SettlementReport {
            attack_result: ar,
            entries,
            sponsor_residual: residual.to_currency(),
        })
    }

    /// Per-account rewards, rounded down and never more than the escrow.
    fn compute_rewards(&self, profile: &TypeProfile, params: &GameParams, ar: f64) -> Vec<Amount> {
        let pot = pot(profile, params);
        let mut rewards: Vec<Amount> = self
            .state
            .scheme
            .shares(profile)
            .into_iter()
            .map(|s| Amount::floor_currency(pot * s * ar).max(Amount::ZERO))
            .collect();
        let total: Amount = rewards.iter().copied().sum();
        if total > self.state.escrow {
            let excess = total - self.state.escrow;
            if let Some(max) = rewards.iter_mut().max() {
                *max -= excess;
            }
        }
        rewards
    }

    /// Records the account's reward on its betting records pro rata to bet.
    fn spread_reward(&mut self, account: AccountId, account_bet: Amount, reward: Amount) {
        let idx: Vec<usize> = (0..self.state.bettings.len())
            .filter(|&i| self.state.bettings[i].account == account)
            .collect();
        let mut left = reward;
        for (n, &i) in idx.iter().enumerate() {
            let share = if n + 1 == idx.len() {
                left
            } else {
                Amount::from_units(
                    reward.units() * self.state.bettings[i].bet.units() / account_bet.units(),
                )
            };
            self.state.bettings[i].reward = share;
            left -= share;
        }
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.trace {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_settlement_csv<W: Write>(report: &SettlementReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["account", "bet", "reward", "payment", "transactions"])?;
    for e in &report.entries {
        w.write_record([
            e.account.to_string(),
            e.bet.to_string(),
            e.reward.to_string(),
            e.payment.to_string(),
            e.transactions.to_string(),
        ])?;
    }
    w.write_record([
        "sponsor".to_owned(),
        String::new(),
        report.sponsor_residual.to_string(),
        String::new(),
        String::new(),
    ])?;
    w.flush()?;
    Ok(())
}
