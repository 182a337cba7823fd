#![allow(dead_code)]

use csc_sim::contract::{
    AccountId, Amount, ContractConfig, ContractError, ContractSim, FeedKey, Ledger, Phase,
};
use csc_sim::experiments::{sample_bets, ScenarioConfig};
use csc_sim::mechanism::payments;
use csc_sim::model::{normalize_types, GameParams, RewardScheme, TypeProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KEY: &[u8] = b"oracle-key";
pub const TARGET: &str = "https://target.example";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a valid profile of `n` attackers with bets summing to `theta *
/// award`, redrawing replicates whose rescaled bets exceed the award.
pub fn draw_profile(seed: u64, n: usize, theta: f64) -> TypeProfile {
    let cfg = ScenarioConfig {
        n,
        theta,
        seed,
        ..ScenarioConfig::default()
    };
    (0..1000)
        .find_map(|r| sample_bets(&cfg, r).ok())
        .expect("some replicate is valid")
}

/// Theta that keeps a profile of `n` attackers drawable.
pub fn feasible_theta(rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let hi = match n {
        1 => 0.99,
        2 => 1.6,
        _ => 2.0,
    };
    rng.gen_range(0.2..hi)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FuzzStats {
    pub operations: usize,
    pub settled: usize,
    pub compared_payments: usize,
    pub rejected: usize,
}

impl FuzzStats {
    pub fn add(&mut self, other: FuzzStats) {
        self.operations += other.operations;
        self.settled += other.settled;
        self.compared_payments += other.compared_payments;
        self.rejected += other.rejected;
    }
}

/// Runs one random operation sequence, checking after every operation that
/// the total value is unchanged and, after a settlement, that credits minus
/// bets match the mechanism payments.
pub fn fuzz_sequence(seed: u64) -> Result<FuzzStats, String> {
    let mut rng = rng(seed);
    let accounts: Vec<AccountId> = (0..rng.gen_range(2..8)).map(AccountId).collect();
    let ledger = Ledger::new(accounts.iter().map(|&a| (a, rng.gen_range(0.0..250.0))));
    let fee = if rng.gen_bool(0.3) {
        0.0
    } else {
        rng.gen_range(0.0..0.5)
    };
    let config = ContractConfig {
        fee,
        scheme: *RewardScheme::ALL.choose(&mut rng).unwrap(),
        charge_rejected: rng.gen_bool(0.3),
    };
    let key = FeedKey::new(KEY);
    let mut sim = ContractSim::new(ledger, config, key.clone());
    let total = sim.total_value();

    let award = rng.gen_range(20.0..150.0);
    let params =
        GameParams::from_gamma(award, rng.gen_range(1.5..3.0), rng.gen_range(0.1..0.6), fee)
            .map_err(|e| e.to_string())?;
    let mut feed = None;
    let mut stats = FuzzStats::default();

    for _ in 0..rng.gen_range(5..60) {
        let op = if rng.gen_bool(0.25) {
            rng.gen_range(0..10)
        } else {
            match sim.state().phase {
                Phase::Deployed => 0,
                Phase::Committing if sim.now() < sim.state().start_time => rng.gen_range(1..=5),
                Phase::Committing => *[5, 7, 9].choose(&mut rng).unwrap(),
                _ => *[5, 9].choose(&mut rng).unwrap(),
            }
        };
        let ok = match op {
            0 => {
                let start = sim.now() + rng.gen_range(0..8);
                let end = start + rng.gen_range(0..5);
                let bet_min = rng.gen_range(0.0..2.0);
                let sponsor = *accounts.choose(&mut rng).unwrap();
                sim.init_contract(sponsor, award, TARGET, start, end, bet_min)
                    .is_ok()
            }
            1..=4 => {
                let account = *accounts.choose(&mut rng).unwrap();
                let bet = rng.gen_range(0.0..award / 4.0);
                sim.commit_bet(account, bet).is_ok()
            }
            5 | 6 => {
                sim.advance(rng.gen_range(0..3));
                true
            }
            7 => match sim.run_attack_phase(&params) {
                Ok(f) => {
                    feed = Some(f);
                    true
                }
                Err(_) => false,
            },
            8 => sim.set_time(sim.now().saturating_sub(1)).is_ok(),
            _ => {
                let forged = feed.map(|f| csc_sim::contract::DataFeed {
                    ar: tamper(f.ar),
                    ..f
                });
                let supplied = match rng.gen_range(0..4) {
                    0 => forged,
                    1 => None,
                    _ => feed,
                };
                let grouped = sim.state().bets_by_account();
                let scheme = sim.state().scheme;
                match sim.reward_allocation(supplied.as_ref(), &params) {
                    Ok(report) => {
                        stats.settled += 1;
                        if !grouped.is_empty() {
                            let bets: Vec<f64> =
                                grouped.iter().map(|(_, b)| b.to_currency()).collect();
                            let profile =
                                normalize_types(&bets, award).map_err(|e| e.to_string())?;
                            let outcome = payments(&profile, scheme, &params);
                            for (entry, p) in report.entries.iter().zip(&outcome.payments) {
                                if (entry.payment - p).abs() > 1e-9 {
                                    return Err(format!(
                                        "seed {seed}: {} settled {} against mechanism payment {p}",
                                        entry.account, entry.payment
                                    ));
                                }
                                stats.compared_payments += 1;
                            }
                        }
                        true
                    }
                    Err(_) => false,
                }
            }
        };
        stats.operations += 1;
        if !ok {
            stats.rejected += 1;
        }
        if sim.total_value() != total {
            return Err(format!(
                "seed {seed}: total value moved from {total} to {} after operation {op}",
                sim.total_value()
            ));
        }
    }
    Ok(stats)
}

/// A different attack result still inside `[0, 1]`.
fn tamper(ar: f64) -> f64 {
    if ar > 0.5 {
        ar - 0.5
    } else {
        ar + 0.5
    }
}

fn expect(
    res: Result<(), ContractError>,
    what: &str,
    want: fn(&ContractError) -> bool,
) -> Result<(), String> {
    match res {
        Err(e) if want(&e) => Ok(()),
        other => Err(format!("{what}: got {other:?}")),
    }
}

/// Contract with two bettors committed, clock at tick 1, window [5, 10].
pub fn committed_sim() -> (ContractSim, GameParams) {
    let accounts = [
        (AccountId(0), 200.0),
        (AccountId(1), 50.0),
        (AccountId(2), 50.0),
    ];
    let mut sim = ContractSim::new(
        Ledger::new(accounts),
        ContractConfig {
            fee: 0.1,
            scheme: RewardScheme::Linear,
            charge_rejected: false,
        },
        FeedKey::new(KEY),
    );
    sim.init_contract(AccountId(0), 100.0, TARGET, 5, 10, 1.0)
        .unwrap();
    sim.advance(1);
    sim.commit_bet(AccountId(1), 30.0).unwrap();
    sim.commit_bet(AccountId(2), 20.0).unwrap();
    let params = GameParams::from_gamma(100.0, 2.0, 0.35, 0.1).unwrap();
    (sim, params)
}

/// Every guard of the contract rejects the operation it should.
pub fn guard_checks() -> Result<(), String> {
    let (mut sim, params) = committed_sim();
    expect(sim.commit_bet(AccountId(1), 1.0), "bet at bet_min", |e| {
        matches!(e, ContractError::BetTooSmall { .. })
    })?;
    expect(
        sim.commit_bet(AccountId(1), 25.0),
        "bet above balance",
        |e| matches!(e, ContractError::InsufficientFunds { .. }),
    )?;
    expect(
        sim.run_attack_phase(&params).map(|_| ()),
        "attack before start",
        |e| matches!(e, ContractError::TooEarly { .. }),
    )?;
    sim.set_time(5).unwrap();
    expect(
        sim.commit_bet(AccountId(1), 5.0),
        "bet at start time",
        |e| matches!(e, ContractError::TooLate { .. }),
    )?;
    let feed = sim.run_attack_phase(&params).map_err(|e| e.to_string())?;
    sim.set_time(10).unwrap();
    expect(
        sim.reward_allocation(Some(&feed), &params).map(|_| ()),
        "settle at end time",
        |e| matches!(e, ContractError::TooEarly { .. }),
    )?;
    sim.advance(1);
    let forged = FeedKey::new("someone else").sign(feed.ar, TARGET, 5, 10);
    expect(
        sim.reward_allocation(Some(&forged), &params).map(|_| ()),
        "forged feed",
        |e| matches!(e, ContractError::BadSignature),
    )?;
    let tampered = csc_sim::contract::DataFeed {
        ar: tamper(feed.ar),
        ..feed
    };
    expect(
        sim.reward_allocation(Some(&tampered), &params).map(|_| ()),
        "tampered result",
        |e| matches!(e, ContractError::BadSignature),
    )?;
    let other_window = FeedKey::new(KEY).sign(feed.ar, TARGET, 5, 11);
    expect(
        sim.reward_allocation(Some(&other_window), &params)
            .map(|_| ()),
        "feed for another window",
        |e| matches!(e, ContractError::BadSignature),
    )?;
    expect(
        sim.reward_allocation(None, &params).map(|_| ()),
        "missing feed",
        |e| matches!(e, ContractError::MissingFeed),
    )?;
    if sim.state().phase != Phase::Attacking || sim.state().escrow == Amount::ZERO {
        return Err("rejected settlements changed the contract".into());
    }
    sim.reward_allocation(Some(&feed), &params)
        .map_err(|e| e.to_string())?;
    expect(
        sim.reward_allocation(Some(&feed), &params).map(|_| ()),
        "second settlement",
        |e| matches!(e, ContractError::AlreadySettled),
    )?;
    Ok(())
}
