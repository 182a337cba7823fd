mod common;

use csc_sim::contract::{
    write_settlement_csv, AccountId, Amount, ContractConfig, ContractError, ContractSim, FeedKey,
    Ledger, Phase,
};
use csc_sim::mechanism::payments;
use csc_sim::model::{normalize_types, GameParams, RewardScheme};

use common::{committed_sim, fuzz_sequence, guard_checks, KEY, TARGET};

#[test]
fn fuzzed_sequences_conserve_value() {
    for seed in 10_000..10_200 {
        fuzz_sequence(seed).unwrap();
    }
}

#[test]
fn guards_reject_out_of_order_operations() {
    guard_checks().unwrap();
}

#[test]
fn happy_path_pays_the_mechanism() {
    let (mut sim, params) = committed_sim();
    let before = sim.total_value();
    sim.set_time(5).unwrap();
    let feed = sim.run_attack_phase(&params).unwrap();
    sim.set_time(11).unwrap();
    let report = sim.reward_allocation(Some(&feed), &params).unwrap();
    assert_eq!(sim.state().phase, Phase::Settled);
    assert_eq!(sim.state().escrow, Amount::ZERO);
    assert_eq!(sim.total_value(), before);

    let profile = normalize_types(&[30.0, 20.0], 100.0).unwrap();
    let outcome = payments(&profile, RewardScheme::Linear, &params);
    assert_eq!(report.attack_result, outcome.attack_result());
    for (entry, p) in report.entries.iter().zip(&outcome.payments) {
        assert!((entry.payment - p).abs() < 1e-9);
    }
    let residual = 100.0 - outcome.total_payment();
    assert!((report.sponsor_residual - residual).abs() < 1e-9);
    // four accepted transactions, one fee each
    assert_eq!(sim.accepted_transactions(), 4);
    assert_eq!(sim.ledger().fee_sink(), Amount::from_currency(0.4));

    let mut csv = Vec::new();
    write_settlement_csv(&report, &mut csv).unwrap();
    // header, two attackers, sponsor residual
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
}

#[test]
fn repeated_bets_from_one_account_count_once() {
    let mut sim = ContractSim::new(
        Ledger::new([
            (AccountId(0), 100.0),
            (AccountId(1), 50.0),
            (AccountId(2), 50.0),
        ]),
        ContractConfig::default(),
        FeedKey::new(KEY),
    );
    sim.init_contract(AccountId(0), 100.0, TARGET, 2, 4, 0.0)
        .unwrap();
    sim.commit_bet(AccountId(1), 10.0).unwrap();
    sim.commit_bet(AccountId(2), 15.0).unwrap();
    sim.commit_bet(AccountId(1), 5.0).unwrap();
    let grouped = sim.state().bets_by_account();
    assert_eq!(grouped.len(), 2);
    assert_eq!(grouped[0], (AccountId(1), Amount::from_currency(15.0)));

    let params = GameParams::from_gamma(100.0, 2.0, 0.35, 0.0).unwrap();
    sim.set_time(2).unwrap();
    let feed = sim.run_attack_phase(&params).unwrap();
    sim.set_time(5).unwrap();
    let report = sim.reward_allocation(Some(&feed), &params).unwrap();
    assert_eq!(report.entries[0].transactions, 2);
    let rewards: Amount = sim
        .state()
        .bettings
        .iter()
        .filter(|b| b.account == AccountId(1))
        .map(|b| b.reward)
        .sum();
    assert_eq!(rewards, Amount::from_currency(report.entries[0].reward));
}

#[test]
fn no_bets_refunds_the_sponsor() {
    let mut sim = ContractSim::new(
        Ledger::new([(AccountId(0), 100.0)]),
        ContractConfig {
            fee: 0.5,
            ..ContractConfig::default()
        },
        FeedKey::new(KEY),
    );
    sim.init_contract(AccountId(0), 100.0, TARGET, 1, 2, 0.0)
        .unwrap();
    let params = GameParams::from_gamma(100.0, 2.0, 0.35, 0.5).unwrap();
    sim.set_time(1).unwrap();
    assert_eq!(sim.run_attack_phase(&params), Err(ContractError::NoBets));
    sim.set_time(3).unwrap();
    let report = sim.reward_allocation(None, &params).unwrap();
    assert_eq!(report.sponsor_residual, 100.0);
    // the sponsor gets the award back less two fees
    assert_eq!(
        sim.ledger().balance(AccountId(0)),
        Amount::from_currency(99.0)
    );
}

#[test]
fn rejected_transactions_are_free_unless_configured() {
    for charge_rejected in [false, true] {
        let mut sim = ContractSim::new(
            Ledger::new([(AccountId(0), 100.0), (AccountId(1), 10.0)]),
            ContractConfig {
                fee: 0.25,
                scheme: RewardScheme::Square,
                charge_rejected,
            },
            FeedKey::new(KEY),
        );
        sim.init_contract(AccountId(0), 50.0, TARGET, 5, 6, 1.0)
            .unwrap();
        assert!(matches!(
            sim.commit_bet(AccountId(1), 0.5),
            Err(ContractError::BetTooSmall { .. })
        ));
        let expected = if charge_rejected { 9.75 } else { 10.0 };
        assert_eq!(
            sim.ledger().balance(AccountId(1)),
            Amount::from_currency(expected)
        );
    }
}

#[test]
fn mismatched_award_is_rejected() {
    let (mut sim, _) = committed_sim();
    sim.set_time(5).unwrap();
    let wrong = GameParams::from_gamma(90.0, 2.0, 0.35, 0.1).unwrap();
    assert!(matches!(
        sim.run_attack_phase(&wrong),
        Err(ContractError::ParamMismatch(_))
    ));
}

#[test]
fn trace_records_every_operation() {
    let (mut sim, _) = committed_sim();
    let _ = sim.commit_bet(AccountId(1), 0.5);
    let mut csv = Vec::new();
    sim.write_trace_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().last().unwrap().contains("rejected"));
}
