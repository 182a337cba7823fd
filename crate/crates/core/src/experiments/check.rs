//! Property suite run by the `check` command.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::sweep::{check_outcome, replicate_rng, sample_bets};
use crate::equilibrium::verify_dominance;
use crate::error::Result;
use crate::mechanism::{check_budget, check_dsic_split, fairness_of, payments, PropertyRow};
use crate::model::{RewardScheme, CURRENCY_TOL};

const DOMINANCE_GRID: f64 = 1e-3;

fn row(scenario: &str, check: &str, passed: bool, value: f64) -> PropertyRow {
    PropertyRow {
        scenario: scenario.to_owned(),
        check: check.to_owned(),
        passed,
        value,
    }
}

fn replicate_rows(config: &ScenarioConfig, replicate: u64) -> Result<Vec<PropertyRow>> {
    let params = config.params()?;
    let profile = sample_bets(config, replicate)?;
    let mut rng = replicate_rng(config.seed ^ 0xC0FF_EE00, config.n, replicate);
    let mut rows = Vec::new();

    for scheme in RewardScheme::ALL {
        let scenario = format!("{scheme}/r{replicate}");
        let outcome = payments(&profile, scheme, &params);
        let budget = check_budget(&outcome, &params);
        rows.push(row(&scenario, "budget", budget.within_budget, budget.slack));
        let consistency = check_outcome(&outcome, &profile, &params);
        rows.push(row(
            &scenario,
            "payment_identity_and_floor",
            consistency.is_ok(),
            outcome.total_payment(),
        ));
        let d = fairness_of(&outcome, &params);
        rows.push(row(&scenario, "fairness_nonnegative", d >= 0.0, d));

        let mut worst = 0.0_f64;
        for i in 0..profile.len() {
            let opponents: Vec<f64> = (1..profile.len()).map(|_| rng.gen::<f64>()).collect();
            let r = verify_dominance(&profile, i, &opponents, DOMINANCE_GRID, scheme, &params)?;
            worst = worst.max(r.max_violation);
        }
        rows.push(row(&scenario, "dominance", worst <= 1e-9, worst));
    }

    // strategy-proofness holds with equality only under the linear scheme
    let scenario = format!("linear/r{replicate}");
    let mut worst = 0.0_f64;
    for i in 0..profile.len() {
        let t = profile.types()[i];
        for k in 2..=5usize {
            let parts = vec![t / k as f64; k];
            let r = check_dsic_split(&profile, i, &parts, RewardScheme::Linear, &params)?;
            let expected = (k - 1) as f64 * params.fee();
            worst = worst.max((r.gap - expected).abs());
        }
    }
    rows.push(row(
        &scenario,
        "strategy_proof_split",
        worst <= CURRENCY_TOL,
        worst,
    ));
    Ok(rows)
}

pub fn property_suite(config: &ScenarioConfig) -> Result<Vec<PropertyRow>> {
    let per_rep: Vec<Result<Vec<PropertyRow>>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| replicate_rows(config, r))
        .collect();
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_property_csv<W: Write>(rows: &[PropertyRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
