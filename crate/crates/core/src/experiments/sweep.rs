//! Seeded bet sampling and parameter sweeps.

use std::io::Write;

use rand::distributions::{Distribution as _, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Distribution, ScenarioConfig, SweepParameter};
use crate::error::{Error, Result};
use crate::mechanism::{check_budget, check_ex_post_ir_outcome, fairness_of, payments, Outcome};
use crate::model::{normalize_types, GameParams, TypeProfile, CURRENCY_TOL};

/// Random stream for one replicate. The stream depends on the seed, the
/// number of attackers and the replicate index only, so every point of a
/// theta or gamma sweep sees the same raw draws.
pub fn replicate_rng(seed: u64, n: usize, replicate: u64) -> ChaCha8Rng {
    let key = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(replicate);
    rng
}

/// Raw bets before rescaling, drawn from `Uni(1, min_to_max_ratio)`.
pub fn sample_raw_bets(config: &ScenarioConfig, replicate: u64) -> Vec<f64> {
    let mut rng = replicate_rng(config.seed, config.n, replicate);
    match config.distribution {
        Distribution::Uniform => {
            let dist = Uniform::new_inclusive(1.0, config.min_to_max_ratio);
            (0..config.n).map(|_| dist.sample(&mut rng)).collect()
        }
    }
}

/// Draws a bet profile and rescales it so the bets sum to `theta * award`.
pub fn sample_bets(config: &ScenarioConfig, replicate: u64) -> Result<TypeProfile> {
    let raw = sample_raw_bets(config, replicate);
    let sum: f64 = raw.iter().sum();
    let scale = config.theta * config.award / sum;
    let bets: Vec<f64> = raw.iter().map(|b| b * scale).collect();
    normalize_types(&bets, config.award).map_err(|e| {
        Error::Config(format!(
            "replicate {replicate} (seed {}): rescaled bets invalid: {e}",
            config.seed
        ))
    })
}

/// Statistics of one sampled profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub attack_result: f64,
    /// `sum(payments) / award`; negative when attackers lose on net.
    pub payout_share: f64,
    /// Part of the award that ends up with the attackers,
    /// `max(0, sum(payments)) / award`.
    pub award_share: f64,
    /// Mean payment over mean bet, `sum(payments) / bet_t`.
    pub profit_to_bet: f64,
    pub fairness: f64,
    pub ir_fraction: f64,
    /// Cost of the delivered traffic over the award.
    pub cost_ratio: f64,
}

fn violation(
    check: &'static str,
    config: &ScenarioConfig,
    replicate: u64,
    detail: String,
) -> Error {
    Error::InvariantViolation {
        check,
        seed: config.seed,
        replicate,
        detail,
    }
}

/// Budget, payment identity and payment floor for one outcome.
pub fn check_outcome(
    outcome: &Outcome,
    profile: &TypeProfile,
    params: &GameParams,
) -> std::result::Result<(), (&'static str, String)> {
    let budget = check_budget(outcome, params);
    if !budget.within_budget {
        return Err(("budget", format!("slack {}", budget.slack)));
    }
    let bet_t = profile.bet_total(params.award());
    let expected = (bet_t + params.award()) * outcome.attack_result() - bet_t;
    if (outcome.total_payment() - expected).abs() > CURRENCY_TOL {
        return Err((
            "payment_identity",
            format!("sum {} against {}", outcome.total_payment(), expected),
        ));
    }
    for (i, (p, t)) in outcome.payments.iter().zip(profile.types()).enumerate() {
        if *p < -t * params.award() - CURRENCY_TOL {
            return Err(("payment_floor", format!("attacker {i} pays {p}")));
        }
    }
    Ok(())
}

pub fn evaluate_replicate(config: &ScenarioConfig, replicate: u64) -> Result<ReplicateMetrics> {
    let params = config.params()?;
    let profile = sample_bets(config, replicate)?;
    let outcome = payments(&profile, config.scheme, &params);
    check_outcome(&outcome, &profile, &params)
        .map_err(|(check, detail)| violation(check, config, replicate, detail))?;

    let threshold = config.ir_threshold.value(&params);
    let ir = check_ex_post_ir_outcome(&outcome, &params, threshold);
    let total = outcome.total_payment();
    let mut cost = 0.0;
    for e in outcome.equilibrium.delivered_efforts() {
        cost += params.cost(e)?;
    }
    Ok(ReplicateMetrics {
        attack_result: outcome.attack_result(),
        payout_share: total / params.award(),
        award_share: total.max(0.0) / params.award(),
        profit_to_bet: total / profile.bet_total(params.award()),
        fairness: fairness_of(&outcome, &params),
        ir_fraction: ir.iter().filter(|ok| **ok).count() as f64 / ir.len() as f64,
        cost_ratio: cost / params.award(),
    })
}

/// One point of a sweep, averaged over the replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub scheme: String,
    pub n: usize,
    pub theta: f64,
    pub gamma: f64,
    pub mean_attack_result: f64,
    pub mean_payout_share: f64,
    pub mean_award_share: f64,
    pub mean_profit_to_bet: f64,
    pub mean_fairness: f64,
    pub ir_pass_fraction: f64,
    pub mean_cost_ratio: f64,
    pub replicates: u64,
    pub seed: u64,
}

fn mean(xs: impl Iterator<Item = f64>, count: usize) -> f64 {
    xs.sum::<f64>() / count as f64
}

fn summarize(
    config: &ScenarioConfig,
    parameter: SweepParameter,
    value: f64,
    metrics: &[ReplicateMetrics],
) -> SweepRow {
    let k = metrics.len();
    SweepRow {
        parameter: parameter.to_string(),
        value,
        scheme: config.scheme.to_string(),
        n: config.n,
        theta: config.theta,
        gamma: config.gamma(),
        mean_attack_result: mean(metrics.iter().map(|m| m.attack_result), k),
        mean_payout_share: mean(metrics.iter().map(|m| m.payout_share), k),
        mean_award_share: mean(metrics.iter().map(|m| m.award_share), k),
        mean_profit_to_bet: mean(metrics.iter().map(|m| m.profit_to_bet), k),
        mean_fairness: mean(metrics.iter().map(|m| m.fairness), k),
        ir_pass_fraction: mean(metrics.iter().map(|m| m.ir_fraction), k),
        mean_cost_ratio: mean(metrics.iter().map(|m| m.cost_ratio), k),
        replicates: config.replicates,
        seed: config.seed,
    }
}

/// Averages `replicates` draws at every point of the given configs. Work is
/// spread over the current rayon pool; rows come back in input order and
/// every mean is summed in replicate order, so the output does not depend
/// on the thread count.
pub fn run_points(points: &[(ScenarioConfig, SweepParameter, f64)]) -> Result<Vec<SweepRow>> {
    let tasks: Vec<(usize, u64)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, (cfg, _, _))| (0..cfg.replicates).map(move |r| (p, r)))
        .collect();
    let results: Vec<Result<ReplicateMetrics>> = tasks
        .par_iter()
        .map(|&(p, r)| evaluate_replicate(&points[p].0, r))
        .collect();

    let mut results = results.into_iter();
    let mut rows = Vec::with_capacity(points.len());
    for (cfg, parameter, value) in points {
        let metrics = results
            .by_ref()
            .take(cfg.replicates as usize)
            .collect::<Result<Vec<_>>>()?;
        rows.push(summarize(cfg, *parameter, *value, &metrics));
    }
    Ok(rows)
}

pub fn sweep(config: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    let parameter = config.axis.parameter;
    let points = config
        .axis
        .values()
        .into_iter()
        .map(|v| Ok((config.with_parameter(parameter, v)?, parameter, v)))
        .collect::<Result<Vec<_>>>()?;
    run_points(&points)
}

/// Runs `f` on a dedicated pool with the given number of threads, or on the
/// global pool when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn write_rows_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
