use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use csc_sim::experiments::{
    figure_suite, property_suite, sample_bets, sweep, with_threads, write_figures,
    write_property_csv, write_rows_csv, FigureGrid, ScenarioConfig,
};
use csc_sim::mechanism::{
    check_budget, check_ex_post_ir_outcome, fairness_of, payments, quasi_utility,
};
use csc_sim::model::{normalize_types, RewardScheme};

#[derive(Parser, Debug)]
#[command(
    name = "csc-sim",
    version,
    about = "Equilibrium, payments and property checks for the collaborative-attack incentive mechanism"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config (flat TOML keys); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; `solve`, `sweep` and `check` print to stdout without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the reward scheme.
    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Option<RewardScheme>,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one scenario and print the outcome.
    Solve,
    /// Run the configured sweep and emit CSV.
    Sweep,
    /// Emit every default figure panel as CSV.
    Figures,
    /// Run the property suite; exits nonzero naming any failing check.
    Check,
}

fn parse_scheme(s: &str) -> Result<RewardScheme, String> {
    s.parse().map_err(|e: csc_sim::Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(scheme) = cli.scheme {
        cfg.scheme = scheme;
    }
    Ok(cfg)
}

fn output(out: Option<&Path>, file: &str) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            Box::new(BufWriter::new(
                File::create(&path).with_context(|| format!("creating {}", path.display()))?,
            ))
        }
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct SolveReport {
    scheme: RewardScheme,
    award: f64,
    e_max: f64,
    cost_factor: f64,
    gamma: f64,
    fee: f64,
    theta: f64,
    types: Vec<f64>,
    efforts: Vec<f64>,
    raw_total: f64,
    attack_result: f64,
    payments: Vec<f64>,
    total_payment: f64,
    sponsor_residual: f64,
    budget_slack: f64,
    within_budget: bool,
    fairness: f64,
    quasi_utilities: Vec<f64>,
    ir_threshold: f64,
    ir_pass: Vec<bool>,
}

fn solve(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params()?;
    let profile = match &cfg.bets {
        Some(bets) => normalize_types(bets, cfg.award)?,
        None => sample_bets(cfg, 0)?,
    };
    let outcome = payments(&profile, cfg.scheme, &params);
    let budget = check_budget(&outcome, &params);
    let threshold = cfg.ir_threshold.value(&params);
    let report = SolveReport {
        scheme: cfg.scheme,
        award: params.award(),
        e_max: params.e_max(),
        cost_factor: params.cost_factor(),
        gamma: params.gamma(),
        fee: params.fee(),
        theta: profile.theta(),
        types: profile.types().to_vec(),
        efforts: outcome.equilibrium.efforts.clone(),
        raw_total: outcome.equilibrium.raw_total,
        attack_result: outcome.attack_result(),
        payments: outcome.payments.clone(),
        total_payment: outcome.total_payment(),
        sponsor_residual: outcome.sponsor_residual(&params),
        budget_slack: budget.slack,
        within_budget: budget.within_budget,
        fairness: fairness_of(&outcome, &params),
        quasi_utilities: (0..profile.len())
            .map(|i| quasi_utility(&profile, i, 1, cfg.scheme, &params))
            .collect::<csc_sim::Result<_>>()?,
        ir_threshold: threshold,
        ir_pass: check_ex_post_ir_outcome(&outcome, &params, threshold),
    };
    let mut w = output(out, "solve.json")?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Solve => solve(&cfg, out)?,
        Command::Sweep => {
            let rows = with_threads(cli.threads, || sweep(&cfg))??;
            write_rows_csv(&rows, output(out, "sweep.csv")?)?;
        }
        Command::Figures => {
            let files = with_threads(cli.threads, || figure_suite(&cfg, &FigureGrid::default()))??;
            let dir = out.unwrap_or(Path::new("figures"));
            write_figures(&files, dir)?;
            eprintln!("wrote {} panels to {}", files.len(), dir.display());
        }
        Command::Check => {
            let rows = with_threads(cli.threads, || property_suite(&cfg))??;
            write_property_csv(&rows, output(out, "checks.csv")?)?;
            let failed: BTreeSet<&str> = rows
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.check.as_str())
                .collect();
            if !failed.is_empty() {
                for check in &failed {
                    eprintln!("FAILED: {check}");
                }
                return Ok(ExitCode::from(2));
            }
            eprintln!("all {} checks passed", rows.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
