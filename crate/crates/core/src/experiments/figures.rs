//! The default figure panels.
//!
//! | file            | grid                         | columns                                          |
//! |-----------------|------------------------------|--------------------------------------------------|
//! | `fig3a.csv`     | theta, both schemes          | theta, scheme, mean_attack_result                |
//! | `fig3b.csv`     | theta, both schemes          | theta, scheme, mean_award_share, mean_payout_share |
//! | `fig3c.csv`     | theta, both schemes          | theta, scheme, mean_fairness                     |
//! | `fig4a.csv`     | gamma x theta, both schemes  | gamma, theta, scheme, mean_attack_result         |
//! | `fig4b.csv`     | gamma x theta, both schemes  | gamma, theta, scheme, mean_profit_to_bet, ir_pass_fraction |
//! | `fig5_cost.csv` | gamma x theta, both schemes  | gamma, theta, scheme, mean_cost_ratio            |
//! | `fig5.csv`      | n x theta, both schemes      | n, theta, scheme, mean_attack_result             |

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SweepAxis, SweepParameter};
use super::sweep::{run_points, SweepRow};
use crate::error::{Error, Result};
use crate::model::RewardScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureGrid {
    pub thetas: SweepAxis,
    pub gammas: Vec<f64>,
    pub attacker_counts: Vec<usize>,
    /// Theta axis of the attacker-count panel. Kept low enough that the
    /// largest rescaled bet of five attackers stays below the award.
    pub attacker_thetas: SweepAxis,
}

impl Default for FigureGrid {
    fn default() -> Self {
        Self {
            thetas: SweepAxis {
                parameter: SweepParameter::Theta,
                from: 0.1,
                to: 3.0,
                steps: 30,
            },
            gammas: vec![0.30, 0.35, 0.40, 0.45, 0.50],
            attacker_counts: vec![5, 10, 20, 30, 40, 50, 60],
            attacker_thetas: SweepAxis {
                parameter: SweepParameter::Theta,
                from: 0.2,
                to: 1.4,
                steps: 13,
            },
        }
    }
}

/// Sweep rows behind every panel.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    /// theta sweep at the base gamma.
    pub theta_rows: Vec<SweepRow>,
    /// gamma x theta.
    pub gamma_rows: Vec<SweepRow>,
    /// n x theta at the base gamma.
    pub attacker_rows: Vec<SweepRow>,
}

type Point = (ScenarioConfig, SweepParameter, f64);

fn point(base: &ScenarioConfig, scheme: RewardScheme, theta: f64) -> Result<Point> {
    let mut cfg = base.with_parameter(SweepParameter::Theta, theta)?;
    cfg.scheme = scheme;
    Ok((cfg, SweepParameter::Theta, theta))
}

pub fn figure_data(base: &ScenarioConfig, grid: &FigureGrid) -> Result<FigureData> {
    let mut theta_points = Vec::new();
    let mut gamma_points = Vec::new();
    let mut attacker_points = Vec::new();
    for scheme in RewardScheme::ALL {
        for theta in grid.thetas.values() {
            theta_points.push(point(base, scheme, theta)?);
        }
        for &gamma in &grid.gammas {
            let cfg = base.with_parameter(SweepParameter::Gamma, gamma)?;
            for theta in grid.thetas.values() {
                gamma_points.push(point(&cfg, scheme, theta)?);
            }
        }
        for &n in &grid.attacker_counts {
            let cfg = base.with_parameter(SweepParameter::N, n as f64)?;
            for theta in grid.attacker_thetas.values() {
                attacker_points.push(point(&cfg, scheme, theta)?);
            }
        }
    }
    Ok(FigureData {
        theta_rows: run_points(&theta_points)?,
        gamma_rows: run_points(&gamma_points)?,
        attacker_rows: run_points(&attacker_points)?,
    })
}

type Column = (&'static str, fn(&SweepRow) -> String);

fn panel(rows: &[SweepRow], columns: &[Column]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(columns.iter().map(|c| c.0)).map_err(io)?;
    for r in rows {
        w.write_record(columns.iter().map(|c| (c.1)(r)))
            .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const THETA: Column = ("theta", |r| r.theta.to_string());
const GAMMA: Column = ("gamma", |r| r.gamma.to_string());
const N: Column = ("n", |r| r.n.to_string());
const SCHEME: Column = ("scheme", |r| r.scheme.clone());
const RESULT: Column = ("mean_attack_result", |r| r.mean_attack_result.to_string());

/// Renders every panel as `(file name, csv text)`.
pub fn render(data: &FigureData) -> Result<Vec<(String, String)>> {
    let panels: [(&str, &[SweepRow], Vec<Column>); 7] = [
        ("fig3a.csv", &data.theta_rows, vec![THETA, SCHEME, RESULT]),
        (
            "fig3b.csv",
            &data.theta_rows,
            vec![
                THETA,
                SCHEME,
                ("mean_award_share", |r| r.mean_award_share.to_string()),
                ("mean_payout_share", |r| r.mean_payout_share.to_string()),
            ],
        ),
        (
            "fig3c.csv",
            &data.theta_rows,
            vec![
                THETA,
                SCHEME,
                ("mean_fairness", |r| r.mean_fairness.to_string()),
            ],
        ),
        (
            "fig4a.csv",
            &data.gamma_rows,
            vec![GAMMA, THETA, SCHEME, RESULT],
        ),
        (
            "fig4b.csv",
            &data.gamma_rows,
            vec![
                GAMMA,
                THETA,
                SCHEME,
                ("mean_profit_to_bet", |r| r.mean_profit_to_bet.to_string()),
                ("ir_pass_fraction", |r| r.ir_pass_fraction.to_string()),
            ],
        ),
        (
            "fig5_cost.csv",
            &data.gamma_rows,
            vec![
                GAMMA,
                THETA,
                SCHEME,
                ("mean_cost_ratio", |r| r.mean_cost_ratio.to_string()),
            ],
        ),
        (
            "fig5.csv",
            &data.attacker_rows,
            vec![N, THETA, SCHEME, RESULT],
        ),
    ];
    panels
        .into_iter()
        .map(|(name, rows, cols)| Ok((name.to_owned(), panel(rows, &cols)?)))
        .collect()
}

pub fn figure_suite(base: &ScenarioConfig, grid: &FigureGrid) -> Result<Vec<(String, String)>> {
    render(&figure_data(base, grid)?)
}

pub fn write_figures(files: &[(String, String)], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", out_dir.display())))?;
    for (name, text) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
