//! Scenario configuration files.
//!
//! Flat TOML keys:
//!
//! | key                | meaning                                              | default    |
//! |--------------------|------------------------------------------------------|------------|
//! | `n`                | number of attackers                                  | 30         |
//! | `award`            | sponsor deposit                                      | 100        |
//! | `e_max`            | traffic pole, in units of the required traffic       | 2.0        |
//! | `gamma`            | `cost(1) / award` (exclusive with `cost_factor_c`)   | 0.35       |
//! | `cost_factor_c`    | cost factor `c` (exclusive with `gamma`)             | unset      |
//! | `fee_delta`        | fee per transaction                                  | 0.1        |
//! | `scheme`           | `linear` or `square`                                 | `square`   |
//! | `distribution`     | bet distribution, only `uniform`                     | `uniform`  |
//! | `min_to_max_ratio` | `bet_max / bet_min` of the raw draws                 | 10         |
//! | `theta`            | `bet_t / award`; draws are rescaled to hit it        | 1.0        |
//! | `replicates`       | profiles averaged per sweep point                    | 50         |
//! | `seed`             | base seed                                            | 42         |
//! | `sweep_parameter`  | `theta`, `gamma`, `n`, `fee_delta` or `e_max`        | `theta`    |
//! | `sweep_from`       | first axis value                                     | 0.1        |
//! | `sweep_to`         | last axis value                                      | 3.0        |
//! | `sweep_steps`      | number of axis points                                | 30         |
//! | `ir_threshold`     | `literal` (2 fee), `negated` (-2 fee) or a number    | `literal`  |
//! | `bets`             | explicit bet list, used by `solve` instead of draws  | unset      |

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::IrThreshold;
use crate::model::{GameParams, RewardScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Theta,
    Gamma,
    N,
    FeeDelta,
    EMax,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Theta => "theta",
            SweepParameter::Gamma => "gamma",
            SweepParameter::N => "n",
            SweepParameter::FeeDelta => "fee_delta",
            SweepParameter::EMax => "e_max",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdSpec {
    Number(f64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    n: usize,
    award: f64,
    e_max: f64,
    gamma: Option<f64>,
    cost_factor_c: Option<f64>,
    fee_delta: f64,
    scheme: RewardScheme,
    distribution: Distribution,
    min_to_max_ratio: f64,
    theta: f64,
    replicates: u64,
    seed: u64,
    sweep_parameter: SweepParameter,
    sweep_from: f64,
    sweep_to: f64,
    sweep_steps: usize,
    ir_threshold: ThresholdSpec,
    bets: Option<Vec<f64>>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            n: 30,
            award: 100.0,
            e_max: 2.0,
            gamma: None,
            cost_factor_c: None,
            fee_delta: 0.1,
            scheme: RewardScheme::Square,
            distribution: Distribution::Uniform,
            min_to_max_ratio: 10.0,
            theta: 1.0,
            replicates: 50,
            seed: 42,
            sweep_parameter: SweepParameter::Theta,
            sweep_from: 0.1,
            sweep_to: 3.0,
            sweep_steps: 30,
            ir_threshold: ThresholdSpec::Name("literal".into()),
            bets: None,
        }
    }
}

/// How the cost side is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CostSpec {
    Gamma(f64),
    Factor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepAxis {
    /// Evenly spaced axis values, endpoints included, rounded to 1e-12 so
    /// that `0.1..3.0` yields `0.3` rather than `0.30000000000000004`.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                let f = k as f64 / last;
                let v = self.from * (1.0 - f) + self.to * f;
                (v * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub award: f64,
    pub e_max: f64,
    pub cost: CostSpec,
    pub fee_delta: f64,
    pub scheme: RewardScheme,
    pub distribution: Distribution,
    pub min_to_max_ratio: f64,
    pub theta: f64,
    pub replicates: u64,
    pub seed: u64,
    pub axis: SweepAxis,
    pub ir_threshold: IrThreshold,
    pub bets: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

impl ScenarioConfig {
    fn from_raw(raw: RawConfig) -> Result<Self> {
        let cost = match (raw.gamma, raw.cost_factor_c) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `gamma` or `cost_factor_c`, not both".into(),
                ))
            }
            (Some(g), None) => CostSpec::Gamma(g),
            (None, Some(c)) => CostSpec::Factor(c),
            (None, None) => CostSpec::Gamma(0.35),
        };
        let ir_threshold = match raw.ir_threshold {
            ThresholdSpec::Number(v) => IrThreshold::Fixed(v),
            ThresholdSpec::Name(s) => s.parse()?,
        };
        let cfg = Self {
            n: raw.n,
            award: raw.award,
            e_max: raw.e_max,
            cost,
            fee_delta: raw.fee_delta,
            scheme: raw.scheme,
            distribution: raw.distribution,
            min_to_max_ratio: raw.min_to_max_ratio,
            theta: raw.theta,
            replicates: raw.replicates,
            seed: raw.seed,
            axis: SweepAxis {
                parameter: raw.sweep_parameter,
                from: raw.sweep_from,
                to: raw.sweep_to,
                steps: raw.sweep_steps,
            },
            ir_threshold,
            bets: raw.bets,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if !(self.theta > 0.0) {
            return fail(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.min_to_max_ratio >= 1.0) {
            return fail(format!(
                "min_to_max_ratio must be at least 1, got {}",
                self.min_to_max_ratio
            ));
        }
        if self.axis.steps == 0 || !(self.axis.from <= self.axis.to) {
            return fail(format!(
                "empty sweep range {}..{} with {} steps",
                self.axis.from, self.axis.to, self.axis.steps
            ));
        }
        if let Some(bets) = &self.bets {
            if bets.is_empty() {
                return fail("`bets` must not be empty".into());
            }
        }
        self.params()?;
        Ok(())
    }

    pub fn params(&self) -> Result<GameParams> {
        match self.cost {
            CostSpec::Gamma(g) => GameParams::from_gamma(self.award, self.e_max, g, self.fee_delta),
            CostSpec::Factor(c) => GameParams::new(self.award, self.e_max, c, self.fee_delta),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self.cost {
            CostSpec::Gamma(g) => g,
            CostSpec::Factor(_) => self.params().map(|p| p.gamma()).unwrap_or(f64::NAN),
        }
    }

    /// Copy of the config with one axis parameter set.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match parameter {
            SweepParameter::Theta => c.theta = value,
            SweepParameter::Gamma => c.cost = CostSpec::Gamma(value),
            SweepParameter::N => {
                if !(value >= 1.0) {
                    return Err(Error::Config(format!("n must be at least 1, got {value}")));
                }
                c.n = value.round() as usize;
            }
            SweepParameter::FeeDelta => c.fee_delta = value,
            SweepParameter::EMax => c.e_max = value,
        }
        c.validate()?;
        Ok(c)
    }

    pub fn value_of(&self, parameter: SweepParameter) -> f64 {
        match parameter {
            SweepParameter::Theta => self.theta,
            SweepParameter::Gamma => self.gamma(),
            SweepParameter::N => self.n as f64,
            SweepParameter::FeeDelta => self.fee_delta,
            SweepParameter::EMax => self.e_max,
        }
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }
}
