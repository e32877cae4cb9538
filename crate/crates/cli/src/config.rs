//! Experiment configuration as read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use driftcrb::{CalibrationAge, DriftParams, Interval, ParamBox, SignalSpec};

/// Problem with the configuration document itself.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(rename = "P")]
    pub order: Option<usize>,
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub sigma2: f64,
    pub gamma: f64,
    pub rho: f64,
    /// Falls back to the top-level `tau`.
    pub tau: Option<CalibrationAge>,
}

/// A range `[lo, hi]` or a single value.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Range {
    Point(f64),
    Interval(Interval),
}

impl Range {
    fn interval(self) -> Interval {
        match self {
            Range::Point(v) => Interval::point(v),
            Range::Interval(i) => i,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub rho: Range,
    pub sigma2: Range,
    pub gamma: Range,
    #[serde(rename = "M")]
    pub m: OneOrMany<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerConfig {
    #[serde(rename = "U0")]
    pub u0: f64,
    #[serde(rename = "U1")]
    pub u1: f64,
    pub bits: OneOrMany<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub rho: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
}

fn default_sigma2() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    Exact,
    ClosedSecond,
    ClosedFirst,
    FimApprox,
    All,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: Option<SignalConfig>,
    pub sensors: Option<Vec<SensorConfig>>,
    #[serde(rename = "box")]
    pub param_box: Option<BoxConfig>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<usize>>,
    pub tau: Option<OneOrMany<CalibrationAge>>,
    pub quantizer: Option<QuantizerConfig>,
    pub trials: Option<usize>,
    pub draws: Option<usize>,
    pub epsilon: Option<f64>,
    pub mode: Option<ModeConfig>,
    pub grid: Option<GridConfig>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// Parsed configuration plus the hash of the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

pub fn load(path: &Path) -> anyhow::Result<LoadedConfig> {
    let bytes = std::fs::read(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse(&bytes)
}

pub fn parse(bytes: &[u8]) -> anyhow::Result<LoadedConfig> {
    let config: ExperimentConfig =
        serde_json::from_slice(bytes).map_err(|e| config_error(e.to_string()))?;
    Ok(LoadedConfig {
        config,
        sha256: hex::encode(Sha256::digest(bytes)),
    })
}

fn require<T>(value: Option<T>, key: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| config_error(format!("missing required key `{key}`")))
}

impl ExperimentConfig {
    pub fn signal(&self) -> anyhow::Result<SignalSpec> {
        let signal = require(self.signal.as_ref(), "signal")?;
        let beta = match (&signal.beta, signal.order) {
            (Some(beta), Some(p)) if beta.len() != p + 1 => {
                return Err(config_error(format!(
                    "signal.beta has {} entries but P = {p}",
                    beta.len()
                )))
            }
            (Some(beta), _) => beta.clone(),
            (None, Some(p)) => vec![0.0; p + 1],
            (None, None) => return Err(config_error("signal needs `P` or `beta`")),
        };
        Ok(SignalSpec::new(beta)?)
    }

    pub fn order(&self) -> anyhow::Result<usize> {
        Ok(self.signal()?.order())
    }

    pub fn taus(&self) -> Vec<CalibrationAge> {
        self.tau.as_ref().map(OneOrMany::to_vec).unwrap_or_default()
    }

    /// The single calibration age used where a sensor does not give its own.
    fn default_tau(&self) -> anyhow::Result<CalibrationAge> {
        match self.taus().as_slice() {
            [] => Ok(CalibrationAge::Uncalibrated),
            [tau] => Ok(*tau),
            _ => Err(config_error(
                "a list of `tau` values is not supported by this command",
            )),
        }
    }

    pub fn n_values(&self) -> anyhow::Result<Vec<usize>> {
        match (self.n, &self.n_list) {
            (Some(_), Some(_)) => Err(config_error("give either `N` or `N_list`, not both")),
            (Some(n), None) => Ok(vec![n]),
            (None, Some(list)) if !list.is_empty() => Ok(list.clone()),
            _ => Err(config_error("missing required key `N` or `N_list`")),
        }
    }

    pub fn single_n(&self) -> anyhow::Result<usize> {
        match self.n_values()?.as_slice() {
            [n] => Ok(*n),
            _ => Err(config_error("this command takes a single `N`")),
        }
    }

    pub fn box_config(&self) -> anyhow::Result<&BoxConfig> {
        require(self.param_box.as_ref(), "box")
    }

    pub fn param_box(&self, tau: CalibrationAge) -> anyhow::Result<ParamBox> {
        let b = self.box_config()?;
        let param_box = ParamBox {
            rho: b.rho.interval(),
            sigma2: b.sigma2.interval(),
            gamma: b.gamma.interval(),
            tau,
        };
        param_box.validate()?;
        Ok(param_box)
    }

    /// Explicit sensors, or `M` sensors spread evenly over the box for each `tau`.
    /// Each entry pairs a label for the calibration setting with its sensors.
    pub fn sensor_sets(&self) -> anyhow::Result<Vec<(String, Vec<DriftParams>)>> {
        match (&self.sensors, &self.param_box) {
            (Some(_), Some(_)) => Err(config_error("give either `sensors` or `box`, not both")),
            (Some(list), None) => {
                if list.is_empty() {
                    return Err(config_error("`sensors` is empty"));
                }
                let tau = self.default_tau()?;
                let sensors = list
                    .iter()
                    .map(|s| DriftParams::new(s.sigma2, s.gamma, s.rho, s.tau.unwrap_or(tau)))
                    .collect::<Result<Vec<_>, _>>()?;
                let label = if list.iter().all(|s| s.tau.is_none()) {
                    tau.to_string()
                } else {
                    "per-sensor".to_string()
                };
                Ok(vec![(label, sensors)])
            }
            (None, Some(b)) => {
                let m = match b.m.to_vec().as_slice() {
                    [m] => *m,
                    _ => return Err(config_error("this command takes a single `box.M`")),
                };
                self.box_taus()?
                    .into_iter()
                    .map(|tau| Ok((tau.to_string(), self.param_box(tau)?.evenly_spaced(m))))
                    .collect()
            }
            (None, None) => Err(config_error("missing required key `sensors` or `box`")),
        }
    }

    /// Calibration ages to sweep for a box; both extremes by default when the
    /// box is stationary, calibrated only for random-walk drift.
    pub fn box_taus(&self) -> anyhow::Result<Vec<CalibrationAge>> {
        let taus = self.taus();
        if !taus.is_empty() {
            return Ok(taus);
        }
        let rho = self.box_config()?.rho.interval();
        Ok(if rho.hi < 1.0 {
            vec![CalibrationAge::CALIBRATED, CalibrationAge::Uncalibrated]
        } else {
            vec![CalibrationAge::CALIBRATED]
        })
    }

    pub fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    pub fn epsilon(&self) -> anyhow::Result<f64> {
        let eps = self.epsilon.unwrap_or(0.05);
        if !(eps > 0.0 && eps < 1.0) {
            return Err(config_error(format!(
                "epsilon must lie in (0, 1), got {eps}"
            )));
        }
        Ok(eps)
    }

    pub fn quantizer(&self) -> anyhow::Result<&QuantizerConfig> {
        require(self.quantizer.as_ref(), "quantizer")
    }

    pub fn grid(&self) -> anyhow::Result<&GridConfig> {
        require(self.grid.as_ref(), "grid")
    }
}
